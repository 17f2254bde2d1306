# Experiments app
