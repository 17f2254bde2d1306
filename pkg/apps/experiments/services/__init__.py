# Experiment services
