# Scenarios app
