# Scenario services
