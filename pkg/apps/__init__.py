# Django apps
