from django.apps import AppConfig


class GreensConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.greens'
