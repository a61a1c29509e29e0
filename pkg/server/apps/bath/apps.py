from django.apps import AppConfig


class BathConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.bath'
