from django.apps import AppConfig


class BoundstatesConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.boundstates'
