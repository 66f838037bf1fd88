from django.apps import AppConfig


class GarkConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'gark'
    verbose_name = 'GARK tableaux'
