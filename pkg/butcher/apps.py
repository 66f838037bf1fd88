from django.apps import AppConfig


class ButcherConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'butcher'
    verbose_name = 'Butcher tables'
