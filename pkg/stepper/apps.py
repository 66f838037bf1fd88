from django.apps import AppConfig


class StepperConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'stepper'
    verbose_name = 'Multirate stepper'
