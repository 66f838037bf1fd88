"""
Django settings for the multirate project.

Every tunable of the numerical harness is read from the environment through
python-decouple so that studies can be reconfigured without touching code.
"""

from pathlib import Path
import os
from decouple import config, Csv


# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.environ.get(
    "DJANGO_SECRET_KEY",
    "django-insecure-multirate-harness-local-key",
)

DEBUG = config("DJANGO_DEBUG", default=False, cast=bool)

ALLOWED_HOSTS = config("DJANGO_ALLOWED_HOSTS", default="localhost", cast=Csv())

# Application definition
INSTALLED_APPS = [
    'django.contrib.auth',
    'django.contrib.contenttypes',

    # Third-party
    'rest_framework',

    # Local apps
    'core',
    'butcher',
    'gark',
    'stepper',
    'problems',
    'stability',
    'harness',
]

# No models are defined; sqlite keeps `manage.py check` happy on a bare checkout.
DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': config('MULTIRATE_DB', default=str(BASE_DIR / 'db.sqlite3')),
    }
}

LANGUAGE_CODE = 'en-us'
TIME_ZONE = os.environ.get('TIME_ZONE', 'UTC')
USE_I18N = False
USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# DRF is used for its serializers only.
REST_FRAMEWORK = {
    'UNAUTHENTICATED_USER': None,
    'DEFAULT_AUTHENTICATION_CLASSES': (),
    'DEFAULT_PERMISSION_CLASSES': (),
}

# Multirate harness
MULTIRATE_REFCACHE = config('MULTIRATE_REFCACHE', default=str(BASE_DIR / 'refcache'))
MULTIRATE_OUTPUT_DIR = config('MULTIRATE_OUTPUT_DIR', default=str(BASE_DIR / 'output'))
MULTIRATE_REF_TOL = config('MULTIRATE_REF_TOL', default=1e-11, cast=float)
MULTIRATE_REF_MAX_HALVINGS = config('MULTIRATE_REF_MAX_HALVINGS', default=24, cast=int)
MULTIRATE_CONDITION_TOL = config('MULTIRATE_CONDITION_TOL', default=1e-10, cast=float)
MULTIRATE_USE_WORKERS = config('MULTIRATE_USE_WORKERS', default=True, cast=bool)
MULTIRATE_TASK_TIMEOUT = config('MULTIRATE_TASK_TIMEOUT', default=3600, cast=int)
MULTIRATE_LOG_LEVEL = config('MULTIRATE_LOG_LEVEL', default='INFO')

# Fitted orders only use errors inside this window.
MULTIRATE_FIT_WINDOW = (1e-9, 1.0)

# Outer table name -> {m: subcycles per nonzero-width interval}. Missing
# entries fall back to ceil(m / number of nonzero-width intervals).
MULTIRATE_SUBCYCLE_SCHEDULES = {
    '38': {100: (34, 34, 34)},
    'kw3': {100: (35, 35, 35)},
}

# Problem name -> (largest h, number of halvings).
MULTIRATE_DEFAULT_H = {
    'linear': (2e-2, 7),
    'brusselator': (4e-2, 7),
    'inverter': (1e-1, 7),
    'zero': (1e-1, 4),
}

# Logging
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{asctime} {levelname} {name} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': 'WARNING',
    },
    'loggers': {
        app: {
            'handlers': ['console'],
            'level': MULTIRATE_LOG_LEVEL,
            'propagate': False,
        }
        for app in ('core', 'butcher', 'gark', 'stepper', 'problems', 'stability', 'harness')
    },
}

# Celery Configuration
CELERY_BROKER_URL = os.environ.get('REDIS_URL', 'redis://redis:6379/0')
CELERY_RESULT_BACKEND = os.environ.get('REDIS_URL', 'redis://redis:6379/0')
CELERY_ACCEPT_CONTENT = ['json']
CELERY_TASK_SERIALIZER = 'json'
CELERY_RESULT_SERIALIZER = 'json'
CELERY_TIMEZONE = TIME_ZONE
# Eager by default so a checkout without a broker runs studies in-process.
CELERY_TASK_ALWAYS_EAGER = config('CELERY_TASK_ALWAYS_EAGER', default=True, cast=bool)
CELERY_TASK_EAGER_PROPAGATES = True
