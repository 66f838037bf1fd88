import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'multirate.settings')
django.setup()
