# Lets pytest collect the SimpleTestCase suites in apps/*/tests.py.
import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'config.settings.dev')
django.setup()
