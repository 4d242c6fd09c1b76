# Configure Django before pytest collects the ebsum test modules (which use
# django.test.SimpleTestCase and call_command), mirroring manage.py.
import os

import django

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "ebsum_project.settings")
django.setup()
