# ebsum/apps.py
from django.apps import AppConfig


class EbsumConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'ebsum'
    verbose_name = 'Extended Bernoulli sums'

    def ready(self):
        from . import checks  # noqa: F401  registers the settings checks
