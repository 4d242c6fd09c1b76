# ebsum/conf.py
from django.conf import settings

DEFAULTS = {
    "EPS": 1e-12,
    "TIE_TOL": 1e-9,
    "PSD_COEFF_CAP": 10**6,
    "SCAN_NMAX": 200,
    "DEFAULT_FORMAT": "csv",
}


class EBSumSettings:
    """Attribute access to ``settings.EBSUM`` with defaults filled in."""

    def __init__(self, defaults=None):
        self.defaults = defaults or DEFAULTS

    @property
    def user_settings(self):
        return getattr(settings, "EBSUM", {})

    def __getattr__(self, attr):
        if attr not in self.defaults:
            raise AttributeError(f"Invalid ebsum setting: '{attr}'")
        return self.user_settings.get(attr, self.defaults[attr])


ebsum_settings = EBSumSettings(DEFAULTS)
