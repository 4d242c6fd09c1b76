# ebsum/checks.py
from django.core.checks import Error, register

from .conf import ebsum_settings


@register()
def check_ebsum_settings(app_configs, **kwargs):
    errors = []
    if not ebsum_settings.EPS > 0:
        errors.append(Error("EBSUM['EPS'] must be positive.", id="ebsum.E001"))
    if not 0 < ebsum_settings.TIE_TOL <= 1e-6:
        errors.append(Error("EBSUM['TIE_TOL'] must lie in (0, 1e-6].", id="ebsum.E002"))
    if ebsum_settings.PSD_COEFF_CAP <= 0 or ebsum_settings.SCAN_NMAX <= 0:
        errors.append(Error("EBSUM caps must be positive integers.", id="ebsum.E003"))
    if ebsum_settings.DEFAULT_FORMAT not in ("csv", "json"):
        errors.append(
            Error("EBSUM['DEFAULT_FORMAT'] must be 'csv' or 'json'.", id="ebsum.E004")
        )
    return errors
