"""
Django settings for the ebsum_project project.

The project hosts a single app, ``ebsum``, whose numerical modules are driven
through ``python manage.py ebsum <subcommand>``.
"""

import os
from pathlib import Path
from dotenv import load_dotenv

# --------------------------------------------------
# Load .env file
# --------------------------------------------------
load_dotenv()

# --------------------------------------------------
# Base Directory
# --------------------------------------------------
BASE_DIR = Path(__file__).resolve().parent.parent

# --------------------------------------------------
# Security
# --------------------------------------------------
SECRET_KEY = os.getenv("SECRET_KEY", "ebsum-local-only")

DEBUG = os.getenv("DEBUG", "False") == "True"

ALLOWED_HOSTS = []

# --------------------------------------------------
# Installed Applications
# --------------------------------------------------
INSTALLED_APPS = [
    "django.contrib.contenttypes",
    "django.contrib.auth",

    # Third-party packages
    "rest_framework",

    # Your app
    "ebsum",
]

# --------------------------------------------------
# Database (unused by the numerical app; kept for the test runner)
# --------------------------------------------------
DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': BASE_DIR / 'db.sqlite3',
    }
}

# --------------------------------------------------
# REST Framework Configuration (serializers + JSON renderer only)
# --------------------------------------------------
REST_FRAMEWORK = {
    "DEFAULT_AUTHENTICATION_CLASSES": (),
    "DEFAULT_PERMISSION_CLASSES": (),
    "UNAUTHENTICATED_USER": None,
    "COERCE_DECIMAL_TO_STRING": False,
    "STRICT_JSON": True,
}

# --------------------------------------------------
# Extended Bernoulli sums configuration
# --------------------------------------------------
EBSUM = {
    "EPS": float(os.getenv("EBSUM_EPS", "1e-12")),
    "TIE_TOL": float(os.getenv("EBSUM_TIE_TOL", "1e-9")),
    "PSD_COEFF_CAP": int(os.getenv("EBSUM_PSD_COEFF_CAP", 10**6)),
    "SCAN_NMAX": int(os.getenv("EBSUM_SCAN_NMAX", 200)),
    "DEFAULT_FORMAT": os.getenv("EBSUM_FORMAT", "csv"),
}

# --------------------------------------------------
# Internationalization
# --------------------------------------------------
LANGUAGE_CODE = "en-us"
TIME_ZONE = "UTC"
USE_I18N = False
USE_TZ = True

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"

# --------------------------------------------------
# Logging (stderr; command output itself goes to stdout)
# --------------------------------------------------
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': os.getenv("EBSUM_LOG_LEVEL", "WARNING"),
    },
    'loggers': {
        'ebsum': {
            'level': os.getenv("EBSUM_LOG_LEVEL", "WARNING"),
            'propagate': True,
        },
    },
}
