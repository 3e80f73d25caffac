"""
Django settings for the photon_strings project.

The project has no HTTP surface: Django provides configuration, the ORM for
the run ledger, the management-command CLI and the test runner.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/5.2/ref/settings/
"""

import math
from pathlib import Path
from decouple import config

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: Django refuses to start without a key; nothing is signed with it here
SECRET_KEY = config('SECRET_KEY', default='django-insecure-photon-strings-local-key')

DEBUG = config('DEBUG', default=False, cast=bool)


# Application definition

INSTALLED_APPS = [
    'simulator',
]

MIDDLEWARE = []


# Database
# https://docs.djangoproject.com/en/5.2/ref/settings/#databases

# Database configuration - supports DATABASE_URL, falls back to a local SQLite ledger
DATABASE_URL = config('DATABASE_URL', default=None)

if DATABASE_URL:
    import dj_database_url
    DATABASES = {
        'default': dj_database_url.parse(DATABASE_URL)
    }
else:
    DATABASES = {
        'default': {
            'ENGINE': 'django.db.backends.sqlite3',
            'NAME': config('DB_NAME', default=str(BASE_DIR / 'simulator.sqlite3')),
        }
    }


# Internationalization
# https://docs.djangoproject.com/en/5.2/topics/i18n/

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True

# Default primary key field type
# https://docs.djangoproject.com/en/5.2/ref/settings/#default-auto-field

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# Logging
# Console only; the simulator logger defaults to WARNING so CSV written to stdout stays clean

LOG_LEVEL = config('LOG_LEVEL', default='WARNING')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'simple': {
            'format': '{levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'loggers': {
        'simulator': {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
    },
}


# Simulator configuration

# Default directory for command output when --out is not given
SIMULATOR_OUTPUT_DIR = Path(config('SIMULATOR_OUTPUT_DIR', default=str(BASE_DIR / 'output')))

# Record every command invocation in the SimulationRun ledger
SIMULATOR_RECORD_RUNS = config('SIMULATOR_RECORD_RUNS', default=True, cast=bool)

# Largest photon register a protocol run may request
SIMULATOR_MAX_PHOTONS = config('SIMULATOR_MAX_PHOTONS', default=12, cast=int)

# Electron-14N hyperfine coupling A in rad/s.
# PLACEHOLDER: 2.16 MHz is the commonly quoted ground-state figure, not a fitted value.
SIMULATOR_HYPERFINE_A = config('SIMULATOR_HYPERFINE_A', default=2 * math.pi * 2.16e6, cast=float)

# Shell (nm) used when a random 13C bath geometry is generated. PLACEHOLDER values.
SIMULATOR_BATH_RADIUS_NM_MIN = config('SIMULATOR_BATH_RADIUS_NM_MIN', default=1.5, cast=float)
SIMULATOR_BATH_RADIUS_NM_MAX = config('SIMULATOR_BATH_RADIUS_NM_MAX', default=3.0, cast=float)

# Efficiency presets for the rate report.
# Cavity values: 70% ZPL emission and 90% collection with a photonic-crystal cavity.
# No-cavity values are ASSUMED so that a two-photon event lands near one per ~100 s.
SIMULATOR_CAVITY_ZPL = config('SIMULATOR_CAVITY_ZPL', default=0.7, cast=float)
SIMULATOR_CAVITY_COLLECTION = config('SIMULATOR_CAVITY_COLLECTION', default=0.9, cast=float)
SIMULATOR_NOCAVITY_ZPL = config('SIMULATOR_NOCAVITY_ZPL', default=0.03, cast=float)
SIMULATOR_NOCAVITY_COLLECTION = config('SIMULATOR_NOCAVITY_COLLECTION', default=0.05, cast=float)
