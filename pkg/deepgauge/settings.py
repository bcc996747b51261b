"""
Django settings for the deepgauge project.

The project has no web surface: Django provides the configuration layer,
the run ledger (ORM), the management-command CLI and the test runner.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/4.2/ref/settings/
"""

# Build paths inside the project like this: os.path.join(BASE_DIR, ...)
import os

BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.environ.get("DEEPGAUGE_SECRET_KEY", 'REPLACE')

DEBUG = bool(os.environ.get("DEEPGAUGE_DEBUG", False))

ALLOWED_HOSTS = []

# Application definition

INSTALLED_APPS = (
    'django.contrib.contenttypes',
    'deepgauge',
)

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': os.environ.get("DEEPGAUGE_DB", os.path.join(BASE_DIR, 'db.sqlite3')),
    }
}

DEFAULT_AUTO_FIELD = 'django.db.models.AutoField'

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '%(asctime)s %(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'plain',
        },
    },
    'loggers': {
        'deepgauge': {
            'handlers': ['console'],
            'level': os.environ.get("DEEPGAUGE_LOG_LEVEL", "INFO"),
            'propagate': False,
        },
    },
}

# Training defaults of both network stages.
GAUGE_TRAINING = {
    'epochs': 500,
    'batch_size': 1024,
    'patience': 5,
    'learning_rate': 1e-3,
    'l1': 1e-4,
    'l2': 1e-4,
    'validation_fraction': 0.2,
    'seed': 0,
    'penalize_biases': True,
    'refresh_size': 10_000,
    'refresh_every': 1,
}

GAUGE_TAU = 0.75
GAUGE_THRESHOLD_ARCH = (32, 32, 32)
GAUGE_ARCH = (64, 64, 64)

GAUGE_REFERENCE_ANGLES = 1_000_000
GAUGE_REFERENCE_SEED = 0

# Bounds on the truncated gamma shape; the upper bound is multiplied by d.
GAUGE_ALPHA_BOUNDS = (0.1, 10.0)

ADF_QUANTILE = 0.9995
QQ_ENVELOPE_SIMULATIONS = 200
SLICE_EPSILON = 0.01
RETURN_LEVEL_GRID = (0.8, 0.9, 0.95, 0.99, 0.995, 0.999)

# A fit is flagged when alpha ends this close (relative) to a bound, or when
# fewer exceedances than this fed the gauge stage.
SUSPECT_ALPHA_MARGIN = 0.01
SUSPECT_MIN_EXCEEDANCES = 500
