"""
Django settings for the catflow project.

No database or HTTP surface: Django hosts the management command, the
serializers used as the config schema, and logging configuration.
"""

from pathlib import Path
import os
import environ

env = environ.Env(
    # set casting, default value
    DEBUG=(bool, False),
    CATFLOW_WORKERS=(int, os.cpu_count() or 1),
    CATFLOW_ORACLE_MAX_DIM=(int, 40),
    CATFLOW_LEAKAGE_CEILING=(float, 1e-3),
    CATFLOW_RANK_THRESHOLD=(float, 1e-8),
    CATFLOW_LOG_LEVEL=(str, "INFO"),
)
# reading .env file
environ.Env.read_env(os.path.join(Path(__file__).resolve().parent.parent.parent, '.env'))

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = env('SECRET_KEY', default='catflow-local-runs-only')
DEBUG = env('DEBUG')

INSTALLED_APPS = [
    'rest_framework',
    'infrastructure',
]

DATABASES = {}

# Numerics
CATFLOW_WORKERS = env('CATFLOW_WORKERS')
CATFLOW_ORACLE_MAX_DIM = env('CATFLOW_ORACLE_MAX_DIM')
CATFLOW_LEAKAGE_CEILING = env('CATFLOW_LEAKAGE_CEILING')
CATFLOW_RANK_THRESHOLD = env('CATFLOW_RANK_THRESHOLD')
CATFLOW_OUTPUT_DIR = env('CATFLOW_OUTPUT_DIR', default=str(BASE_DIR.parent / 'runs'))

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {'format': '%(asctime)s %(levelname)s %(name)s: %(message)s'},
    },
    'handlers': {
        'console': {'class': 'logging.StreamHandler', 'formatter': 'plain'},
    },
    'loggers': {
        'domain': {'handlers': ['console'], 'level': env('CATFLOW_LOG_LEVEL'), 'propagate': False},
        'application': {'handlers': ['console'], 'level': env('CATFLOW_LOG_LEVEL'), 'propagate': False},
        'infrastructure': {'handlers': ['console'], 'level': env('CATFLOW_LOG_LEVEL'), 'propagate': False},
    },
}

USE_TZ = True
TIME_ZONE = 'UTC'
