"""
Django settings for lamel_toolkit project.
LAMeL Toolkit - linear meta-learning with graphlet fingerprints

This module contains all Django configuration settings including:
- Database configuration (SQLite results registry)
- REST Framework settings for the read-only results API
- Logging configuration
- Toolkit defaults and dataset presets (the ``LAMEL`` dict)
"""

from pathlib import Path
from decouple import config, Csv

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = config('SECRET_KEY', default='django-insecure-lamel-toolkit-key')

# SECURITY WARNING: don't run with debug turned on in production!
DEBUG = config('DEBUG', default=True, cast=bool)

ALLOWED_HOSTS = config('ALLOWED_HOSTS', default='localhost,127.0.0.1', cast=Csv())

# Application definition
DJANGO_APPS = [
    'django.contrib.admin',
    'django.contrib.auth',
    'django.contrib.contenttypes',
    'django.contrib.sessions',
    'django.contrib.messages',
    'django.contrib.staticfiles',
]

THIRD_PARTY_APPS = [
    'rest_framework',
    'django_filters',
]

LOCAL_APPS = [
    'core',
    'molecules',
    'modeling',
    'experiments',
    'api',
]

INSTALLED_APPS = DJANGO_APPS + THIRD_PARTY_APPS + LOCAL_APPS

MIDDLEWARE = [
    'django.middleware.security.SecurityMiddleware',
    'django.contrib.sessions.middleware.SessionMiddleware',
    'django.middleware.common.CommonMiddleware',
    'django.middleware.csrf.CsrfViewMiddleware',
    'django.contrib.auth.middleware.AuthenticationMiddleware',
    'django.contrib.messages.middleware.MessageMiddleware',
    'django.middleware.clickjacking.XFrameOptionsMiddleware',
]

ROOT_URLCONF = 'lamel_toolkit.urls'

TEMPLATES = [
    {
        'BACKEND': 'django.template.backends.django.DjangoTemplates',
        'DIRS': [],
        'APP_DIRS': True,
        'OPTIONS': {
            'context_processors': [
                'django.template.context_processors.debug',
                'django.template.context_processors.request',
                'django.contrib.auth.context_processors.auth',
                'django.contrib.messages.context_processors.messages',
            ],
        },
    },
]

WSGI_APPLICATION = 'lamel_toolkit.wsgi.application'

# Database Configuration (results registry only; experiments never need it)
DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': config('LAMEL_DB_PATH', default=str(BASE_DIR / 'db.sqlite3')),
    }
}

# Internationalization
LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = True
USE_TZ = True

# Static files (admin only)
STATIC_URL = '/static/'
STATIC_ROOT = BASE_DIR / 'staticfiles'

# Default primary key field type
DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# Django REST Framework Configuration
REST_FRAMEWORK = {
    'DEFAULT_AUTHENTICATION_CLASSES': [
        'rest_framework.authentication.SessionAuthentication',
    ],
    'DEFAULT_PERMISSION_CLASSES': [
        'rest_framework.permissions.IsAuthenticatedOrReadOnly',
    ],
    'DEFAULT_PAGINATION_CLASS': 'rest_framework.pagination.PageNumberPagination',
    'PAGE_SIZE': 50,
    'DEFAULT_FILTER_BACKENDS': [
        'django_filters.rest_framework.DjangoFilterBackend',
        'rest_framework.filters.OrderingFilter',
    ],
}

# Toolkit defaults
# Every value here can be overridden by a dataset preset, then by an
# experiment config file, then by command-line flags.
LAMEL = {
    'RESULTS_DIR': config('LAMEL_RESULTS_DIR', default=str(BASE_DIR / 'results')),
    'WORKERS': config('LAMEL_WORKERS', default=1, cast=int),
    'RECORD_RUNS': config('LAMEL_RECORD_RUNS', default=False, cast=bool),

    # graphlets (the hard size cap of 12 lives in molecules.graphlets)
    'DEFAULT_MAX_SIZE': 5,
    'DENSE_EXPORT_MAX_COLUMNS': 5000,

    # taskdata
    'TEMPERATURE_WINDOW': {'low': 290.0, 'high': 300.0, 'target': 298.0},
    'TEST_FRACTION': 0.2,

    # experiment harness
    'DEFAULT_SHOTS': [10, 15, 20, 30, 50, 100],
    'DEFAULT_SEEDS': list(range(10)),
    'SIMILARITY_MAX_SIZE': 5,

    # Externally supplied datasets (data-gated checks skip when empty)
    'DATA': {
        'boobier': config('LAMEL_BOOBIER_CSV', default=''),
        'bigsoldb': config('LAMEL_BIGSOLDB_CSV', default=''),
        'qm9multixc': config('LAMEL_QM9MULTIXC_CSV', default=''),
    },

    'PRESETS': {
        'boobier': {
            'layout': 'long',
            'smiles_col': 'SMILES',
            'task_col': 'solvent',
            'value_col': 'LogS',
            'temperature_col': '',
            'min_rows_per_task': 1,
            'temperature_filter': False,
            'solvent_smiles': {
                'water': 'O',
                'ethanol': 'CCO',
                'benzene': 'c1ccccc1',
                'acetone': 'CC(=O)C',
            },
        },
        'bigsoldb': {
            'layout': 'long',
            'smiles_col': 'SMILES_Solute',
            'task_col': 'Solvent',
            'value_col': 'LogS(mol/L)',
            'temperature_col': 'Temperature_K',
            'solvent_smiles_col': 'SMILES_Solvent',
            'min_rows_per_task': 200,
            'temperature_filter': True,
        },
        'qm9multixc': {
            'layout': 'wide',
            'smiles_col': 'smiles',
            'task_pattern': r'^[A-Za-z0-9\-]+_(SZ|DZP|TZP)$',
            'temperature_col': '',
            'min_rows_per_task': 1,
            'temperature_filter': False,
            'support_pattern': r'_SZ$',
            'support_count': 5,
        },
        'synthetic': {
            'layout': 'synthetic',
            'synthetic_features': 50,
            'synthetic_tasks': 8,
            'synthetic_rank': 2,
            'synthetic_noise': 0.1,
            'synthetic_rows': 400,
            'synthetic_target': 'inside',
            'min_rows_per_task': 1,
            'temperature_filter': False,
        },
    },
}

# Logging Configuration
LOG_DIR = Path(config('LAMEL_LOG_DIR', default=str(BASE_DIR / 'logs')))
LOG_DIR.mkdir(parents=True, exist_ok=True)
LOG_LEVEL = config('LAMEL_LOG_LEVEL', default='INFO')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {process:d} {thread:d} {message}',
            'style': '{',
        },
        'simple': {
            'format': '{levelname} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'file': {
            'level': 'INFO',
            'class': 'logging.FileHandler',
            'filename': LOG_DIR / 'lamel.log',
            'formatter': 'verbose',
        },
        'console': {
            'level': 'DEBUG',
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'root': {
        'handlers': ['console', 'file'],
        'level': 'WARNING',
    },
    'loggers': {
        'django': {
            'handlers': ['console', 'file'],
            'level': 'INFO',
            'propagate': False,
        },
        'molecules': {
            'handlers': ['console', 'file'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
        'modeling': {
            'handlers': ['console', 'file'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
        'experiments': {
            'handlers': ['console', 'file'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
        'api': {
            'handlers': ['console', 'file'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
        'core': {
            'handlers': ['console', 'file'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
    },
}
