"""
Django settings for maapnn_project.

The project serves no web pages: Django provides settings, logging
configuration and the management commands of the experiments app.
Everything specific to the solvers lives in the MAAPNN dict and is read
from the environment (a .env file is honored).
"""

import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = os.getenv('SECRET_KEY', 'maapnn-local-only-not-secret')

DEBUG = os.getenv('DEBUG', 'False').lower() in ('true', '1', 'yes')

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    "experiments",
]

# Results live in CSV files; no database is configured.
DATABASES = {}

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"

USE_TZ = True
TIME_ZONE = "UTC"


# Solver and training settings

_torch_threads = os.getenv('MAAPNN_TORCH_THREADS')

MAAPNN = {
    'OUTPUT_DIR': Path(os.getenv('MAAPNN_OUTPUT_DIR', BASE_DIR / 'runs')),
    'LOG_LEVEL': os.getenv('MAAPNN_LOG_LEVEL', 'INFO').upper(),
    'TORCH_THREADS': int(_torch_threads) if _torch_threads else None,
    'DEFAULT_SEED': int(os.getenv('MAAPNN_DEFAULT_SEED', '0')),
    'MC_DRAWS': int(os.getenv('MAAPNN_MC_DRAWS', '10000')),
}


# Logging

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'maapnn': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'maapnn',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': MAAPNN['LOG_LEVEL'],
    },
    'loggers': {
        'django': {
            'handlers': ['console'],
            'level': 'INFO',
            'propagate': False,
        },
    },
}
