"""
Django settings for the ivlab project.

Le projet n'expose aucune surface web : Django sert de socle pour la
configuration, la journalisation et les commandes de gestion
(`python manage.py ivlab ...`).

Toutes les valeurs sont lues via python-decouple (variables d'environnement
ou fichier .env) et possèdent une valeur par défaut.
"""

import math
from pathlib import Path

from decouple import config


def csv_env(key: str, default: str = ""):
    raw = config(key, default=default)
    return [item.strip() for item in raw.split(",") if item.strip()]


# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# Django exige une clé, même sans session ni signature.
SECRET_KEY = config('SECRET_KEY', default='ivlab-local-only')

DEBUG = config('DEBUG', default=False, cast=bool)

ALLOWED_HOSTS = csv_env('ALLOWED_HOSTS', default='localhost,127.0.0.1')

# Application definition
INSTALLED_APPS = [
    # Third party apps
    'rest_framework',

    # Local apps
    'core',
]

# Aucune persistance : les calculs sont des fonctions pures.
DATABASES = {}

# Internationalization
LANGUAGE_CODE = 'fr-fr'
TIME_ZONE = 'UTC'
USE_I18N = True
USE_TZ = True

# Django REST Framework : seuls les serializers et le JSONRenderer sont utilisés
REST_FRAMEWORK = {
    'DEFAULT_RENDERER_CLASSES': [
        'rest_framework.renderers.JSONRenderer',
    ],
    'COERCE_DECIMAL_TO_STRING': False,
    'STRICT_JSON': True,
    # Sans django.contrib.auth : aucun utilisateur ni authentification.
    'DEFAULT_AUTHENTICATION_CLASSES': [],
    'DEFAULT_PERMISSION_CLASSES': [],
    'UNAUTHENTICATED_USER': None,
}

# Monte Carlo : parallélisme et plan de découpage
IV_LAB_THREADS = config('IV_LAB_THREADS', default=1, cast=int)
IV_LAB_CHUNK = config('IV_LAB_CHUNK', default=10_000, cast=int)
IV_LAB_SAMPLES = config('IV_LAB_SAMPLES', default=100_000, cast=int)
IV_LAB_SEED = config('IV_LAB_SEED', default=0, cast=int)
IV_LAB_KUBOTA_MAX_DIM = config('IV_LAB_KUBOTA_MAX_DIM', default=12, cast=int)

# Proposition gaussienne : sigma = rayon englobant + pad / lambda
IV_LAB_PROPOSAL_PAD = config(
    'IV_LAB_PROPOSAL_PAD', default=1.0 / math.sqrt(2.0 * math.pi), cast=float
)

# Tolérances des vérifications
IV_LAB_ULC_RTOL = config('IV_LAB_ULC_RTOL', default=1e-9, cast=float)
IV_LAB_ENTROPY_SLACK = config('IV_LAB_ENTROPY_SLACK', default=1e-12, cast=float)
IV_LAB_SE_PASS = config('IV_LAB_SE_PASS', default=3.0, cast=float)
IV_LAB_SE_FAIL = config('IV_LAB_SE_FAIL', default=4.0, cast=float)

# Logging configuration - sortie console uniquement
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '[{asctime}] {levelname} {name} {message}',
            'style': '{',
        },
        'simple': {
            'format': '{levelname} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'level': 'DEBUG' if DEBUG else 'INFO',
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'loggers': {
        'django': {
            'handlers': ['console'],
            'level': 'INFO',
            'propagate': True,
        },
        'services': {
            'handlers': ['console'],
            'level': 'DEBUG' if DEBUG else 'INFO',
            'propagate': False,
        },
        'services.montecarlo': {
            'handlers': ['console'],
            'level': 'DEBUG' if DEBUG else 'WARNING',
            'propagate': False,
        },
        'core': {
            'handlers': ['console'],
            'level': 'DEBUG' if DEBUG else 'INFO',
            'propagate': False,
        },
    },
}
