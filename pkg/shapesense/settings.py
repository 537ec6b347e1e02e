"""
Django settings for shapesense project.

Runtime values are read from the environment (or a .env file) through
python-decouple. The estimator tunables at the bottom are the defaults used by
the management commands; API-triggered experiments read the EstimatorControls
row instead.
"""

from pathlib import Path
from decouple import config

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = config('SECRET_KEY', default="django-insecure-7r2x!shapesense-local-only-0b9c4f1e8d2a6")

# SECURITY WARNING: don't run with debug turned on in production!
DEBUG = config('DEBUG', default=True, cast=bool)

ALLOWED_HOSTS = ['*']


# Application definition

INSTALLED_APPS = [
    "django.contrib.admin",
    "django.contrib.auth",
    "django.contrib.contenttypes",
    "django.contrib.sessions",
    "django.contrib.messages",
    "django.contrib.staticfiles",
    # Third party apps
    "rest_framework",
    "corsheaders",
    # Local apps
    "api",
]

MIDDLEWARE = [
    "corsheaders.middleware.CorsMiddleware",
    "django.middleware.security.SecurityMiddleware",
    "django.contrib.sessions.middleware.SessionMiddleware",
    "django.middleware.common.CommonMiddleware",
    "django.middleware.csrf.CsrfViewMiddleware",
    "django.contrib.auth.middleware.AuthenticationMiddleware",
    "django.contrib.messages.middleware.MessageMiddleware",
    "django.middleware.clickjacking.XFrameOptionsMiddleware",
]

APPEND_SLASH = True

ROOT_URLCONF = "shapesense.urls"

TEMPLATES = [
    {
        "BACKEND": "django.template.backends.django.DjangoTemplates",
        "DIRS": [],
        "APP_DIRS": True,
        "OPTIONS": {
            "context_processors": [
                "django.template.context_processors.debug",
                "django.template.context_processors.request",
                "django.contrib.auth.context_processors.auth",
                "django.contrib.messages.context_processors.messages",
            ],
        },
    },
]

WSGI_APPLICATION = "shapesense.wsgi.application"


# Database
# Use PostgreSQL when DB_HOST is configured, SQLite for local runs
if config('DB_HOST', default=None):
    DATABASES = {
        'default': {
            'ENGINE': 'django.db.backends.postgresql',
            'NAME': config('DB_NAME'),
            'USER': config('DB_USER'),
            'PASSWORD': config('DB_PASSWORD'),
            'HOST': config('DB_HOST'),
            'PORT': config('DB_PORT', default='5432'),
            'OPTIONS': {
                'sslmode': config('DB_SSL_MODE', default='require'),
            },
        }
    }
else:
    DATABASES = {
        "default": {
            "ENGINE": "django.db.backends.sqlite3",
            "NAME": BASE_DIR / "db.sqlite3",
        }
    }


AUTH_PASSWORD_VALIDATORS = [
    {
        "NAME": "django.contrib.auth.password_validation.UserAttributeSimilarityValidator",
    },
    {
        "NAME": "django.contrib.auth.password_validation.MinimumLengthValidator",
    },
]


LANGUAGE_CODE = "en-us"

TIME_ZONE = "UTC"

USE_I18N = True

USE_TZ = True


STATIC_URL = '/static/'
STATIC_ROOT = BASE_DIR / 'staticfiles'

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"

# REST Framework settings
REST_FRAMEWORK = {
    'DEFAULT_PERMISSION_CLASSES': [
        'rest_framework.permissions.AllowAny',
    ],
    'DEFAULT_AUTHENTICATION_CLASSES': [
        'rest_framework.authentication.SessionAuthentication',
        'rest_framework.authentication.BasicAuthentication',
    ],
    'DEFAULT_PAGINATION_CLASS': 'rest_framework.pagination.PageNumberPagination',
    'PAGE_SIZE': 20,
}

# CORS settings
CORS_ALLOW_ALL_ORIGINS = True
CORS_ALLOW_CREDENTIALS = config('CORS_ALLOW_CREDENTIALS', default=False, cast=bool)


# Logging
LOG_LEVEL = config('LOG_LEVEL', default='INFO')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'simple': {
            'format': '{asctime} {levelname} {name}: {message}',
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
        'api': {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
    },
    'root': {
        'handlers': ['console'],
        'level': 'WARNING',
    },
}


# Shape estimation
SHAPESENSE_OUTPUT_DIR = Path(config('SHAPESENSE_OUTPUT_DIR', default=str(BASE_DIR / 'runs')))
SHAPESENSE_DEFAULT_SEED = config('SHAPESENSE_DEFAULT_SEED', default=20240917, cast=int)

SHAPESENSE_ESTIMATOR = {
    's_small': config('ESTIMATOR_S_SMALL', default=0.3, cast=float),
    's_large': config('ESTIMATOR_S_LARGE', default=3.0, cast=float),
    'max_pairs': config('ESTIMATOR_MAX_PAIRS', default=5000, cast=int),
    'eps_l': config('ESTIMATOR_EPS_L', default=0.05, cast=float),
    'band_low': config('ESTIMATOR_BAND_LOW', default=0.85, cast=float),
    'band_high': config('ESTIMATOR_BAND_HIGH', default=1.15, cast=float),
    'k_max': config('ESTIMATOR_K_MAX', default=16, cast=int),
    'min_support_abs': config('ESTIMATOR_MIN_SUPPORT_ABS', default=10, cast=int),
    'min_support_frac': config('ESTIMATOR_MIN_SUPPORT_FRAC', default=0.01, cast=float),
    'n_c_min': config('ESTIMATOR_N_C_MIN', default=30, cast=int),
    'closure_tol': config('ESTIMATOR_CLOSURE_TOL', default=0.05, cast=float),
    'max_components': config('ESTIMATOR_MAX_COMPONENTS', default=6, cast=int),
}
