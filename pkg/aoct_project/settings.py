# Airway OCT Reconstruction - 3D airway geometry from anatomic OCT pull-backs.
# Copyright (C) 2025 Pramit Sharma
#
# This file is part of airway_recon.
#
# airway_recon is free software: you can redistribute it and/or modify
# it under the terms of the GNU Affero General Public License as published by
# the Free Software Foundation, either version 3 of the License, or (at your
# option) any later version.
#
# airway_recon is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU Affero General Public License for more details.
#
# You should have received a copy of the GNU Affero General Public License
# along with this program.  If not, see <https://www.gnu.org/licenses/>.

"""
Django settings for aoct_project.

The project has no HTTP surface: Django provides the management-command CLI,
the ORM for the stage-run history, and the test runner. Pipeline parameters
live in TOML files (see configs/), not here; this module only carries
infrastructure settings, overridable through the environment or a .env file.
"""

from pathlib import Path
import os
from dotenv import load_dotenv

load_dotenv()  # Loads variables from .env into environment

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# Only used for signing, which the CLI never does; any value works locally.
SECRET_KEY = os.getenv("SECRET_KEY", "aoct-local-development-key")

DEBUG = os.getenv("DEBUG", "0") == "1"

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    "airway_recon",
]

MIDDLEWARE = []


# Database
# SQLite by default; DB_ENGINE/DB_NAME/... point it at another backend.

DATABASES = {
    "default": {
        "ENGINE": os.getenv("DB_ENGINE", "django.db.backends.sqlite3"),
        "NAME": os.getenv("DB_NAME", str(BASE_DIR / "aoct.sqlite3")),
        "USER": os.getenv("DB_USER", ""),
        "PASSWORD": os.getenv("DB_PASSWORD", ""),
        "HOST": os.getenv("DB_HOST", ""),
        "PORT": os.getenv("DB_PORT", ""),
    }
}

LANGUAGE_CODE = "en-us"

TIME_ZONE = "UTC"

USE_I18N = False

USE_TZ = True

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"


# Logging
# Library modules log through celery's task loggers, which hang off "celery.task".
# AOCT_LOG_LEVEL is deployment-only and never changes an output file.

AOCT_LOG_LEVEL = os.getenv("AOCT_LOG_LEVEL", "INFO")

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "plain": {"format": "[%(asctime)s: %(levelname)s/%(name)s] %(message)s"},
    },
    "handlers": {
        "console": {"class": "logging.StreamHandler", "formatter": "plain"},
    },
    "loggers": {
        "celery.task": {
            "handlers": ["console"],
            "level": AOCT_LOG_LEVEL,
            "propagate": False,
        },
    },
}


# Celery Configuration
# Eager by default: frame chunks run in-process. Set CELERY_TASK_ALWAYS_EAGER=0
# and start a worker (see docker-compose.yml) to fan chunks out over redis.
CELERY_BROKER_URL = os.getenv(
    "CELERY_BROKER_URL",
    "redis://redis:6379/0" if os.getenv("DOCKER_ENV") else "redis://localhost:6379/0",
)
CELERY_RESULT_BACKEND = os.getenv("CELERY_RESULT_BACKEND", CELERY_BROKER_URL)
CELERY_ACCEPT_CONTENT = ["json"]
CELERY_TASK_SERIALIZER = "json"
CELERY_RESULT_SERIALIZER = "json"
CELERY_TIMEZONE = "UTC"
CELERY_TASK_ALWAYS_EAGER = os.getenv("CELERY_TASK_ALWAYS_EAGER", "1") == "1"
CELERY_TASK_EAGER_PROPAGATES = True


# Pipeline-level environment override: thread count for KD-tree queries.
AOCT_THREADS = int(os.getenv("AOCT_THREADS", "1"))

# Deployment-only: frames per Celery task in the simulate and resample stages.
# Scheduling only; outputs are identical for any chunk size.
AOCT_FRAME_CHUNK = int(os.getenv("AOCT_FRAME_CHUNK", "10"))
