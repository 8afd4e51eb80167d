import os

from modules.api.detections.create_db import init_detections_db
from modules.api.main import create_app

# Si on n'est pas en test, on initialise la base
if os.getenv("RUN_ENV") != "test":
    init_detections_db()

app = create_app()
