import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

BASE_DIR = Path(__file__).resolve().parent.parent.parent

DATABASE_DIR = BASE_DIR / "db"
DATABASE_DIR.mkdir(parents=True, exist_ok=True)

DETECTIONS_DATABASE_PATH = DATABASE_DIR / "detections.db"

DETECTIONS_DATABASE_URL = os.getenv(
    "DETECTION_DATABASE_URL", f"sqlite:///{DETECTIONS_DATABASE_PATH}"
)
