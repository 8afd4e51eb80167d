from modules.database.config import DETECTIONS_DATABASE_URL
from modules.database.session import Base, detections_engine
from utils.logger_config import configure_logger

# Enregistre les tables sur Base.metadata
from modules.api.detections import models  # noqa: F401

# Configuration du logger
logger = configure_logger()


def init_detections_db(engine=None):
    """Crée les tables d'archive si elles n'existent pas."""
    engine = engine or detections_engine
    Base.metadata.create_all(bind=engine)
    logger.info(f"Base de données 'detections' prête ({DETECTIONS_DATABASE_URL})")
