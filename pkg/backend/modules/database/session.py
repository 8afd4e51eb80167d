from sqlalchemy import create_engine
from sqlalchemy.orm import declarative_base, sessionmaker

from modules.database.config import DETECTIONS_DATABASE_URL

Base = declarative_base()


def create_session(database_url: str):
    connect_args = {"check_same_thread": False} if database_url.startswith("sqlite") else {}
    engine = create_engine(database_url, connect_args=connect_args)
    SessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=engine)
    return engine, SessionLocal


detections_engine, DetectionsSessionLocal = create_session(DETECTIONS_DATABASE_URL)
