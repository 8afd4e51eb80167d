from datetime import datetime

from sqlalchemy import JSON, Column, DateTime, Float, Integer, String

from modules.database.session import Base


class AlertRecord(Base):
    __tablename__ = "alerts"

    id = Column(String, primary_key=True, index=True)
    window = Column(Integer, index=True)
    set_id = Column(String, index=True)
    confidence = Column(Float, index=True)
    kind = Column(String)
    description = Column(String)
    processes = Column(JSON)
    events = Column(JSON)
    kill_chain = Column(JSON)
    iocs = Column(JSON)
    archived_at = Column(DateTime, default=datetime.utcnow)


class AttackSetRecord(Base):
    __tablename__ = "attack_sets"

    id = Column(String, primary_key=True, index=True)
    queue = Column(String, index=True)
    score = Column(Float)
    created_window = Column(Integer)
    updated_window = Column(Integer)
    processes = Column(JSON)
    history = Column(JSON)
    events = Column(JSON)
    summary = Column(String)
    archived_at = Column(DateTime, default=datetime.utcnow)
