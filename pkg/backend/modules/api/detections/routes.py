from fastapi import APIRouter, Depends, HTTPException, Query
from sqlalchemy.orm import Session

from modules.api.detections.functions import queue_entries
from modules.api.detections.models import AlertRecord, AttackSetRecord
from modules.api.detections.schemas import (
    AlertResponse,
    AttackSetResponse,
    QueueEntry,
    QueuesResponse,
)
from modules.database.dependencies import get_detections_db
from utils.logger_config import configure_logger

# Configuration du logger
logger = configure_logger()

detections_router = APIRouter()


@detections_router.get(
    "/alerts",
    response_model=list[AlertResponse],
    summary="Lister les alertes archivées",
    description="Retourne les alertes par fenêtre puis identifiant, "
    "éventuellement filtrées par confiance minimale.",
)
def list_alerts(
    min_confidence: float = Query(0.0, ge=0.0, le=1.0),
    db: Session = Depends(get_detections_db),
):
    return (
        db.query(AlertRecord)
        .filter(AlertRecord.confidence >= min_confidence)
        .order_by(AlertRecord.window, AlertRecord.id)
        .all()
    )


@detections_router.get(
    "/alerts/{alert_id}",
    response_model=AlertResponse,
    summary="Récupérer une alerte par son ID",
)
def get_alert(alert_id: str, db: Session = Depends(get_detections_db)):
    alert = db.query(AlertRecord).filter(AlertRecord.id == alert_id).first()
    if not alert:
        raise HTTPException(status_code=404, detail="Alerte non trouvée")
    return alert


@detections_router.get(
    "/queues",
    response_model=QueuesResponse,
    summary="État des files primaire et secondaire",
    description="Files ordonnées par score décroissant puis fenêtre de création.",
)
def get_queues(db: Session = Depends(get_detections_db)):
    def entries(queue):
        return [
            QueueEntry(id=r.id, score=r.score, age=r.updated_window - r.created_window)
            for r in queue_entries(db, queue)
        ]

    return QueuesResponse(
        primary=entries("primary"), secondary=entries("secondary"), retired=entries("retired")
    )


@detections_router.get(
    "/sets/{set_id}",
    response_model=AttackSetResponse,
    summary="Récupérer un ensemble d'attaque par son ID",
)
def get_set(set_id: str, db: Session = Depends(get_detections_db)):
    attack_set = db.query(AttackSetRecord).filter(AttackSetRecord.id == set_id).first()
    if not attack_set:
        raise HTTPException(status_code=404, detail="Ensemble d'attaque non trouvé")
    return attack_set
