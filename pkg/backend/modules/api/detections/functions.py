from sqlalchemy.orm import Session

from modules.api.detections.models import AlertRecord, AttackSetRecord
from modules.correlator.store import GlobalAttackStore
from utils.logger_config import configure_logger

# Configuration du logger
logger = configure_logger()


def archive_run(db: Session, alerts, store: GlobalAttackStore) -> tuple[int, int]:
    """Archive (upsert) les alertes d'un run et l'instantané du store."""
    try:
        for alert in alerts:
            db.merge(
                AlertRecord(
                    id=alert.id,
                    window=alert.window,
                    set_id=alert.set_id,
                    confidence=alert.confidence,
                    kind=alert.kind,
                    description=alert.description,
                    processes=alert.processes,
                    events=[e.model_dump(by_alias=True) for e in alert.events],
                    kill_chain=alert.kill_chain,
                    iocs=alert.iocs,
                )
            )
        for attack_set in store.sets.values():
            db.merge(
                AttackSetRecord(
                    id=attack_set.id,
                    queue=attack_set.queue,
                    score=attack_set.score,
                    created_window=attack_set.created_window,
                    updated_window=attack_set.updated_window,
                    processes=sorted(attack_set.process_ids),
                    history=[list(h) for h in attack_set.history],
                    events=[e.model_dump(by_alias=True) for e in attack_set.events],
                    summary=attack_set.summary,
                )
            )
        db.commit()
    except Exception as e:
        db.rollback()
        logger.error(f"Erreur lors de l'archivage : {e}")
        raise
    logger.info(f"Archive : {len(alerts)} alerte(s), {len(store.sets)} ensemble(s)")
    return len(alerts), len(store.sets)


def queue_entries(db: Session, queue: str) -> list[AttackSetRecord]:
    return (
        db.query(AttackSetRecord)
        .filter(AttackSetRecord.queue == queue)
        .order_by(AttackSetRecord.score.desc(), AttackSetRecord.created_window, AttackSetRecord.id)
        .all()
    )
