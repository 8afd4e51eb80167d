from modules.database.session import DetectionsSessionLocal


def get_detections_db():
    db = DetectionsSessionLocal()
    try:
        yield db
    finally:
        db.close()
