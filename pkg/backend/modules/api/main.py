import os

from dotenv import load_dotenv
from fastapi import APIRouter, FastAPI
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import RedirectResponse

from modules.api.detections.routes import detections_router

load_dotenv()
FRONTEND_URL = os.getenv("FRONTEND_URL")


def create_app() -> FastAPI:
    app = FastAPI(
        title="APT Detection Report API",
        description="Consultation des alertes et des ensembles d'attaque archivés",
        version="1.0.0",
    )

    # Ajout du middleware CORS
    app.add_middleware(
        CORSMiddleware,
        allow_origins=[origin for origin in ("http://localhost:5173", FRONTEND_URL) if origin],
        allow_credentials=True,
        allow_methods=["GET"],
        allow_headers=["*"],
    )

    router = APIRouter()
    router.include_router(detections_router, tags=["Détections"])
    app.include_router(router)

    @app.get("/", include_in_schema=False)
    async def root():
        return RedirectResponse(url="/docs")

    return app
