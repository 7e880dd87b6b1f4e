from fastapi import FastAPI

from . import __version__
from .routes import api, reports


def create_app() -> FastAPI:
    app = FastAPI(title="stochorder", version=__version__)

    app.include_router(api.router)
    app.include_router(reports.router)

    @app.get("/health", tags=["system"])
    async def healthcheck() -> dict[str, str]:
        """Simple liveness check."""
        return {"status": "ok"}

    return app


app = create_app()
