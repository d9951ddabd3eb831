"""
Christoffel OSP - Main Application

This is the HTTP entry point of the sensor-placement service, which provides:
- Empirical Christoffel scores and the Christoffel sampling measure
- Offline sensor placement (greedy/i.i.d. Christoffel, SSPOR, A/D/E-optimal, random)
- Guided diffusion reconstruction under a Gaussian-mixture prior
- The exact Gaussian posterior used to validate it
"""

import logging
from datetime import datetime

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from src import __version__
from src.api.placement import router as placement_router
from src.api.reconstruction import router as reconstruction_router
from src.config import get_settings

settings = get_settings()

# Set up logging
logging.basicConfig(
    level=settings.log_level,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
)
logger = logging.getLogger("christoffel_osp")

# Initialize FastAPI app
app = FastAPI(
    title="Christoffel OSP",
    description="Christoffel-function sensor placement and diffusion posterior sampling",
    version=__version__,
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

app.include_router(placement_router)
app.include_router(reconstruction_router)


@app.get("/health")
async def health_check():
    """
    Health check endpoint for monitoring
    """
    return {
        "status": "healthy",
        "timestamp": datetime.now().isoformat(),
        "version": __version__,
    }


@app.get("/")
async def root():
    """
    Root endpoint with basic service information
    """
    return {
        "service": "Christoffel OSP",
        "version": __version__,
        "status": "operational",
        "features": [
            "Empirical Christoffel Scores",
            "Offline Sensor Placement",
            "DPS Reconstruction",
            "Gaussian Posterior Oracle",
        ],
        "docs_url": "/docs",
    }


if __name__ == "__main__":
    import uvicorn
    uvicorn.run("src.main:app", host=settings.api_host, port=settings.api_port, reload=True)
