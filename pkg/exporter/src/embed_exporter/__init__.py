"""embed-exporter: offline sentence-embedding export, serving, and 2-D
projection for the semcomp toolkit's file and wire contracts."""

from .export import ExportJob, export
from .project import project_2d
from .registry import REGISTRY, ModelSpec, load_encoder, model_available
from .service import create_app, serve

__version__ = "0.1.0"

__all__ = [
    "REGISTRY",
    "ExportJob",
    "ModelSpec",
    "create_app",
    "export",
    "load_encoder",
    "model_available",
    "project_2d",
    "serve",
]
