from .client import CoordinatorClient
from .service import create_app, serve

__all__ = ["CoordinatorClient", "create_app", "serve"]
