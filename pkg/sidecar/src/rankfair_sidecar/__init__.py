"""HTTP sidecar hosting multilingual sentence encoders for rankfair."""

from .app import create_app
from .encoders import HashEncoder, SentenceTransformerEncoder, make_encoder

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "create_app",
    "make_encoder",
    "HashEncoder",
    "SentenceTransformerEncoder",
]
