"""Prosodic annotation augmentation and parametric prosody feature extraction."""
from .config import ConfigError, build_config, load_config
from .pipeline import run

__version__ = "0.1.0"
__all__ = ["ConfigError", "build_config", "load_config", "run", "__version__"]
