"""Score exporter: fine-tunes a pretrained transformer with and without the
input and emits held-out gold-label log-probabilities in the analysis
toolkit's score-file format."""

from .data import load_split, serialize
from .export import ExportConfig, export

__version__ = "0.1.0"
