"""Raw-text to embedding-bundle adapter with deterministic mock backends."""

from .encoders import EncoderPlugin, MockEncoder, load_encoder
from .extract import (
    EVENT_VERBS,
    STOPWORDS,
    EventTriple,
    RawDocument,
    build_bundle,
    clean_text,
    extract_events,
    extract_keywords,
    extract_title,
    load_raw_corpus,
)

__version__ = "0.1.0"
