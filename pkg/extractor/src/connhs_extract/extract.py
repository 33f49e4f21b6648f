"""Raw-text feature extraction: titles, keywords, events, bundle assembly.

The mock backends here are deliberately simple and deterministic: titles
are first sentences, keywords are frequent non-stopword tokens, events are
capitalized-subject / listed-verb / following-object triples. Real
extraction tools can replace them behind the same call signatures.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .encoders import EncoderPlugin

BUNDLE_SCHEMA = "connhs-bundle/1"
SPLITS = ("train", "test")

_SENTENCE_END = re.compile(r"[.!?。！？]")
_TOKEN_RE = re.compile(r"\w+", re.UNICODE)
_WS_RE = re.compile(r"\s+")

# minimal English stopword list for the mock keyword backend
STOPWORDS = frozenset(
    """a an and are as at be but by for from has have in is it its of on or
    that the their they this to was were will with not no he she his her
    them we you your our i""".split()
)

# verbs the mock event pattern recognizes between a capitalized subject and
# an object token
EVENT_VERBS = frozenset(
    """kicked hit won lost beat beats announced launched bought sold said
    made found built signed scored defeated released acquired published
    reported opened closed visited joined left created wrote sued met
    raised cut banned approved rejected unveiled""".split()
)


@dataclass(frozen=True)
class RawDocument:
    """One input text with label and split tag."""

    id: str
    text: str
    label: str | None
    split: str

    def __post_init__(self):
        if not self.id:
            raise ValueError("document id must be non-empty")
        if not self.text or not self.text.strip():
            raise ValueError(f"document {self.id!r}: text must be non-empty")
        if self.split not in SPLITS:
            raise ValueError(f"document {self.id!r}: split must be one of {SPLITS}")


@dataclass(frozen=True)
class EventTriple:
    """Action W caused by subject C involving object O."""

    action: str
    subject: str
    obj: str

    def __post_init__(self):
        if not self.action:
            raise ValueError("event action must be non-empty")

    def render(self) -> str:
        """Single string fed to the encoder, subject-action-object order."""
        return " ".join(part for part in (self.subject, self.action, self.obj) if part)


def clean_text(text: str, drop_patterns: Sequence[str] = ()) -> str:
    """Collapse whitespace and drop configured noise patterns."""
    for pattern in drop_patterns:
        text = re.sub(pattern, " ", text)
    return _WS_RE.sub(" ", text).strip()


def extract_title(doc: RawDocument) -> str:
    """First sentence by terminal punctuation; whole text if none."""
    text = doc.text.strip()
    match = _SENTENCE_END.search(text)
    if match is None:
        return text
    return text[: match.end()].strip()


def extract_keywords(doc: RawDocument, k: int = 10) -> list[str]:
    """Top-k most frequent non-stopword tokens, ties broken alphabetically."""
    if k < 1:
        raise ValueError("k must be at least 1")
    counts: dict[str, int] = {}
    for token in _TOKEN_RE.findall(doc.text.lower()):
        if token in STOPWORDS:
            continue
        counts[token] = counts.get(token, 0) + 1
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return [token for token, _ in ranked[:k]]


def extract_events(doc: RawDocument) -> list[EventTriple]:
    """Capitalized token, listed verb, following token -> one triple."""
    tokens = _TOKEN_RE.findall(doc.text)
    events: list[EventTriple] = []
    for i in range(len(tokens) - 2):
        subject, verb, obj = tokens[i], tokens[i + 1], tokens[i + 2]
        if subject[0].isupper() and verb.lower() in EVENT_VERBS:
            events.append(EventTriple(action=verb, subject=subject, obj=obj))
    return events


def load_raw_corpus(path: str | Path) -> list[RawDocument]:
    """Read RawDocument JSON Lines; validates ids are unique."""
    path = Path(path)
    docs: list[RawDocument] = []
    seen: set[str] = set()
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: not valid JSON: {exc}") from exc
            doc = RawDocument(
                id=str(rec.get("id", "")),
                text=rec.get("text", ""),
                label=rec.get("label"),
                split=rec.get("split", "train"),
            )
            if doc.id in seen:
                raise ValueError(f"{path}:{lineno}: duplicate document id {doc.id!r}")
            seen.add(doc.id)
            docs.append(doc)
    if not docs:
        raise ValueError(f"{path}: no documents")
    return docs


def _dump_json(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def build_bundle(
    docs: Iterable[RawDocument],
    encoder: EncoderPlugin,
    out_path: str | Path,
    k: int = 10,
    drop_patterns: Sequence[str] = (),
) -> int:
    """Extract features, encode them, and write a connhs-bundle/1 file.

    Returns the number of records written. Encoding failures abort with
    the offending document id.
    """
    out_path = Path(out_path)
    count = 0
    with out_path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(_dump_json({"schema": BUNDLE_SCHEMA, "dim": encoder.dim, "encoder": encoder.name}) + "\n")
        for doc in docs:
            try:
                content = encoder.encode(clean_text(doc.text, drop_patterns))
                title = encoder.encode(extract_title(doc))
                keywords = [encoder.encode(kw) for kw in extract_keywords(doc, k)]
                events = [encoder.encode(ev.render()) for ev in extract_events(doc)]
            except Exception as exc:
                raise RuntimeError(f"encoder failed on document {doc.id!r}: {exc}") from exc
            for name, vec in (("content", content), ("title", title)):
                if np.asarray(vec).shape != (encoder.dim,):
                    raise RuntimeError(f"encoder returned wrong shape for {name} of document {doc.id!r}")
            rec = {
                "id": doc.id,
                "label": doc.label,
                "split": doc.split,
                "content_vec": np.asarray(content, dtype=np.float64).tolist(),
                "title_vec": np.asarray(title, dtype=np.float64).tolist(),
                "keyword_vecs": [np.asarray(v, dtype=np.float64).tolist() for v in keywords],
                "event_vecs": [np.asarray(v, dtype=np.float64).tolist() for v in events],
            }
            fh.write(_dump_json(rec) + "\n")
            count += 1
    return count
