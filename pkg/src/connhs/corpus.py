"""Document corpus model: embedding bundles, validation, synthetic corpora.

A corpus is a list of documents, each carrying one content vector, one
title vector, and variable-length lists of keyword and event vectors, all
living in the same embedding space. Bundles are the on-disk interchange
format (JSON Lines, schema ``connhs-bundle/1``).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

BUNDLE_SCHEMA = "connhs-bundle/1"
SPLITS = ("train", "test")

# Keyword/event vectors are distilled features and sit closer to the topic
# centroid than full documents; generator draws them at a third of the
# content noise.
_FEATURE_NOISE_FACTOR = 1.0 / 3.0
# Orthogonal centroids are scaled below unit norm so that raw content
# stays genuinely noisy (keyword/event features, with their smaller noise,
# remain cleanly separable).
_CENTROID_SCALE = 0.85
# Every fifth document within a cluster goes to the test split (80/20).
_TEST_STRIDE = 5


class BundleError(ValueError):
    """A bundle file or record violates the schema."""


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.asarray(arr, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class DocumentFeatures:
    """Per-document embedding features plus label and split tag."""

    id: str
    content_vec: np.ndarray
    title_vec: np.ndarray
    keyword_vecs: tuple[np.ndarray, ...]
    event_vecs: tuple[np.ndarray, ...]
    label: str | None
    split: str

    def __post_init__(self):
        object.__setattr__(self, "content_vec", _freeze(self.content_vec))
        object.__setattr__(self, "title_vec", _freeze(self.title_vec))
        object.__setattr__(self, "keyword_vecs", tuple(_freeze(v) for v in self.keyword_vecs))
        object.__setattr__(self, "event_vecs", tuple(_freeze(v) for v in self.event_vecs))
        if self.split not in SPLITS:
            raise ValueError(f"document {self.id!r}: split must be one of {SPLITS}, got {self.split!r}")

    @property
    def dim(self) -> int:
        return int(self.content_vec.shape[0])

    def all_vectors(self) -> Iterable[tuple[str, np.ndarray]]:
        yield "content_vec", self.content_vec
        yield "title_vec", self.title_vec
        for i, v in enumerate(self.keyword_vecs):
            yield f"keyword_vecs[{i}]", v
        for i, v in enumerate(self.event_vecs):
            yield f"event_vecs[{i}]", v


@dataclass(frozen=True)
class Corpus:
    """Validated, ordered collection of documents sharing one embedding dim."""

    docs: tuple[DocumentFeatures, ...]
    dim: int
    class_set: frozenset[str]

    @classmethod
    def from_docs(cls, docs: Sequence[DocumentFeatures]) -> "Corpus":
        docs = tuple(docs)
        if not docs:
            raise ValueError("corpus must contain at least one document")
        dim = docs[0].dim
        seen: set[str] = set()
        for doc in docs:
            if doc.id in seen:
                raise BundleError(f"duplicate document id {doc.id!r}")
            seen.add(doc.id)
            for name, vec in doc.all_vectors():
                if vec.ndim != 1:
                    raise BundleError(f"document {doc.id!r}: field {name} is not a flat vector")
                if vec.shape[0] != dim:
                    raise BundleError(
                        f"document {doc.id!r}: field {name} has length {vec.shape[0]}, expected {dim}"
                    )
                if not np.all(np.isfinite(vec)):
                    raise BundleError(f"document {doc.id!r}: field {name} contains a non-finite value")
        labels = frozenset(d.label for d in docs if d.label is not None)
        return cls(docs=docs, dim=dim, class_set=labels)

    def __len__(self) -> int:
        return len(self.docs)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(d.id for d in self.docs)

    def content_matrix(self) -> np.ndarray:
        return np.stack([d.content_vec for d in self.docs])


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a planted-cluster corpus with optional confuser documents."""

    n_clusters: int
    docs_per_cluster: int
    dim: int
    intra_noise: float
    cross_confuser_rate: float
    seed: int

    def __post_init__(self):
        if self.n_clusters < 1:
            raise ValueError("n_clusters must be positive")
        if self.docs_per_cluster < 1:
            raise ValueError("docs_per_cluster must be positive")
        if self.dim < 1:
            raise ValueError("dim must be positive")
        if self.intra_noise < 0:
            raise ValueError("intra_noise must be nonnegative")
        if not 0.0 <= self.cross_confuser_rate <= 1.0:
            raise ValueError("cross_confuser_rate must lie in [0, 1]")
        if self.dim < self.n_clusters:
            raise ValueError("dim must be >= n_clusters (centroids are mutually orthogonal)")
        if self.cross_confuser_rate > 0 and self.n_clusters < 2:
            raise ValueError("confuser documents need at least two clusters")


def _parse_vector(record_id: str, name: str, raw, dim: int | None) -> np.ndarray:
    if not isinstance(raw, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in raw):
        raise BundleError(f"document {record_id!r}: field {name} must be a list of numbers")
    vec = np.asarray(raw, dtype=np.float64)
    if dim is not None and vec.shape[0] != dim:
        raise BundleError(f"document {record_id!r}: field {name} has length {vec.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(vec)):
        raise BundleError(f"document {record_id!r}: field {name} contains a non-finite value")
    return vec


def load_bundle(path: str | Path) -> Corpus:
    """Read and validate a ``connhs-bundle/1`` JSON Lines file."""
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise BundleError(f"{path}: empty file, expected a manifest line")
    try:
        manifest = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise BundleError(f"{path}: manifest line is not valid JSON: {exc}") from exc
    if not isinstance(manifest, dict) or manifest.get("schema") != BUNDLE_SCHEMA:
        raise BundleError(f"{path}: manifest schema must be {BUNDLE_SCHEMA!r}")
    dim = manifest.get("dim")
    if not isinstance(dim, int) or dim < 1:
        raise BundleError(f"{path}: manifest field dim must be a positive integer")

    docs: list[DocumentFeatures] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise BundleError(f"{path}:{lineno}: record is not valid JSON: {exc}") from exc
        if not isinstance(rec, dict):
            raise BundleError(f"{path}:{lineno}: record must be a JSON object")
        rec_id = rec.get("id")
        if not isinstance(rec_id, str) or not rec_id:
            raise BundleError(f"{path}:{lineno}: field id must be a non-empty string")
        for key in ("id", "label", "split", "content_vec", "title_vec", "keyword_vecs", "event_vecs"):
            if key not in rec:
                raise BundleError(f"document {rec_id!r}: missing field {key}")
        label = rec["label"]
        if label is not None and not isinstance(label, str):
            raise BundleError(f"document {rec_id!r}: field label must be a string or null")
        split = rec["split"]
        if split not in SPLITS:
            raise BundleError(f"document {rec_id!r}: field split must be one of {SPLITS}")
        content = _parse_vector(rec_id, "content_vec", rec["content_vec"], dim)
        title = _parse_vector(rec_id, "title_vec", rec["title_vec"], dim)
        for key in ("keyword_vecs", "event_vecs"):
            if not isinstance(rec[key], list):
                raise BundleError(f"document {rec_id!r}: field {key} must be a list of vectors")
        keywords = tuple(
            _parse_vector(rec_id, f"keyword_vecs[{i}]", v, dim) for i, v in enumerate(rec["keyword_vecs"])
        )
        events = tuple(
            _parse_vector(rec_id, f"event_vecs[{i}]", v, dim) for i, v in enumerate(rec["event_vecs"])
        )
        docs.append(
            DocumentFeatures(
                id=rec_id,
                content_vec=content,
                title_vec=title,
                keyword_vecs=keywords,
                event_vecs=events,
                label=label,
                split=split,
            )
        )
    return Corpus.from_docs(docs)


def _dump_json(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def save_bundle(corpus: Corpus, path: str | Path, encoder: str = "unknown") -> None:
    """Serialize a corpus back to the bundle format (exact float round-trip)."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(_dump_json({"schema": BUNDLE_SCHEMA, "dim": corpus.dim, "encoder": encoder}) + "\n")
        for doc in corpus.docs:
            rec = {
                "id": doc.id,
                "label": doc.label,
                "split": doc.split,
                "content_vec": doc.content_vec.tolist(),
                "title_vec": doc.title_vec.tolist(),
                "keyword_vecs": [v.tolist() for v in doc.keyword_vecs],
                "event_vecs": [v.tolist() for v in doc.event_vecs],
            }
            fh.write(_dump_json(rec) + "\n")


def generate_synthetic(spec: SyntheticSpec) -> Corpus:
    """Deterministic planted-cluster corpus.

    Cluster centroids are mutually orthogonal unit vectors. Content and
    title vectors are the centroid plus iid Gaussian noise of per-coordinate
    scale ``intra_noise``; each document also gets 2-4 keyword vectors and
    1-3 event vectors drawn nearer the centroid. Confuser documents swap
    one keyword vector for one drawn near the next cluster's centroid.
    """
    rng = np.random.default_rng(spec.seed)
    raw = rng.standard_normal((spec.dim, spec.n_clusters))
    q, _ = np.linalg.qr(raw)
    centroids = q.T * _CENTROID_SCALE  # rows are orthogonal, common norm

    sigma = spec.intra_noise
    sigma_feat = sigma * _FEATURE_NOISE_FACTOR
    docs: list[DocumentFeatures] = []
    for ci in range(spec.n_clusters):
        centroid = centroids[ci]
        cluster_docs: list[dict] = []
        for j in range(spec.docs_per_cluster):
            content = centroid + sigma * rng.standard_normal(spec.dim)
            title = centroid + sigma * rng.standard_normal(spec.dim)
            n_kw = int(rng.integers(2, 5))
            keywords = [centroid + sigma_feat * rng.standard_normal(spec.dim) for _ in range(n_kw)]
            n_ev = int(rng.integers(1, 4))
            events = [centroid + sigma_feat * rng.standard_normal(spec.dim) for _ in range(n_ev)]
            cluster_docs.append(
                {"content": content, "title": title, "keywords": keywords, "events": events}
            )
        n_conf = int(round(spec.cross_confuser_rate * spec.docs_per_cluster))
        if n_conf > 0:
            other = centroids[(ci + 1) % spec.n_clusters]
            for j in rng.choice(spec.docs_per_cluster, size=n_conf, replace=False):
                cluster_docs[int(j)]["keywords"][0] = other + sigma_feat * rng.standard_normal(spec.dim)
        for j, parts in enumerate(cluster_docs):
            split = "test" if j % _TEST_STRIDE == _TEST_STRIDE - 1 else "train"
            docs.append(
                DocumentFeatures(
                    id=f"c{ci}_d{j:03d}",
                    content_vec=parts["content"],
                    title_vec=parts["title"],
                    keyword_vecs=tuple(parts["keywords"]),
                    event_vecs=tuple(parts["events"]),
                    label=f"c{ci}",
                    split=split,
                )
            )
    return Corpus.from_docs(docs)


def split_views(corpus: Corpus, label_rate: float) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """Stratified label subsample of the train split.

    Keeps ceil(label_rate * per-class train count) labels per class (first
    documents in corpus order, so the choice is deterministic); everything
    else in the train split is returned as unlabeled.
    """
    if not 0.0 < label_rate <= 1.0:
        raise ValueError("label_rate must lie in (0, 1]")
    train = [d for d in corpus.docs if d.split == "train"]
    if not train or any(d.label is None for d in train):
        raise ValueError("all train documents must be labeled")
    by_class: dict[str, list[str]] = {}
    for d in train:
        by_class.setdefault(d.label, []).append(d.id)
    n_classes = len(by_class)
    if math.ceil(label_rate * len(train)) < n_classes:
        raise ValueError(
            f"label_rate {label_rate} yields {math.ceil(label_rate * len(train))} labeled "
            f"documents, fewer than the {n_classes} classes"
        )
    labeled: list[str] = []
    for ids in by_class.values():
        k = max(1, math.ceil(label_rate * len(ids)))
        labeled.extend(ids[:k])
    labeled_set = set(labeled)
    labeled_ordered = tuple(d.id for d in train if d.id in labeled_set)
    unlabeled = tuple(d.id for d in train if d.id not in labeled_set)
    return labeled_ordered, unlabeled
