"""Similarity scoring, hierarchical negative sifting, and the contrastive loss.

Negatives for an anchor are every other node minus two sifts: nodes
adjacent to the anchor in any relation (structure sift, justified by graph
homophily) and nodes whose fused-representation similarity to the anchor
strictly exceeds a cutoff (attribute sift, catching high-order neighbors
that are likely same-class). Ablation modes disable one or both sifts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import RELATIONS, MultiRelationalTextGraph

MODES = ("NHS", "NHS_gs", "NHS_na", "NT_Xent")


@dataclass(frozen=True)
class LossConfig:
    """Temperature, attribute-sift cutoff, and negative-selection mode."""

    tau: float = 0.5
    sift_threshold: float = 0.8
    mode: str = "NHS"

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if not -1.0 <= self.sift_threshold <= 1.0:
            raise ValueError("sift_threshold must lie in [-1, 1]")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")

    @property
    def structure_sift(self) -> bool:
        return self.mode in ("NHS", "NHS_na")

    @property
    def attribute_sift(self) -> bool:
        return self.mode in ("NHS", "NHS_gs")


@dataclass(frozen=True)
class SimilarityMatrix:
    """Symmetric cosine-similarity matrix of fused representations."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ValueError("similarity matrix must be square")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return int(self.values.shape[0])


@dataclass(frozen=True)
class NegativeMask:
    """Admissible negatives per (view, anchor); row i of a view's matrix
    marks which nodes may serve as negatives for anchor i drawn from that
    view."""

    allowed: dict[str, np.ndarray]

    def __post_init__(self):
        if set(self.allowed) != set(RELATIONS):
            raise ValueError(f"mask must cover exactly the views {RELATIONS}")
        for view, mat in self.allowed.items():
            mat = np.asarray(mat, dtype=bool)
            if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
                raise ValueError("mask matrices must be square")
            if np.any(np.diag(mat)):
                raise ValueError(f"view {view}: anchors may not be their own negatives")
            mat.setflags(write=False)
            self.allowed[view] = mat

    @property
    def n(self) -> int:
        return int(next(iter(self.allowed.values())).shape[0])

    def negative_sets(self, view: str) -> list[set[int]]:
        mat = self.allowed[view]
        return [set(np.flatnonzero(mat[i]).tolist()) for i in range(self.n)]

    def mean_negatives_per_anchor(self) -> float:
        total = sum(int(np.count_nonzero(m)) for m in self.allowed.values())
        return total / (len(RELATIONS) * self.n) if self.n else 0.0


def similarity_matrix(fused: np.ndarray) -> SimilarityMatrix:
    """All-pairs cosine similarity of fused node representations."""
    fused = np.asarray(fused, dtype=np.float64)
    norms = np.linalg.norm(fused, axis=1)
    if np.any(norms == 0.0):
        bad = int(np.flatnonzero(norms == 0.0)[0])
        raise ValueError(f"fused representation row {bad} is a zero vector")
    normed = fused / norms[:, None]
    values = np.clip(normed @ normed.T, -1.0, 1.0)
    np.fill_diagonal(values, 1.0)
    return SimilarityMatrix(values=values)


def nhs_select_negatives(
    graph: MultiRelationalTextGraph, score: SimilarityMatrix, cfg: LossConfig
) -> NegativeMask:
    """Apply the structure and attribute sifts according to the mode.

    The resulting admissible set is identical across the three views for a
    given anchor; the mask is still stored per view to match how the loss
    consumes it.
    """
    if score.n != graph.n:
        raise ValueError("score matrix size does not match graph")
    n = graph.n
    allowed = ~np.eye(n, dtype=bool)
    if cfg.structure_sift:
        allowed &= ~graph.union_edges()
    if cfg.attribute_sift:
        allowed &= ~(score.values > cfg.sift_threshold)
        allowed &= ~np.eye(n, dtype=bool)  # diag of score is 1, already excluded
    return NegativeMask(allowed={r: allowed.copy() for r in RELATIONS})


def sift_counts(
    graph: MultiRelationalTextGraph, score: SimilarityMatrix, cfg: LossConfig
) -> tuple[int, int]:
    """Ordered (anchor, candidate) pairs removed by each sift.

    Attribute-sifted pairs already removed by the structure sift are not
    double counted.
    """
    n = graph.n
    off_diag = ~np.eye(n, dtype=bool)
    structure = 0
    attribute = 0
    struct_mask = np.zeros((n, n), dtype=bool)
    if cfg.structure_sift:
        struct_mask = graph.union_edges() & off_diag
        structure = int(np.count_nonzero(struct_mask))
    if cfg.attribute_sift:
        attr_mask = (score.values > cfg.sift_threshold) & off_diag & ~struct_mask
        attribute = int(np.count_nonzero(attr_mask))
    return structure, attribute


def mask_statistics(
    graph: MultiRelationalTextGraph, score: SimilarityMatrix, sift_threshold: float
) -> dict:
    """Per-mode mean negative-set size plus sift exclusion counts.

    Diagnostic helper: reports how each selection mode would treat the
    current score matrix.
    """
    stats: dict = {"mean_negatives": {}}
    for mode in MODES:
        cfg = LossConfig(sift_threshold=sift_threshold, mode=mode)
        mask = nhs_select_negatives(graph, score, cfg)
        stats["mean_negatives"][mode] = mask.mean_negatives_per_anchor()
    structure, attribute = sift_counts(graph, score, LossConfig(sift_threshold=sift_threshold, mode="NHS"))
    stats["structure_sifted"] = structure
    stats["attribute_sifted"] = attribute
    return stats


def _normalized_views(views: dict[str, np.ndarray]):
    mats = []
    norms = []
    shape = None
    for r in RELATIONS:
        if r not in views:
            raise ValueError(f"missing view {r!r}")
        u = np.asarray(views[r], dtype=np.float64)
        if u.ndim != 2 or u.shape[0] == 0:
            raise ValueError(f"view {r!r} must be a non-empty matrix")
        if shape is None:
            shape = u.shape
        elif u.shape != shape:
            raise ValueError("views must share one shape")
        nrm = np.linalg.norm(u, axis=1)
        if np.any(nrm == 0.0):
            bad = int(np.flatnonzero(nrm == 0.0)[0])
            raise ValueError(f"view {r!r}: projected row {bad} is a zero vector")
        mats.append(u / nrm[:, None])
        norms.append(nrm)
    return mats, norms


def _loss_terms(mats: list[np.ndarray], mask: NegativeMask, tau: float):
    """Exp-similarity blocks plus per-anchor positive and negative sums."""
    n = mats[0].shape[0]
    q = len(mats)
    exp_blocks = [[None] * q for _ in range(q)]
    for a in range(q):
        for b in range(a, q):
            block = np.exp((mats[a] @ mats[b].T) / tau)
            exp_blocks[a][b] = block
            if b != a:
                exp_blocks[b][a] = block.T
    masks = [mask.allowed[r] for r in RELATIONS]
    pos = np.zeros((q, n))
    neg = np.zeros((q, n))
    for a in range(q):
        for b in range(q):
            if b == a:
                neg[a] += (exp_blocks[a][a] * masks[a]).sum(axis=1)
            else:
                pos[a] += np.diag(exp_blocks[a][b])
                neg[a] += (exp_blocks[a][b] * masks[b]).sum(axis=1)
    return exp_blocks, masks, pos, neg


def nhs_loss(views: dict[str, np.ndarray], mask: NegativeMask, cfg: LossConfig) -> float:
    """Average contrastive loss over all anchors in all three views.

    Per anchor the loss is -log of the positive exp-similarity mass over
    the total (positives plus admissible intra- and inter-view negatives);
    it is zero exactly when every negative set is empty.
    """
    mats, _ = _normalized_views(views)
    if mask.n != mats[0].shape[0]:
        raise ValueError("mask size does not match views")
    _, _, pos, neg = _loss_terms(mats, mask, cfg.tau)
    terms = np.log1p(neg / pos)
    return float(terms.sum() / (len(mats) * mats[0].shape[0]))


def nhs_loss_backward(views: dict[str, np.ndarray], mask: NegativeMask, cfg: LossConfig):
    """Loss value plus exact gradients w.r.t. every projected view matrix."""
    mats, norms = _normalized_views(views)
    n = mats[0].shape[0]
    if mask.n != n:
        raise ValueError("mask size does not match views")
    q = len(mats)
    tau = cfg.tau
    exp_blocks, masks, pos, neg = _loss_terms(mats, mask, tau)
    loss = float(np.log1p(neg / pos).sum() / (q * n))

    scale = 1.0 / (q * n)
    total = pos + neg
    coef_pos = scale * (1.0 / total - 1.0 / pos)  # d term / d pos contribution
    coef_neg = scale * (1.0 / total)

    d_norm = [np.zeros_like(m) for m in mats]
    for a in range(q):
        for b in range(q):
            weight = np.zeros((n, n))
            if b == a:
                weight += (coef_neg[a][:, None] * masks[a]) * exp_blocks[a][a]
            else:
                np.fill_diagonal(weight, coef_pos[a] * np.diag(exp_blocks[a][b]))
                weight += (coef_neg[a][:, None] * masks[b]) * exp_blocks[a][b]
            weight /= tau
            d_norm[a] += weight @ mats[b]
            d_norm[b] += weight.T @ mats[a]

    grads: dict[str, np.ndarray] = {}
    for ri, r in enumerate(RELATIONS):
        g = d_norm[ri]
        m = mats[ri]
        inner = (g * m).sum(axis=1, keepdims=True)
        grads[r] = (g - inner * m) / norms[ri][:, None]
    return loss, grads
