"""Learnable forward computation and hand-derived reverse-mode gradients.

Three building blocks:

* relation-aware graph convolution: per edge, the difference vector
  x_j - x_i is scaled by a learned sigmoid gate, summed over neighbors,
  concatenated with the node feature, and linearly transformed (ReLU on
  hidden layers, identity on the final layer);
* cross-graph attention: a shared feedforward net scores each relation's
  representation of a node, softmax over the three relations gives the
  fusion weights;
* projection head: two-layer MLP (ReLU in the middle) producing the
  contrastive samples.

Everything runs in float64 by default so that analytic gradients can be
validated against central finite differences to 1e-4 relative error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .graph import RELATIONS, RelationAdjacency


@dataclass
class LinearMap:
    """Affine map y = W x + b with explicit shapes."""

    weight: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        self.weight = np.asarray(self.weight)
        self.bias = np.asarray(self.bias)
        if self.weight.ndim != 2 or self.bias.ndim != 1:
            raise ValueError("weight must be 2-d and bias 1-d")
        if self.weight.shape[0] != self.bias.shape[0]:
            raise ValueError("bias length must equal weight rows")
        if not (np.all(np.isfinite(self.weight)) and np.all(np.isfinite(self.bias))):
            raise ValueError("parameters must be finite")

    @property
    def out_dim(self) -> int:
        return self.weight.shape[0]

    @property
    def in_dim(self) -> int:
        return self.weight.shape[1]


@dataclass
class RwGcnLayerParams:
    """Gate (edge vector -> importance) and transform (concat -> output)."""

    gate: LinearMap
    transform: LinearMap

    def __post_init__(self):
        if self.transform.in_dim != 2 * self.gate.in_dim:
            raise ValueError("transform input must be twice the gate input dim")


@dataclass
class CganParams:
    """Shared attention net: score_r = k . tanh(p_net(x_r))."""

    p_net: LinearMap
    k_vec: np.ndarray

    def __post_init__(self):
        self.k_vec = np.asarray(self.k_vec)
        if self.k_vec.shape != (self.p_net.out_dim,):
            raise ValueError("k_vec length must equal p_net output dim")


@dataclass
class ProjectionParams:
    """Two-layer projection head applied before the contrastive loss."""

    layer1: LinearMap
    layer2: LinearMap

    def __post_init__(self):
        if self.layer2.in_dim != self.layer1.out_dim:
            raise ValueError("projection layer dims do not chain")


@dataclass
class ArchitectureSpec:
    """Shapes and switches for the full model."""

    feature_dim: int
    n_layers: int = 2
    hidden_dim: int | None = None
    proj_dim: int | None = None
    attention_dim: int | None = None
    gate_style: str = "scalar"  # "scalar" or "vector"
    dtype: str = "float64"

    def __post_init__(self):
        if self.feature_dim < 1:
            raise ValueError("feature_dim must be positive")
        if self.n_layers < 0:
            raise ValueError("n_layers must be nonnegative")
        if self.gate_style not in ("scalar", "vector"):
            raise ValueError("gate_style must be 'scalar' or 'vector'")
        if self.dtype not in ("float64", "float32"):
            raise ValueError("dtype must be 'float64' or 'float32'")

    @property
    def hidden(self) -> int:
        return self.hidden_dim if self.hidden_dim is not None else self.feature_dim

    @property
    def rep_dim(self) -> int:
        """Output dim of the convolution stack (input dim when L = 0)."""
        return self.hidden if self.n_layers > 0 else self.feature_dim

    @property
    def proj(self) -> int:
        # Floor of 32: with zero-init biases a freshly initialized ReLU head
        # emits an exactly-zero row whenever every hidden unit is negative
        # (probability 2^-width per row), and zero rows are a hard error in
        # the loss. 32 units make that practically impossible.
        return self.proj_dim if self.proj_dim is not None else max(self.rep_dim, 32)

    @property
    def attention(self) -> int:
        return self.attention_dim if self.attention_dim is not None else (self.rep_dim + 1) // 2

    @property
    def np_dtype(self):
        return np.float64 if self.dtype == "float64" else np.float32

    def layer_dims(self) -> list[tuple[int, int]]:
        dims = []
        d_in = self.feature_dim
        for _ in range(self.n_layers):
            dims.append((d_in, self.hidden))
            d_in = self.hidden
        return dims

    def to_dict(self) -> dict:
        return {
            "feature_dim": self.feature_dim,
            "n_layers": self.n_layers,
            "hidden_dim": self.hidden_dim,
            "proj_dim": self.proj_dim,
            "attention_dim": self.attention_dim,
            "gate_style": self.gate_style,
            "dtype": self.dtype,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ArchitectureSpec":
        return cls(**data)


@dataclass
class ModelParameters:
    """All learnable weights; also reused as the container for gradients."""

    per_relation: dict[str, list[RwGcnLayerParams]]
    cgan: CganParams
    projection: ProjectionParams

    def __post_init__(self):
        if set(self.per_relation) != set(RELATIONS):
            raise ValueError(f"per_relation must cover exactly {RELATIONS}")
        counts = {len(v) for v in self.per_relation.values()}
        if len(counts) != 1:
            raise ValueError("all relations must have the same layer count")

    def leaves(self) -> Iterable[tuple[str, np.ndarray]]:
        """Deterministic traversal of every parameter array."""
        for r in RELATIONS:
            for li, layer in enumerate(self.per_relation[r]):
                yield f"{r}.layer{li}.gate.weight", layer.gate.weight
                yield f"{r}.layer{li}.gate.bias", layer.gate.bias
                yield f"{r}.layer{li}.transform.weight", layer.transform.weight
                yield f"{r}.layer{li}.transform.bias", layer.transform.bias
        yield "cgan.p_net.weight", self.cgan.p_net.weight
        yield "cgan.p_net.bias", self.cgan.p_net.bias
        yield "cgan.k_vec", self.cgan.k_vec
        yield "projection.layer1.weight", self.projection.layer1.weight
        yield "projection.layer1.bias", self.projection.layer1.bias
        yield "projection.layer2.weight", self.projection.layer2.weight
        yield "projection.layer2.bias", self.projection.layer2.bias

    def to_vector(self) -> np.ndarray:
        return np.concatenate([arr.ravel() for _, arr in self.leaves()])

    def n_params(self) -> int:
        return sum(arr.size for _, arr in self.leaves())

    def map_arrays(self, fn: Callable[[np.ndarray], np.ndarray]) -> "ModelParameters":
        def lin(m: LinearMap) -> LinearMap:
            return LinearMap(weight=fn(m.weight), bias=fn(m.bias))

        per_relation = {
            r: [RwGcnLayerParams(gate=lin(l.gate), transform=lin(l.transform)) for l in layers]
            for r, layers in self.per_relation.items()
        }
        cgan = CganParams(p_net=lin(self.cgan.p_net), k_vec=fn(self.cgan.k_vec))
        projection = ProjectionParams(layer1=lin(self.projection.layer1), layer2=lin(self.projection.layer2))
        return ModelParameters(per_relation=per_relation, cgan=cgan, projection=projection)

    def zeros_like(self) -> "ModelParameters":
        return self.map_arrays(np.zeros_like)

    def copy(self) -> "ModelParameters":
        return self.map_arrays(np.array)

    def from_vector(self, vec: np.ndarray) -> "ModelParameters":
        """New parameters with the same shapes, values taken from vec."""
        vec = np.asarray(vec)
        if vec.shape != (self.n_params(),):
            raise ValueError(f"expected vector of length {self.n_params()}, got {vec.shape}")
        pos = 0

        def take(template: np.ndarray) -> np.ndarray:
            nonlocal pos
            out = vec[pos : pos + template.size].reshape(template.shape).astype(template.dtype, copy=True)
            pos += template.size
            return out

        return self.map_arrays(take)


Gradients = ModelParameters


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


# ---------------------------------------------------------------------------
# Relation-aware graph convolution
# ---------------------------------------------------------------------------


def _rwgcn_layer_cached(features: np.ndarray, adjacency: RelationAdjacency, layer: RwGcnLayerParams, final: bool):
    x = np.asarray(features)
    n, d_in = x.shape
    if layer.gate.in_dim != d_in:
        raise ValueError(f"gate expects dim {layer.gate.in_dim}, features have {d_in}")
    if adjacency.n != n:
        raise ValueError("adjacency size does not match feature rows")
    mask = adjacency.edges.astype(x.dtype)
    cache = {"x": x, "mask": mask, "final": final}
    if layer.gate.out_dim == 1:
        # scalar gate: sigma(w.(x_j - x_i) + b) factors through per-node
        # projections, so no n x n x d tensor is ever materialized
        proj = x @ layer.gate.weight[0]  # (n,)
        pre_gate = proj[None, :] - proj[:, None] + layer.gate.bias[0]
        gate = _sigmoid(pre_gate)
        weight_mat = mask * gate  # w_ij = m_ij * s_ij
        agg = weight_mat @ x - weight_mat.sum(axis=1)[:, None] * x
        cache.update(gate=gate, weight_mat=weight_mat)
    else:
        diff = x[None, :, :] - x[:, None, :]  # diff[i, j] = x_j - x_i
        gate = _sigmoid(diff @ layer.gate.weight.T + layer.gate.bias)
        agg = (mask[:, :, None] * gate * diff).sum(axis=1)
        cache.update(gate=gate, diff=diff)
    concat = np.concatenate([x, agg], axis=1)
    pre = concat @ layer.transform.weight.T + layer.transform.bias
    out = pre if final else np.maximum(pre, 0.0)
    cache.update(concat=concat, pre=pre)
    return out, cache


def _rwgcn_layer_backward(d_out: np.ndarray, cache: dict, layer: RwGcnLayerParams):
    x, mask, gate = cache["x"], cache["mask"], cache["gate"]
    d_in = x.shape[1]
    d_pre = d_out if cache["final"] else d_out * (cache["pre"] > 0)
    dw_t = d_pre.T @ cache["concat"]
    db_t = d_pre.sum(axis=0)
    d_concat = d_pre @ layer.transform.weight
    d_x_direct = d_concat[:, :d_in]
    d_agg = d_concat[:, d_in:]

    if layer.gate.out_dim == 1:
        # mirror of the factored forward; all reductions stay n x n or n x d
        weight_mat = cache["weight_mat"]
        d_s = mask * (d_agg @ x.T - (d_agg * x).sum(axis=1)[:, None])
        du = d_s * gate * (1.0 - gate)
        du_col = du.sum(axis=0)
        du_row = du.sum(axis=1)
        dw_g = (du_col - du_row) @ x
        db_g = du.sum()
        d_x_agg = (
            weight_mat.T @ d_agg
            - weight_mat.sum(axis=1)[:, None] * d_agg
            + (du_col - du_row)[:, None] * layer.gate.weight[0]
        )
        dw_g = dw_g[None, :]
        db_g = np.array([db_g])
    else:
        diff = cache["diff"]
        d_gate = mask[:, :, None] * (d_agg[:, None, :] * diff)
        d_pre_gate = d_gate * gate * (1.0 - gate)
        d_diff = (mask[:, :, None] * gate) * d_agg[:, None, :] + d_pre_gate @ layer.gate.weight
        dw_g = np.einsum("ijg,ijd->gd", d_pre_gate, diff)
        db_g = d_pre_gate.sum(axis=(0, 1))
        d_x_agg = d_diff.sum(axis=0) - d_diff.sum(axis=1)

    d_x = d_x_direct + d_x_agg
    grads = RwGcnLayerParams(
        gate=LinearMap(weight=dw_g, bias=db_g),
        transform=LinearMap(weight=dw_t, bias=db_t),
    )
    return d_x, grads


def rwgcn_forward(features: np.ndarray, adjacency: RelationAdjacency, layer: RwGcnLayerParams, final: bool = True) -> np.ndarray:
    """Single relation-aware convolution layer."""
    out, _ = _rwgcn_layer_cached(features, adjacency, layer, final=final)
    return out


def rwgcn_stack_cached(features: np.ndarray, adjacency: RelationAdjacency, layers: list[RwGcnLayerParams]):
    out = np.asarray(features)
    caches = []
    for li, layer in enumerate(layers):
        out, cache = _rwgcn_layer_cached(out, adjacency, layer, final=(li == len(layers) - 1))
        caches.append(cache)
    return out, caches


def rwgcn_stack(features: np.ndarray, adjacency: RelationAdjacency, layers: list[RwGcnLayerParams]) -> np.ndarray:
    """Sequential composition of convolution layers (identity when empty)."""
    out, _ = rwgcn_stack_cached(features, adjacency, layers)
    return out


def rwgcn_stack_backward(d_out: np.ndarray, caches: list[dict], layers: list[RwGcnLayerParams]):
    grads: list[RwGcnLayerParams] = [None] * len(layers)  # type: ignore[list-item]
    d_x = d_out
    for li in range(len(layers) - 1, -1, -1):
        d_x, grads[li] = _rwgcn_layer_backward(d_x, caches[li], layers[li])
    return d_x, grads


# ---------------------------------------------------------------------------
# Cross-graph attention
# ---------------------------------------------------------------------------


def cgan_forward_cached(per_relation_reps: dict[str, np.ndarray], params: CganParams):
    reps = [np.asarray(per_relation_reps[r]) for r in RELATIONS]
    shapes = {m.shape for m in reps}
    if len(shapes) != 1:
        raise ValueError(f"per-relation representations disagree on shape: {shapes}")
    stacked = np.stack(reps, axis=1)  # n x 3 x d
    hidden = np.tanh(stacked @ params.p_net.weight.T + params.p_net.bias)  # n x 3 x a
    logits = hidden @ params.k_vec  # n x 3
    shifted = logits - logits.max(axis=1, keepdims=True)
    expd = np.exp(shifted)
    attention = expd / expd.sum(axis=1, keepdims=True)
    fused = np.einsum("nr,nrd->nd", attention, stacked)
    cache = {"stacked": stacked, "hidden": hidden, "attention": attention}
    return fused, attention, cache


def cgan_forward(per_relation_reps: dict[str, np.ndarray], params: CganParams):
    """Fuse per-relation representations; returns (fused, attention)."""
    fused, attention, _ = cgan_forward_cached(per_relation_reps, params)
    return fused, attention


def cgan_backward(d_fused: np.ndarray, cache: dict, params: CganParams):
    """Gradients of a scalar loss through the fusion step."""
    stacked, hidden, attention = cache["stacked"], cache["hidden"], cache["attention"]
    d_alpha = np.einsum("nd,nrd->nr", d_fused, stacked)
    d_stacked = attention[:, :, None] * d_fused[:, None, :]
    inner = (attention * d_alpha).sum(axis=1, keepdims=True)
    d_logits = attention * (d_alpha - inner)
    d_k = np.einsum("nr,nra->a", d_logits, hidden)
    d_hidden = d_logits[:, :, None] * params.k_vec
    d_pre = d_hidden * (1.0 - hidden**2)
    dw_p = np.einsum("nra,nrd->ad", d_pre, stacked)
    db_p = d_pre.sum(axis=(0, 1))
    d_stacked += d_pre @ params.p_net.weight
    d_reps = {r: d_stacked[:, ri, :] for ri, r in enumerate(RELATIONS)}
    grads = CganParams(p_net=LinearMap(weight=dw_p, bias=db_p), k_vec=d_k)
    return d_reps, grads


# ---------------------------------------------------------------------------
# Projection head
# ---------------------------------------------------------------------------


def project_cached(reps: np.ndarray, params: ProjectionParams):
    h = np.asarray(reps)
    pre1 = h @ params.layer1.weight.T + params.layer1.bias
    act = np.maximum(pre1, 0.0)
    out = act @ params.layer2.weight.T + params.layer2.bias
    return out, {"h": h, "pre1": pre1, "act": act}


def project(reps: np.ndarray, params: ProjectionParams) -> np.ndarray:
    """Map representations into the contrastive latent space."""
    out, _ = project_cached(reps, params)
    return out


def project_backward(d_out: np.ndarray, cache: dict, params: ProjectionParams):
    dw2 = d_out.T @ cache["act"]
    db2 = d_out.sum(axis=0)
    d_act = d_out @ params.layer2.weight
    d_pre1 = d_act * (cache["pre1"] > 0)
    dw1 = d_pre1.T @ cache["h"]
    db1 = d_pre1.sum(axis=0)
    d_h = d_pre1 @ params.layer1.weight
    grads = ProjectionParams(
        layer1=LinearMap(weight=dw1, bias=db1),
        layer2=LinearMap(weight=dw2, bias=db2),
    )
    return d_h, grads


# ---------------------------------------------------------------------------
# Initialization and gradient oracle
# ---------------------------------------------------------------------------


def _glorot(rng: np.random.Generator, out_dim: int, in_dim: int, dtype) -> np.ndarray:
    bound = math.sqrt(6.0 / (in_dim + out_dim))
    return rng.uniform(-bound, bound, size=(out_dim, in_dim)).astype(dtype)


def init_parameters(arch: ArchitectureSpec, seed: int) -> ModelParameters:
    """Glorot-uniform weights, zero biases; deterministic for a fixed seed."""
    rng = np.random.default_rng(seed)
    dt = arch.np_dtype
    per_relation: dict[str, list[RwGcnLayerParams]] = {}
    for r in RELATIONS:
        layers = []
        for d_in, d_out in arch.layer_dims():
            gate_out = 1 if arch.gate_style == "scalar" else d_in
            gate = LinearMap(weight=_glorot(rng, gate_out, d_in, dt), bias=np.zeros(gate_out, dtype=dt))
            transform = LinearMap(
                weight=_glorot(rng, d_out, 2 * d_in, dt), bias=np.zeros(d_out, dtype=dt)
            )
            layers.append(RwGcnLayerParams(gate=gate, transform=transform))
        per_relation[r] = layers
    d = arch.rep_dim
    a = arch.attention
    cgan = CganParams(
        p_net=LinearMap(weight=_glorot(rng, a, d, dt), bias=np.zeros(a, dtype=dt)),
        k_vec=_glorot(rng, 1, a, dt)[0],
    )
    p = arch.proj
    projection = ProjectionParams(
        layer1=LinearMap(weight=_glorot(rng, p, d, dt), bias=np.zeros(p, dtype=dt)),
        layer2=LinearMap(weight=_glorot(rng, p, p, dt), bias=np.zeros(p, dtype=dt)),
    )
    return ModelParameters(per_relation=per_relation, cgan=cgan, projection=projection)


def finite_difference_gradient(
    loss_fn: Callable[[ModelParameters], float], params: ModelParameters, epsilon: float = 1e-5
) -> Gradients:
    """Central-difference gradient of loss_fn at params, one scalar at a time."""
    base = params.to_vector().astype(np.float64)
    grad = np.zeros_like(base)
    for idx in range(base.size):
        for sign in (1.0, -1.0):
            shifted = base.copy()
            shifted[idx] += sign * epsilon
            value = float(loss_fn(params.from_vector(shifted)))
            if not math.isfinite(value):
                raise ValueError(f"loss is non-finite at parameter index {idx}")
            grad[idx] += sign * value
        grad[idx] /= 2.0 * epsilon
    return params.from_vector(grad)
