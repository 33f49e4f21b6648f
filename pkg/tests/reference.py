"""Independent straight-line oracles used to check the library.

Everything here is written directly from the defining formulas with plain
Python loops and math functions, sharing no code with the package under
test. Keep it slow and obvious.
"""

from __future__ import annotations

import math

import numpy as np


def ref_cosine(x, y) -> float:
    dot = sum(float(a) * float(b) for a, b in zip(x, y))
    nx = math.sqrt(sum(float(a) ** 2 for a in x))
    ny = math.sqrt(sum(float(b) ** 2 for b in y))
    return dot / (nx * ny)


def ref_title_edges(title_vecs, rho_t) -> set[tuple[int, int]]:
    n = len(title_vecs)
    edges = set()
    for i in range(n):
        for j in range(i + 1, n):
            if ref_cosine(title_vecs[i], title_vecs[j]) > rho_t:
                edges.add((i, j))
    return edges


def ref_count_matching(set_a, set_b, rho) -> int:
    count = 0
    for a in set_a:
        for b in set_b:
            if ref_cosine(a, b) > rho:
                count += 1
    return count


def ref_association_edges(doc_sets, rho, gamma) -> set[tuple[int, int]]:
    n = len(doc_sets)
    edges = set()
    for i in range(n):
        for j in range(i + 1, n):
            if ref_count_matching(doc_sets[i], doc_sets[j], rho) > gamma:
                edges.add((i, j))
    return edges


def ref_build_graph(corpus, rho_t, rho_k, rho_e, gamma_k, gamma_e):
    titles = [d.title_vec for d in corpus.docs]
    keywords = [d.keyword_vecs for d in corpus.docs]
    events = [d.event_vecs for d in corpus.docs]
    return {
        "title": ref_title_edges(titles, rho_t),
        "keyword": ref_association_edges(keywords, rho_k, gamma_k),
        "event": ref_association_edges(events, rho_e, gamma_e),
    }


def edge_set(adjacency_matrix) -> set[tuple[int, int]]:
    n = adjacency_matrix.shape[0]
    return {(i, j) for i in range(n) for j in range(i + 1, n) if adjacency_matrix[i, j]}


def _sigmoid(v: float) -> float:
    if v >= 0:
        return 1.0 / (1.0 + math.exp(-v))
    e = math.exp(v)
    return e / (1.0 + e)


def ref_rwgcn_layer(x, neighbor_sets, gate_w, gate_b, trans_w, trans_b, relu: bool):
    """One relation-aware convolution layer, per-node loops.

    gate_w has shape (g, d): g == 1 scales the edge vector by one weight,
    g == d gates elementwise.
    """
    x = [list(map(float, row)) for row in x]
    n = len(x)
    d = len(x[0])
    g = len(gate_w)
    out = []
    for i in range(n):
        agg = [0.0] * d
        for j in sorted(neighbor_sets[i]):
            edge = [x[j][k] - x[i][k] for k in range(d)]
            gates = [
                _sigmoid(sum(gate_w[gi][k] * edge[k] for k in range(d)) + gate_b[gi])
                for gi in range(g)
            ]
            for k in range(d):
                scale = gates[0] if g == 1 else gates[k]
                agg[k] += scale * edge[k]
        concat = x[i] + agg
        row = []
        for oi in range(len(trans_w)):
            val = sum(trans_w[oi][k] * concat[k] for k in range(2 * d)) + trans_b[oi]
            row.append(max(val, 0.0) if relu else val)
        out.append(row)
    return np.array(out)


def ref_rwgcn_stack(x, neighbor_sets, layers):
    """layers: list of (gate_w, gate_b, trans_w, trans_b); ReLU on all but last."""
    out = np.asarray(x, dtype=float)
    for li, (gw, gb, tw, tb) in enumerate(layers):
        out = ref_rwgcn_layer(out, neighbor_sets, gw, gb, tw, tb, relu=(li < len(layers) - 1))
    return out


def ref_cgan(reps_by_relation, p_w, p_b, k_vec):
    """reps_by_relation: list of three n x d arrays in view order."""
    n = len(reps_by_relation[0])
    d = len(reps_by_relation[0][0])
    a = len(p_w)
    fused = []
    alphas = []
    for i in range(n):
        logits = []
        for rep in reps_by_relation:
            hidden = [
                math.tanh(sum(p_w[ai][k] * float(rep[i][k]) for k in range(d)) + p_b[ai])
                for ai in range(a)
            ]
            logits.append(sum(k_vec[ai] * hidden[ai] for ai in range(a)))
        mx = max(logits)
        exps = [math.exp(v - mx) for v in logits]
        total = sum(exps)
        alpha = [e / total for e in exps]
        fused.append(
            [
                sum(alpha[r] * float(reps_by_relation[r][i][k]) for r in range(len(reps_by_relation)))
                for k in range(d)
            ]
        )
        alphas.append(alpha)
    return np.array(fused), np.array(alphas)


def ref_project(h, w1, b1, w2, b2):
    h = [list(map(float, row)) for row in h]
    out = []
    for row in h:
        mid = [max(sum(w1[oi][k] * row[k] for k in range(len(row))) + b1[oi], 0.0) for oi in range(len(w1))]
        out.append([sum(w2[oi][k] * mid[k] for k in range(len(mid))) + b2[oi] for oi in range(len(w2))])
    return np.array(out)


def ref_select_negatives(neighbor_sets_by_relation, score, mode, sift_threshold):
    """Exhaustive two-rule negative selection; returns per-anchor index sets."""
    n = score.shape[0]
    result = []
    for i in range(n):
        allowed = set()
        for j in range(n):
            if j == i:
                continue
            if mode in ("NHS", "NHS_na"):
                if any(j in sets[i] for sets in neighbor_sets_by_relation):
                    continue
            if mode in ("NHS", "NHS_gs"):
                if score[i, j] > sift_threshold:
                    continue
            allowed.add(j)
        result.append(allowed)
    return result


def ref_nhs_loss(views, negative_sets_by_view, tau):
    """Term-by-term enumeration of the contrastive loss.

    views: list of three n x p arrays (anchor view order); negative sets
    are indexed the same way.
    """
    q = len(views)
    n = len(views[0])
    total = 0.0
    for a in range(q):
        for i in range(n):
            pos = 0.0
            for b in range(q):
                if b == a:
                    continue
                pos += math.exp(ref_cosine(views[a][i], views[b][i]) / tau)
            intra = 0.0
            for j in negative_sets_by_view[a][i]:
                intra += math.exp(ref_cosine(views[a][i], views[a][j]) / tau)
            inter = 0.0
            for b in range(q):
                if b == a:
                    continue
                for j in negative_sets_by_view[b][i]:
                    inter += math.exp(ref_cosine(views[a][i], views[b][j]) / tau)
            total += -math.log(pos / (pos + intra + inter))
    return total / (q * n)


def fd_gradient_vector(fn, vec, eps=1e-5):
    """Central finite differences of a scalar function of a flat vector."""
    vec = np.asarray(vec, dtype=float)
    grad = np.zeros_like(vec)
    for idx in range(vec.size):
        up = vec.copy()
        up[idx] += eps
        down = vec.copy()
        down[idx] -= eps
        grad[idx] = (fn(up) - fn(down)) / (2 * eps)
    return grad


def max_relative_error(analytic, numeric, floor=1e-6) -> float:
    analytic = np.asarray(analytic, dtype=float).ravel()
    numeric = np.asarray(numeric, dtype=float).ravel()
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / denom))


def ref_metrics(predicted, truth, class_set):
    total = len(truth)
    correct = sum(1 for p, t in zip(predicted, truth) if p == t)
    per_class = {}
    for c in sorted(class_set):
        tp = sum(1 for p, t in zip(predicted, truth) if p == c and t == c)
        fp = sum(1 for p, t in zip(predicted, truth) if p == c and t != c)
        fn = sum(1 for p, t in zip(predicted, truth) if p != c and t == c)
        tn = total - tp - fp - fn
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        per_class[c] = dict(tp=tp, fp=fp, tn=tn, fn=fn, precision=prec, recall=rec, f1=f1)
    k = len(per_class)
    return {
        "accuracy": correct / total,
        "precision": sum(v["precision"] for v in per_class.values()) / k,
        "f1": sum(v["f1"] for v in per_class.values()) / k,
        "per_class": per_class,
    }
