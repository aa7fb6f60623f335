"""Embedding-backed similarity metrics and the optimal-transport solver.

The transport solver is written here from scratch because it is the
numerical core of the distance suite: the exact path runs the classic
transportation-simplex (network simplex on the bipartite transport
graph), and a log-domain Sinkhorn iteration covers large instances.
Sinkhorn plans are rounded onto the transport polytope before costing,
so the returned cost is always the cost of a feasible plan and can never
undercut the exact optimum.
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist
from scipy.special import logsumexp

from .textmetrics import MetricScore, TokenSeq, light_stem

MARGINAL_TOL = 1e-9


# ---------------------------------------------------------------------------
# embedding tables


@dataclass(frozen=True)
class EmbeddingTable:
    dimension: int
    vectors: dict  # word -> np.ndarray, all of length `dimension`


def load_embeddings(path, vocab_filter: Optional[set] = None) -> EmbeddingTable:
    """Read a text-format embedding file: ``word v1 v2 ... vd`` per line.

    A leading ``count dim`` header line is detected and skipped.  The
    dimension is fixed by the first vector line; any later mismatch is an
    error naming the line.  Duplicate words keep their first vector.
    ``vocab_filter`` restricts loading to the given words.
    """
    path = Path(path)
    vectors: dict[str, np.ndarray] = {}
    dimension: Optional[int] = None
    with path.open(encoding="utf-8", errors="replace") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split()
            if not parts:
                continue
            if lineno == 1 and len(parts) == 2:
                try:
                    int(parts[0]), int(parts[1])
                except ValueError:
                    pass
                else:
                    continue  # count/dim header
            word = parts[0]
            if vocab_filter is not None and word not in vocab_filter:
                continue
            try:
                values = np.array([float(x) for x in parts[1:]], dtype=np.float64)
            except ValueError:
                raise ValueError(
                    f"{path} line {lineno}: non-numeric vector component") from None
            if values.size == 0:
                raise ValueError(f"{path} line {lineno}: no vector components")
            if dimension is None:
                dimension = values.size
            elif values.size != dimension:
                raise ValueError(
                    f"{path} line {lineno}: expected {dimension} components, "
                    f"got {values.size}")
            if word not in vectors:
                vectors[word] = values
    if dimension is None:
        raise ValueError(f"{path}: no embedding vectors found")
    return EmbeddingTable(dimension=dimension, vectors=vectors)


def sentence_vector(tokens: TokenSeq, table: EmbeddingTable) -> np.ndarray:
    """Mean of the in-vocabulary token vectors; out-of-vocabulary tokens
    are skipped and an all-OOV sentence is an error."""
    rows = [table.vectors[t] for t in tokens if t in table.vectors]
    if not rows:
        raise ValueError("no representable tokens in sentence")
    return np.mean(rows, axis=0)


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine similarity undefined for zero-norm vector")
    return float(np.dot(u, v) / (nu * nv))


def l2_distance(u: np.ndarray, v: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(u) - np.asarray(v)))


# ---------------------------------------------------------------------------
# optimal transport


@dataclass(frozen=True)
class TransportProblem:
    """Discrete OT instance: source weights, target weights, cost matrix."""

    source_weights: np.ndarray
    target_weights: np.ndarray
    costs: np.ndarray

    def validate(self) -> None:
        a = np.asarray(self.source_weights, dtype=np.float64)
        b = np.asarray(self.target_weights, dtype=np.float64)
        C = np.asarray(self.costs, dtype=np.float64)
        if a.ndim != 1 or b.ndim != 1:
            raise ValueError("weights must be one-dimensional")
        if C.shape != (a.size, b.size):
            raise ValueError(
                f"cost matrix shape {C.shape} does not match weights "
                f"({a.size}, {b.size})")
        if (a < 0).any() or (b < 0).any():
            raise ValueError("weights must be non-negative")
        if not np.isfinite(C).all() or (C < 0).any():
            raise ValueError("costs must be finite and non-negative")
        if a.sum() <= 0 or b.sum() <= 0:
            raise ValueError("zero-mass transport problem")
        if abs(a.sum() - b.sum()) > MARGINAL_TOL:
            raise ValueError(
                f"weight sums differ by {abs(a.sum() - b.sum()):.3g} "
                f"(tolerance {MARGINAL_TOL})")


@dataclass(frozen=True)
class TransportResult:
    plan: np.ndarray
    cost: float
    method: str
    iterations: int
    converged: bool
    marginal_error: float


def solve_transport(problem: TransportProblem, method: str = "exact",
                    epsilon: float = 0.01, max_iter: int = 10000,
                    tol: float = 1e-9) -> TransportResult:
    """Solve the transport problem exactly or with entropic regularization.

    ``exact`` runs the transportation simplex to a provably optimal
    vertex.  ``sinkhorn`` iterates in the log domain until the plan's
    marginal residual drops below ``tol`` (or ``max_iter`` is hit, which
    is reported via ``converged``), then rounds the plan to exact
    marginals.
    """
    problem.validate()
    a = np.asarray(problem.source_weights, dtype=np.float64)
    b = np.asarray(problem.target_weights, dtype=np.float64)
    C = np.asarray(problem.costs, dtype=np.float64)

    if method == "exact":
        plan, iterations = _transport_simplex(a, b, C)
        converged = True
    elif method == "sinkhorn":
        if epsilon <= 0:
            raise ValueError("sinkhorn epsilon must be positive")
        plan, iterations, converged = _sinkhorn_log(a, b, C, epsilon,
                                                    max_iter, tol)
    else:
        raise ValueError(f"unknown transport method {method!r}")

    cost = float((plan * C).sum())
    marginal_error = max(
        float(np.abs(plan.sum(axis=1) - a).max()),
        float(np.abs(plan.sum(axis=0) - b).max()),
    )
    return TransportResult(plan=plan, cost=cost, method=method,
                           iterations=iterations, converged=converged,
                           marginal_error=marginal_error)


def _transport_simplex(a: np.ndarray, b: np.ndarray,
                       C: np.ndarray) -> tuple[np.ndarray, int]:
    """Exact solver: northwest-corner start, then dual-guided pivots.

    The basis is always a spanning tree of the bipartite transport graph
    (rows 0..n-1, columns n..n+m-1).  Entering cells are picked by most
    negative reduced cost; after a long degenerate stall the rule drops
    to Bland's smallest-index selection, which cannot cycle.
    """
    n, m = C.shape
    scale = max(1.0, float(C.max()))
    opt_tol = 1e-11 * scale

    flow = np.zeros((n, m))
    basis: list[tuple[int, int]] = []
    rem_a = a.copy()
    rem_b = b.copy()
    i = j = 0
    for _ in range(n + m - 1):
        basis.append((i, j))
        q = min(rem_a[i], rem_b[j])
        flow[i, j] = q
        rem_a[i] -= q
        rem_b[j] -= q
        if i == n - 1:
            j += 1
        elif j == m - 1:
            i += 1
        elif rem_a[i] <= rem_b[j]:
            i += 1
        else:
            j += 1

    max_pivots = 1000 + 40 * (n + m) * (n + m)
    stall_limit = 4 * (n + m)
    stalled = 0
    use_bland = False

    for pivot_count in range(max_pivots):
        adj: list[list[int]] = [[] for _ in range(n + m)]
        for (bi, bj) in basis:
            adj[bi].append(n + bj)
            adj[n + bj].append(bi)

        u = np.zeros(n)
        v = np.zeros(m)
        seen = [False] * (n + m)
        seen[0] = True
        stack = [0]
        while stack:
            node = stack.pop()
            for nxt in adj[node]:
                if seen[nxt]:
                    continue
                seen[nxt] = True
                if node < n:
                    v[nxt - n] = C[node, nxt - n] - u[node]
                else:
                    u[nxt] = C[nxt, node - n] - v[node - n]
                stack.append(nxt)

        reduced = C - u[:, None] - v[None, :]
        for (bi, bj) in basis:
            reduced[bi, bj] = np.inf

        if use_bland:
            candidates = np.argwhere(reduced < -opt_tol)
            if candidates.size == 0:
                return flow, pivot_count
            enter_i, enter_j = (int(candidates[0][0]), int(candidates[0][1]))
        else:
            flat = int(np.argmin(reduced))
            enter_i, enter_j = divmod(flat, m)
            if reduced[enter_i, enter_j] >= -opt_tol:
                return flow, pivot_count

        # Unique tree path from the entering row node to the entering
        # column node; together with the entering edge it forms the cycle.
        parent: dict[int, int] = {enter_i: -1}
        queue = deque([enter_i])
        target = n + enter_j
        while queue:
            node = queue.popleft()
            if node == target:
                break
            for nxt in adj[node]:
                if nxt not in parent:
                    parent[nxt] = node
                    queue.append(nxt)
        path = [target]
        while path[-1] != enter_i:
            path.append(parent[path[-1]])

        cycle = [(enter_i, enter_j, 1)]
        sign = -1
        for x, y in zip(path, path[1:]):
            if x >= n:
                cycle.append((y, x - n, sign))
            else:
                cycle.append((x, y - n, sign))
            sign = -sign

        minus_cells = [(ci, cj) for ci, cj, s in cycle if s < 0]
        theta = min(flow[ci, cj] for ci, cj in minus_cells)
        leaving = min((ci, cj) for ci, cj in minus_cells
                      if flow[ci, cj] <= theta)

        for ci, cj, s in cycle:
            flow[ci, cj] += s * theta
        basis.remove(leaving)
        basis.append((enter_i, enter_j))
        flow[leaving] = 0.0

        if theta <= 1e-15 * scale:
            stalled += 1
            if stalled > stall_limit:
                use_bland = True
        else:
            stalled = 0

    raise RuntimeError("transport simplex exceeded its pivot budget")


def _sinkhorn_log(a: np.ndarray, b: np.ndarray, C: np.ndarray,
                  epsilon: float, max_iter: int,
                  tol: float) -> tuple[np.ndarray, int, bool]:
    pos_a = a > 0
    pos_b = b > 0
    aa = a[pos_a]
    bb = b[pos_b]
    CC = C[np.ix_(pos_a, pos_b)]
    log_a = np.log(aa)
    log_b = np.log(bb)
    f = np.zeros(aa.size)
    g = np.zeros(bb.size)
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        f = epsilon * (log_a - logsumexp((g[None, :] - CC) / epsilon, axis=1))
        g = epsilon * (log_b - logsumexp((f[:, None] - CC) / epsilon, axis=0))
        plan = np.exp((f[:, None] + g[None, :] - CC) / epsilon)
        err = max(
            float(np.abs(plan.sum(axis=1) - aa).max()),
            float(np.abs(plan.sum(axis=0) - bb).max()),
        )
        if err <= tol:
            converged = True
            break
    plan = _round_to_feasible(plan, aa, bb)
    full = np.zeros_like(C)
    full[np.ix_(pos_a, pos_b)] = plan
    return full, iterations, converged


def _round_to_feasible(plan: np.ndarray, a: np.ndarray,
                       b: np.ndarray) -> np.ndarray:
    """Project a near-feasible plan onto the transport polytope."""
    row = plan.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(row > 0, np.minimum(a / row, 1.0), 1.0)
    plan = plan * scale[:, None]
    col = plan.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(col > 0, np.minimum(b / col, 1.0), 1.0)
    plan = plan * scale[None, :]
    err_a = a - plan.sum(axis=1)
    err_b = b - plan.sum(axis=0)
    total = err_a.sum()
    if total > 1e-300:
        plan = plan + np.outer(err_a, err_b) / total
    return plan


# ---------------------------------------------------------------------------
# word mover's distance


def nbow_weights(tokens: TokenSeq, table: EmbeddingTable
                 ) -> tuple[list[str], np.ndarray, np.ndarray]:
    """Normalized bag-of-words over in-vocabulary token types.

    Returns the sorted types, their frequency-proportional weights, and
    the stacked embedding matrix.
    """
    counts = Counter(t for t in tokens if t in table.vectors)
    if not counts:
        raise ValueError("no representable tokens in sentence")
    types = sorted(counts)
    weights = np.array([counts[t] for t in types], dtype=np.float64)
    weights /= weights.sum()
    matrix = np.stack([table.vectors[t] for t in types])
    return types, weights, matrix


def wmd(a: TokenSeq, b: TokenSeq, table: EmbeddingTable,
        method: str = "exact", epsilon: float = 0.01,
        max_iter: int = 10000) -> MetricScore:
    """Word mover's distance: minimal cost of moving one sentence's
    normalized bag-of-words onto the other's, with Euclidean ground costs."""
    _, wa, va = nbow_weights(a, table)
    _, wb, vb = nbow_weights(b, table)
    costs = cdist(va, vb)
    result = solve_transport(TransportProblem(wa, wb, costs),
                             method=method, epsilon=epsilon, max_iter=max_iter)
    return MetricScore("wmd", result.cost, orientation="distance")


# ---------------------------------------------------------------------------
# noun-based distance


def load_noun_lexicon(path: Optional[Path] = None) -> frozenset:
    """Noun word list, one per line, '#' comments allowed; default bundled."""
    if path is None:
        ref = resources.files("labelsim.data").joinpath("nouns.txt")
        text = ref.read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    nouns = set()
    for line in text.splitlines():
        word = line.strip().lower()
        if word and not word.startswith("#"):
            nouns.add(word)
    if not nouns:
        raise ValueError("noun lexicon is empty")
    return frozenset(nouns)


def lexicon_noun_tagger(nouns: Optional[frozenset] = None
                        ) -> Callable[[TokenSeq], list[str]]:
    """Tagger that keeps tokens found (directly or via stemming) in a noun list."""
    if nouns is None:
        nouns = load_noun_lexicon()

    def tagger(tokens: TokenSeq) -> list[str]:
        return [t for t in tokens if t in nouns or light_stem(t) in nouns]

    return tagger


def nouns_from_tags(tokens: TokenSeq, tags: dict) -> list[str]:
    """Select noun tokens using gold tags: a map token_index -> POS tag."""
    out = []
    for idx in sorted(tags):
        tag = tags[idx].upper()
        if 0 <= idx < len(tokens) and (tag.startswith("NN") or tag == "NOUN"):
            out.append(tokens[idx])
    return out


def pos_distance(a: TokenSeq, b: TokenSeq,
                 noun_tagger: Callable[[TokenSeq], list[str]],
                 table: EmbeddingTable,
                 aggregate: str = "matched") -> Optional[MetricScore]:
    """Mean embedding distance between the nouns of the two sentences.

    With ``matched`` aggregation the nouns are paired one-to-one by a
    minimum-cost assignment over min(#nouns) pairs; ``all_pairs``
    averages the full cross-product instead.  Returns None when either
    side has no embeddable noun, so callers can drop the pair.
    """
    nouns_a = [t for t in noun_tagger(a) if t in table.vectors]
    nouns_b = [t for t in noun_tagger(b) if t in table.vectors]
    if not nouns_a or not nouns_b:
        return None
    dists = cdist(np.stack([table.vectors[t] for t in nouns_a]),
                  np.stack([table.vectors[t] for t in nouns_b]))
    if aggregate == "matched":
        rows, cols = linear_sum_assignment(dists)
        value = float(dists[rows, cols].mean())
    elif aggregate == "all_pairs":
        value = float(dists.mean())
    else:
        raise ValueError(f"unknown pos_distance aggregate {aggregate!r}")
    return MetricScore("pos_dist", value, orientation="distance")


def orient(score: MetricScore) -> float:
    """Map a score to the higher-means-more-similar axis used in correlations."""
    if score.orientation == "distance":
        return -score.value
    return score.value


# ---------------------------------------------------------------------------
# external per-pair artifacts


def load_sentence_embeddings(path) -> dict:
    """Per-pair sentence vectors: CSV pair_id, side in {a, b}, then the
    vector as whitespace-separated floats.  Returns pair_id -> {side: vec}."""
    import csv

    path = Path(path)
    out: dict[str, dict[str, np.ndarray]] = {}
    dimension: Optional[int] = None
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = ("pair_id", "side", "vector")
        if reader.fieldnames is None or \
                not set(required) <= set(reader.fieldnames):
            raise ValueError(f"{path}: expected columns pair_id,side,vector")
        for lineno, row in enumerate(reader, start=2):
            pid = row["pair_id"].strip()
            side = row["side"].strip().lower()
            if side not in ("a", "b"):
                raise ValueError(f"{path} row {lineno}: side must be a or b")
            try:
                vec = np.array([float(x) for x in row["vector"].split()],
                               dtype=np.float64)
            except ValueError:
                raise ValueError(
                    f"{path} row {lineno}: non-numeric vector") from None
            if vec.size == 0:
                raise ValueError(f"{path} row {lineno}: empty vector")
            if dimension is None:
                dimension = vec.size
            elif vec.size != dimension:
                raise ValueError(
                    f"{path} row {lineno}: expected {dimension} components")
            sides = out.setdefault(pid, {})
            if side in sides:
                raise ValueError(
                    f"{path} row {lineno}: duplicate side {side!r} for {pid!r}")
            sides[side] = vec
    return out


def load_gold_tags(path) -> dict:
    """Gold POS tags: CSV pair_id, side, token_index, tag.
    Returns (pair_id, side) -> {token_index: tag}."""
    import csv

    path = Path(path)
    out: dict[tuple[str, str], dict[int, str]] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = ("pair_id", "side", "token_index", "tag")
        if reader.fieldnames is None or \
                not set(required) <= set(reader.fieldnames):
            raise ValueError(
                f"{path}: expected columns pair_id,side,token_index,tag")
        for lineno, row in enumerate(reader, start=2):
            side = row["side"].strip().lower()
            if side not in ("a", "b"):
                raise ValueError(f"{path} row {lineno}: side must be a or b")
            try:
                idx = int(row["token_index"])
            except ValueError:
                raise ValueError(
                    f"{path} row {lineno}: bad token_index") from None
            key = (row["pair_id"].strip(), side)
            tags = out.setdefault(key, {})
            if idx in tags:
                raise ValueError(
                    f"{path} row {lineno}: duplicate token_index {idx}")
            tags[idx] = row["tag"].strip()
    return out
