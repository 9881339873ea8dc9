"""Window-based classical detectors: k-means, DBSCAN, LOF, isolation
forest, one-class SVM and gradient-boosted trees.

All of them consume sliding subsequences; a window's score lands on its
final timestamp.  The boosted-tree detector is the exception: it forecasts
the observation after each window, like the statistical family.
Neighbor searches are exact brute force, which keeps every detector
oracle-testable at the corpus sizes involved (at most ~10^4 windows).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..core import (
    DetectorConfig,
    FittedDetector,
    ScoreSeries,
    TimeSeries,
    WindowFrame,
    frame,
    subsequences,
)
from ..errors import NoCorePoints, TooFewWindows

__all__ = [
    "KMeansModel",
    "DbscanModel",
    "LofModel",
    "IsoForest",
    "OcSvmModel",
    "GbtModel",
    "kmeans_fit",
    "kmeans_score",
    "dbscan_fit",
    "dbscan_score",
    "lof_score",
    "iforest_fit",
    "iforest_score",
    "ocsvm_fit",
    "ocsvm_score",
    "gbt_fit",
    "gbt_score",
]

_KDIST_FLOOR = 1e-12


def _pairwise_sq(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances between row sets, clipped at zero."""
    aa = np.einsum("ij,ij->i", a, a)
    bb = np.einsum("ij,ij->i", b, b)
    sq = aa[:, None] + bb[None, :] - 2.0 * (a @ b.T)
    return np.maximum(sq, 0.0)


# ---------------------------------------------------------------------------
# Subsequence k-means


@dataclass(frozen=True)
class KMeansModel:
    k: int
    centroids: np.ndarray
    inertia: float

    def __post_init__(self):
        centroids = np.asarray(self.centroids, dtype=np.float64)
        if self.k < 1 or centroids.shape[0] != self.k:
            raise ValueError(f"need k >= 1 centroids, got k={self.k}, {centroids.shape}")
        if not np.all(np.isfinite(centroids)):
            raise ValueError("centroids must be finite")
        object.__setattr__(self, "centroids", centroids)


def kmeans_fit(train_windows: WindowFrame, k: int = 4, seed: int = 0) -> KMeansModel:
    """Lloyd iterations from distance-weighted seeding until the assignment
    stops changing (at most 300 rounds); empty clusters keep their centroid."""
    windows = train_windows.windows
    m = windows.shape[0]
    if m < k:
        raise TooFewWindows(f"k-means needs at least k={k} windows, got {m}")
    rng = np.random.default_rng(seed)

    centroids = np.empty((k, windows.shape[1]))
    centroids[0] = windows[rng.integers(m)]
    d2 = _pairwise_sq(windows, centroids[:1])[:, 0]
    for i in range(1, k):
        total = d2.sum()
        if total > 0.0:
            choice = rng.choice(m, p=d2 / total)
        else:
            choice = rng.integers(m)
        centroids[i] = windows[choice]
        d2 = np.minimum(d2, _pairwise_sq(windows, centroids[i : i + 1])[:, 0])

    assignment = None
    inertia = math.inf
    for _ in range(300):
        d2 = _pairwise_sq(windows, centroids)
        new_assignment = d2.argmin(axis=1)
        new_inertia = float(d2[np.arange(m), new_assignment].sum())
        assert new_inertia <= inertia * (1.0 + 1e-12) + 1e-9, "inertia increased"
        inertia = new_inertia
        if assignment is not None and np.array_equal(new_assignment, assignment):
            break
        assignment = new_assignment
        for c in range(k):
            members = windows[assignment == c]
            if members.shape[0]:
                centroids[c] = members.mean(axis=0)
    return KMeansModel(k=k, centroids=centroids.copy(), inertia=inertia)


def kmeans_score(
    model: KMeansModel, test_windows: WindowFrame, detector_name: str = "kmeans"
) -> ScoreSeries:
    """Euclidean distance to the nearest centroid, assigned to the window end."""
    d2 = _pairwise_sq(test_windows.windows, model.centroids)
    return ScoreSeries(
        scores=np.sqrt(d2.min(axis=1)),
        indices=test_windows.target_indices,
        detector_name=detector_name,
    )


# ---------------------------------------------------------------------------
# DBSCAN-derived distance-to-core scoring


@dataclass(frozen=True)
class DbscanModel:
    epsilon: float
    mu_min_pts: int
    core_points: np.ndarray

    def __post_init__(self):
        if self.epsilon <= 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.mu_min_pts < 1:
            raise ValueError(f"mu must be >= 1, got {self.mu_min_pts}")
        core = np.asarray(self.core_points, dtype=np.float64)
        if core.ndim != 2 or core.shape[0] < 1:
            raise NoCorePoints("model must retain at least one core point")
        object.__setattr__(self, "core_points", core)


def dbscan_fit(train_windows: WindowFrame, epsilon: float = 0.4, mu: int = 5) -> DbscanModel:
    """Find the training windows whose epsilon-neighborhood (self excluded)
    holds at least mu points."""
    windows = train_windows.windows
    d2 = _pairwise_sq(windows, windows)
    within = d2 <= epsilon * epsilon
    np.fill_diagonal(within, False)
    counts = within.sum(axis=1)
    core_mask = counts >= mu
    if not core_mask.any():
        raise NoCorePoints(
            f"no training window has {mu} neighbors within epsilon={epsilon}"
        )
    return DbscanModel(epsilon=epsilon, mu_min_pts=mu, core_points=windows[core_mask].copy())


def _dbscan_model_score(
    model: DbscanModel, test_windows: WindowFrame, detector_name: str
) -> ScoreSeries:
    d = np.sqrt(_pairwise_sq(test_windows.windows, model.core_points)).min(axis=1)
    scores = np.where(d <= model.epsilon, 0.0, d)
    return ScoreSeries(
        scores=scores, indices=test_windows.target_indices, detector_name=detector_name
    )


def dbscan_score(
    train_windows: WindowFrame,
    test_windows: WindowFrame,
    epsilon: float = 0.4,
    mu: int = 5,
    detector_name: str = "dbscan",
) -> ScoreSeries:
    """Distance to the nearest training core point; 0 inside its epsilon ball."""
    model = dbscan_fit(train_windows, epsilon, mu)
    return _dbscan_model_score(model, test_windows, detector_name)


# ---------------------------------------------------------------------------
# Local outlier factor


@dataclass(frozen=True)
class LofModel:
    """Reference windows with the precomputed structures for exact queries.

    Distances to every reference point, their k-distances and the runner-up
    (k-1) distances are cached so each query costs O(m) instead of O(m^2).
    """

    k_neighbors: int
    reference_windows: np.ndarray
    distance: str = "euclidean"
    minkowski_p: float = 2.0
    ref_distances: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]
    kdist: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]
    kdist_prev: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]

    def __post_init__(self):
        windows = np.asarray(self.reference_windows, dtype=np.float64)
        m = windows.shape[0]
        if not (1 <= self.k_neighbors < m):
            raise TooFewWindows(
                f"need k_neighbors < m reference windows, got k={self.k_neighbors}, m={m}"
            )
        if self.distance not in ("euclidean", "minkowski_p"):
            raise ValueError(f"unknown distance {self.distance!r}")
        object.__setattr__(self, "reference_windows", windows)
        if self.ref_distances is None:
            d = self._distances(windows, windows)
            np.fill_diagonal(d, np.inf)
            k = self.k_neighbors
            part = np.partition(d, (k - 1, max(k - 2, 0)), axis=1)
            kdist = np.maximum(part[:, k - 1], _KDIST_FLOOR)
            kdist_prev = part[:, k - 2] if k >= 2 else np.zeros(m)
            object.__setattr__(self, "ref_distances", d)
            object.__setattr__(self, "kdist", kdist)
            object.__setattr__(self, "kdist_prev", kdist_prev)

    def _distances(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if self.distance == "euclidean" or self.minkowski_p == 2.0:
            return np.sqrt(_pairwise_sq(a, b))
        p = self.minkowski_p
        return (np.abs(a[:, None, :] - b[None, :, :]) ** p).sum(axis=2) ** (1.0 / p)

    def query(self, window: np.ndarray) -> float:
        """Exact LOF of the window against reference union {window}."""
        q = np.asarray(window, dtype=np.float64).reshape(1, -1)
        duplicates = np.nonzero((self.reference_windows == q[0]).all(axis=1))[0]
        if duplicates.size:
            # A duplicated reference row must see bit-identical distances, or
            # ties exactly at a k-distance boundary resolve differently here
            # than they do inside the cached matrix.
            dq = self.ref_distances[duplicates[0]].copy()
            dq[duplicates[0]] = 0.0
        else:
            dq = self._distances(q, self.reference_windows)[0]
        k = self.k_neighbors
        kdist_q = max(float(np.partition(dq, k - 1)[k - 1]), _KDIST_FLOOR)
        # Reference k-distances after the query joins the set: the query can
        # displace the old k-th neighbor when it lands closer.
        kdist_c = np.where(dq >= self.kdist, self.kdist, np.maximum(self.kdist_prev, dq))
        kdist_c = np.maximum(kdist_c, _KDIST_FLOOR)

        neighborhood = np.nonzero(dq <= kdist_q)[0]
        rd_query = np.maximum(kdist_c[neighborhood], dq[neighborhood])
        lrd_query = neighborhood.size / float(rd_query.sum())

        lrds = np.empty(neighborhood.size)
        for pos, y in enumerate(neighborhood):
            row = self.ref_distances[y]
            bound = kdist_c[y]
            inside = row <= bound
            rd = np.maximum(kdist_c[inside], row[inside])
            total = float(rd.sum())
            count = int(inside.sum())
            if dq[y] <= bound:  # the query itself is one of y's neighbors
                total += max(kdist_q, dq[y])
                count += 1
            lrds[pos] = count / total
        return float(lrds.mean() / lrd_query)


def lof_score(reference: WindowFrame, query_window, k: int = 10) -> float:
    """LOF of one query window against the reference windows."""
    model = LofModel(k_neighbors=k, reference_windows=reference.windows)
    return model.query(np.asarray(query_window, dtype=np.float64))


# ---------------------------------------------------------------------------
# Isolation forest


@dataclass(frozen=True)
class _IsoNode:
    feature: int = -1
    split: float = 0.0
    left: int = -1
    right: int = -1
    size: int = 0
    leaf: bool = True


@dataclass(frozen=True)
class IsoForest:
    n_trees: int
    trees: tuple
    subsample: int
    max_depth: int

    def __post_init__(self):
        if self.n_trees < 1 or len(self.trees) != self.n_trees:
            raise ValueError("need n_trees >= 1 built trees")


def _harmonic(n: int) -> np.ndarray:
    """H(0..n) as exact partial sums."""
    out = np.zeros(n + 1)
    out[1:] = np.cumsum(1.0 / np.arange(1, n + 1))
    return out


def _avg_path(n: int, harmonics: np.ndarray) -> float:
    """Average unsuccessful-search path length c(n) of a binary search tree."""
    if n <= 1:
        return 0.0
    if n == 2:
        return 1.0
    return 2.0 * harmonics[n - 1] - 2.0 * (n - 1) / n


def _build_itree(data: np.ndarray, rng: np.random.Generator, depth_cap: int) -> tuple:
    nodes: list[_IsoNode] = []

    def grow(idx: np.ndarray, depth: int) -> int:
        nid = len(nodes)
        nodes.append(_IsoNode())
        if depth >= depth_cap or idx.size <= 1:
            nodes[nid] = _IsoNode(size=idx.size, leaf=True)
            return nid
        feature = int(rng.integers(data.shape[1]))
        column = data[idx, feature]
        lo, hi = float(column.min()), float(column.max())
        if lo == hi:
            nodes[nid] = _IsoNode(size=idx.size, leaf=True)
            return nid
        split = float(rng.uniform(lo, hi))
        mask = column < split
        left = grow(idx[mask], depth + 1)
        right = grow(idx[~mask], depth + 1)
        nodes[nid] = _IsoNode(
            feature=feature, split=split, left=left, right=right, size=idx.size, leaf=False
        )
        return nid

    grow(np.arange(data.shape[0]), 0)
    return tuple(nodes)


def iforest_fit(train_windows: WindowFrame, n_trees: int = 10, seed: int = 0) -> IsoForest:
    """Build n_trees isolation trees on subsamples of at most 256 windows."""
    windows = train_windows.windows
    m = windows.shape[0]
    if m < 2:
        raise TooFewWindows(f"isolation forest needs at least 2 windows, got {m}")
    subsample = min(256, m)
    depth_cap = math.ceil(math.log2(subsample))
    rng = np.random.default_rng(seed)
    trees = []
    for _ in range(n_trees):
        chosen = rng.choice(m, size=subsample, replace=False)
        trees.append(_build_itree(windows[chosen], rng, depth_cap))
    return IsoForest(n_trees=n_trees, trees=tuple(trees), subsample=subsample, max_depth=depth_cap)


def _tree_path_lengths(nodes: tuple, data: np.ndarray, harmonics: np.ndarray) -> np.ndarray:
    out = np.zeros(data.shape[0])
    stack = [(0, np.arange(data.shape[0]), 0)]
    while stack:
        nid, idx, depth = stack.pop()
        if idx.size == 0:
            continue
        node = nodes[nid]
        if node.leaf:
            out[idx] = depth + _avg_path(node.size, harmonics)
            continue
        mask = data[idx, node.feature] < node.split
        stack.append((node.left, idx[mask], depth + 1))
        stack.append((node.right, idx[~mask], depth + 1))
    return out


def iforest_score(
    model: IsoForest, test_windows: WindowFrame, detector_name: str = "iforest"
) -> ScoreSeries:
    """S(x) = 2^(-E(path length)/c(subsample)); deeper isolation scores lower."""
    data = test_windows.windows
    harmonics = _harmonic(model.subsample)
    paths = np.zeros(data.shape[0])
    for nodes in model.trees:
        paths += _tree_path_lengths(nodes, data, harmonics)
    expected = paths / model.n_trees
    scores = np.power(2.0, -expected / _avg_path(model.subsample, harmonics))
    return ScoreSeries(
        scores=scores, indices=test_windows.target_indices, detector_name=detector_name
    )


# ---------------------------------------------------------------------------
# One-class SVM


@dataclass(frozen=True)
class OcSvmModel:
    support_vectors: np.ndarray
    dual_coeffs: np.ndarray
    rho: float
    rbf_gamma: float
    nu: float
    converged: bool = True

    def __post_init__(self):
        vectors = np.asarray(self.support_vectors, dtype=np.float64)
        coeffs = np.asarray(self.dual_coeffs, dtype=np.float64)
        if vectors.shape[0] != coeffs.size or vectors.shape[0] < 1:
            raise ValueError("support vectors and dual coefficients must align")
        if not (0.0 < self.nu <= 1.0):
            raise ValueError(f"nu must lie in (0, 1], got {self.nu}")
        if self.rbf_gamma <= 0.0:
            raise ValueError(f"rbf_gamma must be positive, got {self.rbf_gamma}")
        if np.any(coeffs < -1e-12) or abs(coeffs.sum() - 1.0) > 1e-6:
            raise ValueError("dual coefficients must be non-negative and sum to 1")
        object.__setattr__(self, "support_vectors", vectors)
        object.__setattr__(self, "dual_coeffs", coeffs)


def ocsvm_fit(
    train_windows: WindowFrame,
    nu: float = 0.7,
    rbf_gamma: Optional[float] = None,
    tol: float = 1e-4,
    max_iter: int = 100000,
) -> OcSvmModel:
    """Solve the nu-one-class dual by most-violating-pair coordinate updates.

    Constraints: each alpha_i in [0, 1/(nu*m)], sum alpha_i = 1.  Stops when
    the largest KKT violation falls below tol.
    """
    windows = train_windows.windows
    m = windows.shape[0]
    if m < 2:
        raise TooFewWindows(f"one-class SVM needs at least 2 windows, got {m}")
    if not (0.0 < nu <= 1.0):
        raise ValueError(f"nu must lie in (0, 1], got {nu}")
    gamma = 1.0 / windows.shape[1] if rbf_gamma is None else rbf_gamma
    kernel = np.exp(-gamma * _pairwise_sq(windows, windows))
    box = 1.0 / (nu * m)

    alpha = np.zeros(m)
    full = int(math.floor(nu * m))
    alpha[:full] = box
    if full < m:
        alpha[full] = 1.0 - full * box
    gradient = kernel @ alpha

    converged = False
    for _ in range(max_iter):
        can_down = alpha > 1e-12
        can_up = alpha < box - 1e-12
        i = int(np.where(can_down, gradient, -np.inf).argmax())
        j = int(np.where(can_up, gradient, np.inf).argmin())
        gap = gradient[i] - gradient[j]
        if gap < tol:
            converged = True
            break
        total = alpha[i] + alpha[j]
        curvature = kernel[i, i] + kernel[j, j] - 2.0 * kernel[i, j]
        if curvature > 1e-15:
            new_i = alpha[i] - gap / curvature
        else:
            new_i = max(0.0, total - box)
        new_i = min(max(new_i, max(0.0, total - box)), min(box, total))
        new_j = total - new_i
        gradient += (new_i - alpha[i]) * kernel[:, i] + (new_j - alpha[j]) * kernel[:, j]
        alpha[i], alpha[j] = new_i, new_j

    interior = (alpha > 1e-8) & (alpha < box - 1e-8)
    if interior.any():
        rho = float(gradient[interior].mean())
    else:
        at_box = alpha >= box - 1e-8
        at_zero = alpha <= 1e-8
        lo = float(gradient[at_box].max()) if at_box.any() else -math.inf
        hi = float(gradient[at_zero].min()) if at_zero.any() else math.inf
        rho = 0.5 * (lo + hi) if math.isfinite(lo) and math.isfinite(hi) else float(gradient @ alpha)

    keep = alpha > 1e-12
    return OcSvmModel(
        support_vectors=windows[keep].copy(),
        dual_coeffs=alpha[keep],
        rho=rho,
        rbf_gamma=gamma,
        nu=nu,
        converged=converged,
    )


def ocsvm_score(
    model: OcSvmModel, test_windows: WindowFrame, detector_name: str = "ocsvm"
) -> ScoreSeries:
    """rho - sum_i alpha_i K(sv_i, x): positive outside the learned boundary."""
    kernel = np.exp(-model.rbf_gamma * _pairwise_sq(test_windows.windows, model.support_vectors))
    scores = model.rho - kernel @ model.dual_coeffs
    return ScoreSeries(
        scores=scores, indices=test_windows.target_indices, detector_name=detector_name
    )


# ---------------------------------------------------------------------------
# Gradient-boosted regression trees


@dataclass(frozen=True)
class _GbtNode:
    feature: int = -1
    split: float = 0.0
    left: int = -1
    right: int = -1
    weight: float = 0.0
    leaf: bool = True


@dataclass(frozen=True)
class GbtModel:
    """Additive ensemble minimizing squared error with second-order splits.

    Regularizer per tree: gamma_reg * leaves + 0.5 * lambda_ * ||w||^2.
    ``base_score`` is the constant prediction boosting starts from and
    ``loss_history`` records the regularized train loss after every round.
    """

    trees: tuple
    learning_rate: float = 0.1
    n_estimators: int = 1000
    max_depth: int = 3
    lambda_: float = 1.0
    gamma_reg: float = 0.0
    base_score: float = 0.0
    loss_history: tuple = ()

    def __post_init__(self):
        if len(self.trees) != self.n_estimators:
            raise ValueError("tree count must equal n_estimators")
        if self.learning_rate <= 0.0 or self.max_depth < 1:
            raise ValueError("learning_rate must be positive and max_depth >= 1")


def _gbt_best_split(data: np.ndarray, g: np.ndarray, idx: np.ndarray, lam: float):
    """Best (gain, feature, split) over all features for one node; h_i = 1."""
    g_node = g[idx]
    G = g_node.sum()
    H = float(idx.size)
    parent = G * G / (H + lam)
    best_gain, best_feature, best_split = 0.0, -1, 0.0
    for feature in range(data.shape[1]):
        values = data[idx, feature]
        order = np.argsort(values, kind="stable")
        sv = values[order]
        if sv[0] == sv[-1]:
            continue
        gl = np.cumsum(g_node[order])[:-1]
        hl = np.arange(1, idx.size, dtype=np.float64)
        gr = G - gl
        hr = H - hl
        gains = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent)
        gains[sv[1:] == sv[:-1]] = -np.inf
        pos = int(gains.argmax())
        if gains[pos] > best_gain:
            best_gain = float(gains[pos])
            best_feature = feature
            best_split = float(0.5 * (sv[pos] + sv[pos + 1]))
    if best_feature < 0:
        return None
    return best_gain, best_feature, best_split


def _build_gbt_tree(
    data: np.ndarray, g: np.ndarray, depth_cap: int, lam: float, gamma_reg: float
) -> tuple[tuple, list]:
    """One greedy tree; returns its nodes and (leaf index array, weight) pairs."""
    nodes: list[_GbtNode] = []
    leaf_updates: list[tuple[np.ndarray, float]] = []

    def grow(idx: np.ndarray, depth: int) -> int:
        nid = len(nodes)
        nodes.append(_GbtNode())
        split = None
        if depth < depth_cap and idx.size >= 2:
            split = _gbt_best_split(data, g, idx, lam)
        if split is not None and split[0] > gamma_reg:
            _, feature, threshold = split
            mask = data[idx, feature] < threshold
            left = grow(idx[mask], depth + 1)
            right = grow(idx[~mask], depth + 1)
            nodes[nid] = _GbtNode(
                feature=feature, split=threshold, left=left, right=right, leaf=False
            )
        else:
            weight = -g[idx].sum() / (idx.size + lam)
            nodes[nid] = _GbtNode(weight=float(weight), leaf=True)
            leaf_updates.append((idx, float(weight)))
        return nid

    grow(np.arange(data.shape[0]), 0)
    return tuple(nodes), leaf_updates


def gbt_fit(
    train_frame: WindowFrame,
    n_estimators: int = 1000,
    max_depth: int = 3,
    learning_rate: float = 0.1,
    lambda_: float = 1.0,
    gamma_reg: float = 0.0,
) -> GbtModel:
    """Boost depth-capped trees against the one-step forecasting targets.

    Squared-error loss gives gradients g_i = prediction - target and unit
    hessians; each round adds learning_rate times the new tree.
    """
    data = train_frame.windows
    targets = train_frame.targets
    base = float(targets.mean())
    predictions = np.full(targets.size, base)
    trees = []
    history = []
    omega_total = 0.0
    for _ in range(n_estimators):
        g = predictions - targets
        nodes, leaf_updates = _build_gbt_tree(data, g, max_depth, lambda_, gamma_reg)
        trees.append(nodes)
        squared_norm = 0.0
        for idx, weight in leaf_updates:
            step = learning_rate * weight
            predictions[idx] += step
            squared_norm += step * step
        omega_total += gamma_reg * len(leaf_updates) + 0.5 * lambda_ * squared_norm
        history.append(0.5 * float(((predictions - targets) ** 2).sum()) + omega_total)
    return GbtModel(
        trees=tuple(trees),
        learning_rate=learning_rate,
        n_estimators=n_estimators,
        max_depth=max_depth,
        lambda_=lambda_,
        gamma_reg=gamma_reg,
        base_score=base,
        loss_history=tuple(history),
    )


def _gbt_predict(model: GbtModel, data: np.ndarray) -> np.ndarray:
    out = np.full(data.shape[0], model.base_score)
    for nodes in model.trees:
        contrib = np.zeros(data.shape[0])
        stack = [(0, np.arange(data.shape[0]))]
        while stack:
            nid, idx = stack.pop()
            if idx.size == 0:
                continue
            node = nodes[nid]
            if node.leaf:
                contrib[idx] = node.weight
                continue
            mask = data[idx, node.feature] < node.split
            stack.append((node.left, idx[mask]))
            stack.append((node.right, idx[~mask]))
        out += model.learning_rate * contrib
    return out


def gbt_score(
    model: GbtModel, test_frame: WindowFrame, detector_name: str = "gbt"
) -> ScoreSeries:
    """Absolute one-step forecast error of the boosted ensemble."""
    predictions = _gbt_predict(model, test_frame.windows)
    return ScoreSeries(
        scores=np.abs(predictions - test_frame.targets),
        indices=test_frame.target_indices,
        detector_name=detector_name,
    )


# ---------------------------------------------------------------------------
# Detector adapters


def _reject_unknown_keys(cfg: DetectorConfig, allowed: frozenset):
    unknown = set(cfg.hyperparameters) - set(allowed)
    if unknown:
        raise ValueError(
            f"{cfg.name}: unknown hyperparameter keys {sorted(unknown)}; "
            f"allowed: {sorted(allowed)}"
        )


class KMeansDetector:
    """Subsequence clustering; a meaningless-but-standard comparison baseline."""

    name = "kmeans"
    family = "ml"
    keys = frozenset({"k"})
    defaults = {"k": 4}

    def fit(self, train: TimeSeries, cfg: DetectorConfig) -> FittedDetector:
        _reject_unknown_keys(cfg, self.keys)
        windows = subsequences(train, cfg.window_width)
        return FittedDetector.wrap(cfg, kmeans_fit(windows, int(cfg.param("k", 4)), cfg.seed))

    def score(self, fitted: FittedDetector, test: TimeSeries) -> ScoreSeries:
        return kmeans_score(
            fitted.state, subsequences(test, fitted.config.window_width), detector_name=fitted.name
        )


class DbscanDetector:
    """Distance to the nearest density-core training window."""

    name = "dbscan"
    family = "ml"
    keys = frozenset({"epsilon", "mu"})
    defaults = {"epsilon": 0.4, "mu": 5}

    def fit(self, train: TimeSeries, cfg: DetectorConfig) -> FittedDetector:
        _reject_unknown_keys(cfg, self.keys)
        windows = subsequences(train, cfg.window_width)
        model = dbscan_fit(
            windows, float(cfg.param("epsilon", 0.4)), int(cfg.param("mu", 5))
        )
        return FittedDetector.wrap(cfg, model)

    def score(self, fitted: FittedDetector, test: TimeSeries) -> ScoreSeries:
        return _dbscan_model_score(
            fitted.state, subsequences(test, fitted.config.window_width), fitted.name
        )


class LofDetector:
    """Local outlier factor of each test window against the training windows."""

    name = "lof"
    family = "ml"
    keys = frozenset({"k_neighbors"})
    defaults = {"k_neighbors": 10}

    def fit(self, train: TimeSeries, cfg: DetectorConfig) -> FittedDetector:
        _reject_unknown_keys(cfg, self.keys)
        windows = subsequences(train, cfg.window_width)
        model = LofModel(
            k_neighbors=int(cfg.param("k_neighbors", 10)), reference_windows=windows.windows
        )
        return FittedDetector.wrap(cfg, model)

    def score(self, fitted: FittedDetector, test: TimeSeries) -> ScoreSeries:
        model: LofModel = fitted.state
        windows = subsequences(test, fitted.config.window_width)
        scores = np.array([model.query(w) for w in windows.windows])
        return ScoreSeries(
            scores=scores, indices=windows.target_indices, detector_name=fitted.name
        )


class IforestDetector:
    """Isolation forest over sliding windows."""

    name = "iforest"
    family = "ml"
    keys = frozenset({"n_trees"})
    defaults = {"n_trees": 10}

    def fit(self, train: TimeSeries, cfg: DetectorConfig) -> FittedDetector:
        _reject_unknown_keys(cfg, self.keys)
        windows = subsequences(train, cfg.window_width)
        model = iforest_fit(windows, int(cfg.param("n_trees", 10)), cfg.seed)
        return FittedDetector.wrap(cfg, model)

    def score(self, fitted: FittedDetector, test: TimeSeries) -> ScoreSeries:
        return iforest_score(
            fitted.state, subsequences(test, fitted.config.window_width), detector_name=fitted.name
        )


class OcsvmDetector:
    """nu-one-class SVM with an RBF kernel over sliding windows."""

    name = "ocsvm"
    family = "ml"
    keys = frozenset({"nu", "rbf_gamma", "project_2d"})
    defaults = {"nu": 0.7, "rbf_gamma": "1/w", "project_2d": False}

    def _width(self, cfg: DetectorConfig) -> int:
        return 2 if cfg.param("project_2d", False) else cfg.window_width

    def fit(self, train: TimeSeries, cfg: DetectorConfig) -> FittedDetector:
        _reject_unknown_keys(cfg, self.keys)
        windows = subsequences(train, self._width(cfg))
        model = ocsvm_fit(windows, float(cfg.param("nu", 0.7)), cfg.param("rbf_gamma"))
        return FittedDetector.wrap(cfg, model)

    def score(self, fitted: FittedDetector, test: TimeSeries) -> ScoreSeries:
        windows = subsequences(test, self._width(fitted.config))
        return ocsvm_score(fitted.state, windows, detector_name=fitted.name)


class GbtDetector:
    """Gradient-boosted trees forecasting the observation after each window."""

    name = "gbt"
    family = "ml"
    keys = frozenset({"n_estimators", "max_depth", "learning_rate"})
    defaults = {"n_estimators": 1000, "max_depth": 3, "learning_rate": 0.1}

    def fit(self, train: TimeSeries, cfg: DetectorConfig) -> FittedDetector:
        _reject_unknown_keys(cfg, self.keys)
        model = gbt_fit(
            frame(train, cfg.window_width),
            n_estimators=int(cfg.param("n_estimators", 1000)),
            max_depth=int(cfg.param("max_depth", 3)),
            learning_rate=float(cfg.param("learning_rate", 0.1)),
        )
        return FittedDetector.wrap(cfg, model)

    def score(self, fitted: FittedDetector, test: TimeSeries) -> ScoreSeries:
        return gbt_score(
            fitted.state, frame(test, fitted.config.window_width), detector_name=fitted.name
        )
