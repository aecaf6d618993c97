"""Min-max scaling, K-means, Gaussian mixture and spectral clustering.

All fits take an explicit integer seed and are bit-reproducible for a fixed
seed. The Gaussian mixture is the production model: it is the one used to
classify new cases.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.sparse.csgraph import connected_components
from scipy.special import comb, logsumexp

COV_REG = 1e-6
MIN_EIG = 1e-8
KMEANS_MAX_ITER = 300
KMEANS_N_INIT = 10
EM_MAX_ITER = 500
EM_TOL = 1e-7
ALGORITHMS = ("kmeans", "gmm", "spectral")


class ClusteringError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ScalerParams:
    x_min: np.ndarray
    x_max: np.ndarray

    def transform(self, x):
        x = np.asarray(x, dtype=float)
        span = self.x_max - self.x_min
        safe = np.where(span > 0, span, 1.0)
        return np.where(span > 0, (x - self.x_min) / safe, 0.0)

    def to_dict(self):
        return {"x_min": self.x_min.tolist(), "x_max": self.x_max.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["x_min"], float), np.asarray(d["x_max"], float))


def _as_matrix(data):
    rows = [d.as_array() if hasattr(d, "as_array") else d for d in data]
    x = np.asarray(rows, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.size == 0 or x.shape[0] == 0:
        raise ClusteringError("no data points")
    if not np.all(np.isfinite(x)):
        raise ClusteringError("data contain non-finite values")
    return x


def fit_scaler(data):
    x = _as_matrix(data)
    return ScalerParams(x.min(axis=0), x.max(axis=0))


def apply_scaler(scaler, data):
    return scaler.transform(_as_matrix(data))


@dataclass(eq=False)
class ClusterModel:
    algorithm: str
    k: int
    scaler: ScalerParams
    labels: np.ndarray
    seed: int
    centroids: np.ndarray | None = None
    weights: np.ndarray | None = None
    means: np.ndarray | None = None
    covariances: np.ndarray | None = None
    log_likelihood_history: list = field(default_factory=list)
    em_stop: str | None = None  # "converged", "max_iter" or "decrease"

    def to_dict(self):
        d = {
            "algorithm": self.algorithm,
            "k": self.k,
            "seed": self.seed,
            "scaler": self.scaler.to_dict(),
            "labels": self.labels.tolist(),
        }
        for name in ("centroids", "weights", "means", "covariances"):
            val = getattr(self, name)
            if val is not None:
                d[name] = val.tolist()
        return d

    @classmethod
    def from_dict(cls, d):
        arr = lambda key: None if d.get(key) is None else np.asarray(d[key], dtype=float)  # noqa: E731
        return cls(
            algorithm=d["algorithm"],
            k=int(d["k"]),
            scaler=ScalerParams.from_dict(d["scaler"]),
            labels=np.asarray(d["labels"], dtype=int),
            seed=int(d["seed"]),
            centroids=arr("centroids"),
            weights=arr("weights"),
            means=arr("means"),
            covariances=arr("covariances"),
        )


# --- K-means ---------------------------------------------------------------

def _kmeans_pp(x, k, rng):
    n = x.shape[0]
    centres = [x[rng.integers(n)]]
    d2 = np.sum((x - centres[0]) ** 2, axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total == 0:
            idx = rng.integers(n)
        else:
            idx = rng.choice(n, p=d2 / total)
        centres.append(x[idx])
        d2 = np.minimum(d2, np.sum((x - x[idx]) ** 2, axis=1))
    return np.array(centres)


def lloyd(x, k, rng, max_iter=KMEANS_MAX_ITER, inertia_history=None):
    """Lloyd iterations from a k-means++ start. Returns (centroids, labels, inertia)."""
    centres = _kmeans_pp(x, k, rng)
    labels = None
    for _ in range(max_iter):
        d2 = ((x[:, None, :] - centres[None, :, :]) ** 2).sum(axis=2)
        new = np.argmin(d2, axis=1)
        inertia = float(d2[np.arange(x.shape[0]), new].sum())
        if inertia_history is not None:
            inertia_history.append(inertia)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for j in range(k):
            members = x[labels == j]
            if len(members):
                centres[j] = members.mean(axis=0)
            else:
                # re-seed an empty cluster at the point farthest from its centre
                far = int(np.argmax(d2[np.arange(x.shape[0]), labels]))
                centres[j] = x[far]
    d2 = ((x[:, None, :] - centres[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(d2, axis=1)
    return centres, labels, float(d2[np.arange(x.shape[0]), labels].sum())


def best_lloyd(x, k, rng, n_init=KMEANS_N_INIT):
    """Lowest-inertia result of ``n_init`` independent k-means++ / Lloyd runs."""
    best = None
    for _ in range(n_init):
        result = lloyd(x, k, rng)
        if best is None or result[2] < best[2]:
            best = result
    return best


def _check_k(x, k):
    if k < 1:
        raise ClusteringError("k must be >= 1")
    distinct = np.unique(x, axis=0).shape[0]
    if k > distinct:
        raise ClusteringError(f"k={k} exceeds the number of distinct points ({distinct})")


def kmeans(data, k=3, seed=0, n_init=KMEANS_N_INIT):
    x_raw = _as_matrix(data)
    scaler = fit_scaler(x_raw)
    x = scaler.transform(x_raw)
    _check_k(x, k)
    centres, labels, _ = best_lloyd(x, k, np.random.default_rng(seed), n_init)
    return ClusterModel("kmeans", k, scaler, labels, seed, centroids=centres)


# --- Gaussian mixture ------------------------------------------------------

def _log_gauss(x, mean, cov):
    chol = linalg.cholesky(cov, lower=True)
    sol = linalg.solve_triangular(chol, (x - mean).T, lower=True)
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    d = x.shape[1]
    return -0.5 * (d * np.log(2.0 * np.pi) + logdet + np.sum(sol**2, axis=0))


def _log_resp(x, weights, means, covs):
    with np.errstate(divide="ignore"):
        lw = np.log(weights)
    cols = [lw[j] + _log_gauss(x, means[j], covs[j]) for j in range(len(weights))]
    return np.column_stack(cols)


def _em(x, k, rng):
    n, d = x.shape
    _, labels, _ = best_lloyd(x, k, rng)
    resp = np.zeros((n, k))
    resp[np.arange(n), labels] = 1.0
    history = []
    best = None
    prev = -np.inf
    stop = "max_iter"
    for _ in range(EM_MAX_ITER):
        # M-step
        nk = resp.sum(axis=0)
        if np.any(nk < 1e-10):
            raise ClusteringError("mixture component lost all its points")
        weights = nk / n
        means = (resp.T @ x) / nk[:, None]
        covs = np.empty((k, d, d))
        for j in range(k):
            diff = x - means[j]
            covs[j] = (resp[:, j, None] * diff).T @ diff / nk[j] + COV_REG * np.eye(d)
            covs[j] = 0.5 * (covs[j] + covs[j].T)
            if np.linalg.eigvalsh(covs[j]).min() < MIN_EIG:
                raise ClusteringError(f"component {j} covariance is singular")
        # E-step; the log-likelihood here belongs to the parameters just estimated
        lr = _log_resp(x, weights, means, covs)
        norm = logsumexp(lr, axis=1)
        ll = float(norm.sum())
        if ll < prev:
            # The fixed covariance regularization can cost a few 1e-7 at
            # convergence; keep the previous parameters instead.
            stop = "decrease"
            break
        history.append(ll)
        resp = np.exp(lr - norm[:, None])
        best = (weights, means, covs, resp)
        if ll - prev < EM_TOL:
            stop = "converged"
            break
        prev = ll
    return (*best, history, stop)


def gmm_fit(data, k=3, seed=0):
    """Full-covariance Gaussian mixture fitted by EM from a K-means start."""
    x_raw = _as_matrix(data)
    scaler = fit_scaler(x_raw)
    x = scaler.transform(x_raw)
    n, d = x.shape
    if n < k * (d + 1):
        raise ClusteringError(f"need at least k*(dims+1) = {k * (d + 1)} points, got {n}")
    _check_k(x, k)
    rng = np.random.default_rng(seed)
    try:
        weights, means, covs, resp, history, stop = _em(x, k, rng)
    except (ClusteringError, linalg.LinAlgError):
        # one re-seed, then give up
        try:
            weights, means, covs, resp, history, stop = _em(x, k, np.random.default_rng([seed, 1]))
        except (ClusteringError, linalg.LinAlgError) as exc:
            raise ClusteringError(f"Gaussian mixture fit failed after re-seeding: {exc}") from exc
    return ClusterModel(
        "gmm", k, scaler, np.argmax(resp, axis=1), seed,
        weights=weights, means=means, covariances=covs, log_likelihood_history=history, em_stop=stop,
    )


def posterior(model, points):
    """Component posteriors for raw (unscaled) feature points, shape (n, k)."""
    if model.algorithm != "gmm" or model.weights is None:
        raise ClusteringError("classification needs a fitted Gaussian mixture model")
    x = model.scaler.transform(_as_matrix(points))
    lr = _log_resp(x, model.weights / model.weights.sum(), model.means, model.covariances)
    return np.exp(lr - logsumexp(lr, axis=1, keepdims=True))


def classify(model, point):
    """(cluster id, posterior vector) for one feature point."""
    post = posterior(model, [point])[0]
    return int(np.argmax(post)), post


def log_likelihood(model, data):
    x = model.scaler.transform(_as_matrix(data))
    return float(logsumexp(_log_resp(x, model.weights, model.means, model.covariances), axis=1).sum())


# --- Spectral --------------------------------------------------------------

def spectral(data, k=3, seed=0):
    """Normalized spectral clustering (RBF affinity, median-distance bandwidth)."""
    x_raw = _as_matrix(data)
    scaler = fit_scaler(x_raw)
    x = scaler.transform(x_raw)
    n = x.shape[0]
    if n < k:
        raise ClusteringError(f"need at least k={k} points, got {n}")
    if k == 1:
        return ClusterModel("spectral", 1, scaler, np.zeros(n, dtype=int), seed)
    d2 = ((x[:, None, :] - x[None, :, :]) ** 2).sum(axis=2)
    dist = np.sqrt(d2[np.triu_indices(n, 1)])
    dist = dist[dist > 0]
    sigma = float(np.median(dist)) if dist.size else 1.0
    w = np.exp(-d2 / (2.0 * sigma**2))
    np.fill_diagonal(w, 0.0)
    deg = w.sum(axis=1)
    n_comp, _ = connected_components(w > 0, directed=False)
    if np.any(deg == 0) or n_comp > k:
        raise ClusteringError(
            f"affinity graph splits into {n_comp} components "
            f"({int(np.sum(deg == 0))} isolated points) with bandwidth {sigma:.3g}; cannot form {k} clusters"
        )
    inv_sqrt = 1.0 / np.sqrt(deg)
    lap = np.eye(n) - inv_sqrt[:, None] * w * inv_sqrt[None, :]
    _, vecs = linalg.eigh(lap, subset_by_index=[0, k - 1])
    emb = vecs / np.linalg.norm(vecs, axis=1, keepdims=True)
    _, labels, _ = best_lloyd(emb, k, np.random.default_rng(seed))
    return ClusterModel("spectral", k, scaler, labels, seed)


def fit(data, algorithm="gmm", k=3, seed=0):
    if algorithm == "kmeans":
        return kmeans(data, k, seed)
    if algorithm == "gmm":
        return gmm_fit(data, k, seed)
    if algorithm == "spectral":
        return spectral(data, k, seed)
    raise ValueError(f"unknown clustering algorithm {algorithm!r}; choose from {ALGORITHMS}")


def adjusted_rand_index(labels_a, labels_b):
    a = np.asarray(labels_a)
    b = np.asarray(labels_b)
    if a.shape != b.shape:
        raise ValueError("label arrays differ in length")
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    table = np.zeros((ia.max() + 1, ib.max() + 1))
    np.add.at(table, (ia, ib), 1)
    sum_cells = comb(table, 2).sum()
    sum_a = comb(table.sum(axis=1), 2).sum()
    sum_b = comb(table.sum(axis=0), 2).sum()
    expected = sum_a * sum_b / comb(a.size, 2)
    max_index = 0.5 * (sum_a + sum_b)
    if max_index == expected:
        return 1.0
    return float((sum_cells - expected) / (max_index - expected))
