"""Incremental base classifiers used by the detector pipelines."""
from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

VARIANCE_FLOOR = 1e-9
RADIUS_FLOOR = 1e-9


class NotFittedError(RuntimeError):
    pass


class GaussianNB:
    """Gaussian naive Bayes with per-class running moments (count, mean, M2).

    Classes never seen in training are simply not predictable. An optional
    ``features`` index array restricts the model to a feature subspace, which
    is how ensemble members are diversified.

    :param class_count: number of declared classes
    :param features: column indices the model looks at, ``None`` for all
    """

    def __init__(self, class_count: int, features: Optional[np.ndarray] = None,
                 variance_floor: float = VARIANCE_FLOOR):
        self.class_count = int(class_count)
        self.features = None if features is None else np.asarray(features, dtype=np.int64)
        self.variance_floor = variance_floor
        self.count: Optional[np.ndarray] = None
        self.mean: Optional[np.ndarray] = None
        self.m2: Optional[np.ndarray] = None
        self._cache = None

    def _select(self, X):
        return X if self.features is None else X[..., self.features]

    def _alloc(self, d):
        self.count = np.zeros(self.class_count)
        self.mean = np.zeros((self.class_count, d))
        self.m2 = np.zeros((self.class_count, d))

    @property
    def fitted(self) -> bool:
        return self.count is not None and self.count.sum() > 0

    def fit(self, X, y) -> "GaussianNB":
        X = self._select(np.asarray(X, dtype=float))
        y = np.asarray(y, dtype=np.int64)
        self._alloc(X.shape[1])
        for c in range(self.class_count):
            Xc = X[y == c]
            if len(Xc):
                self.count[c] = len(Xc)
                self.mean[c] = Xc.mean(axis=0)
                self.m2[c] = ((Xc - self.mean[c]) ** 2).sum(axis=0)
        self._cache = None
        return self

    def partial_fit(self, x, label: int) -> "GaussianNB":
        x = self._select(np.asarray(x, dtype=float))
        if self.count is None:
            self._alloc(x.shape[0])
        c = int(label)
        self.count[c] += 1
        delta = x - self.mean[c]
        self.mean[c] += delta / self.count[c]
        self.m2[c] += delta * (x - self.mean[c])
        self._cache = None
        return self

    @property
    def variance(self) -> np.ndarray:
        n = np.maximum(self.count, 1)[:, None]
        return np.maximum(self.m2 / n, self.variance_floor)

    @property
    def priors(self) -> np.ndarray:
        return self.count / self.count.sum()

    def _prepare(self):
        if self._cache is None:
            seen = np.flatnonzero(self.count > 0)
            var = self.variance[seen]
            const = np.log(self.priors[seen]) - 0.5 * np.log(2 * math.pi * var).sum(axis=1)
            self._cache = (seen, self.mean[seen], 0.5 / var, const)
        return self._cache

    def posterior(self, x) -> np.ndarray:
        """Full posterior over all declared classes (zero for unseen ones)."""
        if not self.fitted:
            raise NotFittedError("GaussianNB used before fitting")
        seen, mean, half_prec, const = self._prepare()
        x = self._select(np.asarray(x, dtype=float))
        ll = const - (((x - mean) ** 2) * half_prec).sum(axis=1)
        ll -= ll.max()
        p = np.exp(ll)
        p /= p.sum()
        out = np.zeros(self.class_count)
        out[seen] = p
        return out

    def predict(self, x) -> tuple[int, float]:
        p = self.posterior(x)
        label = int(np.argmax(p))
        return label, float(p[label])

    def predict_many(self, X) -> np.ndarray:
        if not self.fitted:
            raise NotFittedError("GaussianNB used before fitting")
        seen, mean, half_prec, const = self._prepare()
        X = self._select(np.asarray(X, dtype=float))
        ll = const[None, :] - (((X[:, None, :] - mean[None]) ** 2) * half_prec[None]).sum(axis=2)
        return seen[np.argmax(ll, axis=1)]


def nb_fit(X, y, class_count: int) -> GaussianNB:
    return GaussianNB(class_count).fit(X, y)


def nb_partial_fit(model: GaussianNB, x, label: int) -> GaussianNB:
    return model.partial_fit(x, label)


def nb_predict(model: GaussianNB, x) -> tuple[int, float]:
    return model.predict(x)


def choose_k(n_train: int, class_count: int) -> int:
    """K = max(classes, round(sqrt(n/2))), capped at n."""
    return int(min(n_train, max(class_count, round(math.sqrt(n_train / 2)))))


class KMeansClassifier:
    """Lloyd k-means with k-means++ seeding; clusters vote with their majority label.

    Confidence of a prediction is ``purity * exp(-dist / radius)`` for the
    nearest cluster, where radius is the mean member distance to the centroid.
    """

    def __init__(self, k: int, class_count: int, seed: int = 0, max_iter: int = 100, tol: float = 1e-6):
        self.k = int(k)
        self.class_count = int(class_count)
        self.seed = seed
        self.max_iter = max_iter
        self.tol = tol
        self.centroids: Optional[np.ndarray] = None
        self.histogram: Optional[np.ndarray] = None
        self.radius: Optional[np.ndarray] = None
        self.n_iter = 0

    def _plusplus(self, X, rng):
        n = X.shape[0]
        centers = [X[rng.integers(n)]]
        d2 = ((X - centers[0]) ** 2).sum(axis=1)
        for _ in range(1, self.k):
            total = d2.sum()
            if total <= 0:
                idx = rng.integers(n)
            else:
                idx = int(np.searchsorted(np.cumsum(d2), rng.random() * total, side="right"))
                idx = min(idx, n - 1)
            centers.append(X[idx])
            d2 = np.minimum(d2, ((X - X[idx]) ** 2).sum(axis=1))
        return np.array(centers)

    @staticmethod
    def _sqdist(X, C):
        return ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)

    def fit(self, X, y) -> "KMeansClassifier":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=np.int64)
        if self.k > X.shape[0]:
            raise ValueError(f"K={self.k} exceeds the {X.shape[0]} training samples")
        rng = np.random.default_rng(self.seed)
        C = self._plusplus(X, rng)
        for it in range(self.max_iter):
            assign = np.argmin(self._sqdist(X, C), axis=1)
            new = C.copy()
            for j in range(self.k):
                members = X[assign == j]
                if len(members):
                    new[j] = members.mean(axis=0)
            empty = [j for j in range(self.k) if not np.any(assign == j)]
            if empty:
                # re-seed empty clusters from the points farthest from their centroid
                far = np.argsort(-((X - new[assign]) ** 2).sum(axis=1))
                for j, idx in zip(empty, far):
                    new[j] = X[idx]
                    assign[idx] = j
            shift = np.sqrt(((new - C) ** 2).sum(axis=1)).max()
            C = new
            self.n_iter = it + 1
            if shift < self.tol and not empty:
                break
        assign = np.argmin(self._sqdist(X, C), axis=1)
        for j in range(self.k):
            if np.any(assign == j):
                continue
            # duplicate points can leave a centroid without members; give it
            # the point farthest from its centroid among clusters that can spare one
            sizes = np.bincount(assign, minlength=self.k)
            spare = np.flatnonzero(sizes[assign] > 1)
            far = spare[np.argmax(((X[spare] - C[assign[spare]]) ** 2).sum(axis=1))]
            assign[far] = j
            C[j] = X[far]
        self.centroids = C
        self.histogram = np.zeros((self.k, self.class_count))
        np.add.at(self.histogram, (assign, y), 1)
        dist = np.sqrt(((X - C[assign]) ** 2).sum(axis=1))
        self.radius = np.full(self.k, RADIUS_FLOOR)
        for j in range(self.k):
            sel = assign == j
            if sel.any():
                self.radius[j] = max(dist[sel].mean(), RADIUS_FLOOR)
        return self

    @property
    def sizes(self) -> np.ndarray:
        return self.histogram.sum(axis=1)

    @property
    def purity(self) -> np.ndarray:
        return self.histogram.max(axis=1) / np.maximum(self.sizes, 1)

    def predict(self, x) -> tuple[int, float]:
        if self.centroids is None:
            raise NotFittedError("KMeansClassifier used before fitting")
        x = np.asarray(x, dtype=float)
        d = np.sqrt(((self.centroids - x) ** 2).sum(axis=1))
        # clusters that lost every member are never chosen
        d = np.where(self.sizes > 0, d, np.inf)
        c = int(np.argmin(d))
        label = int(np.argmax(self.histogram[c]))
        conf = self.purity[c] * math.exp(-d[c] / self.radius[c])
        return label, float(conf)


def kmeans_fit(X, y, k: int, class_count: int, seed: int = 0) -> KMeansClassifier:
    return KMeansClassifier(k, class_count, seed=seed).fit(X, y)


def kmeans_predict(model: KMeansClassifier, x) -> tuple[int, float]:
    return model.predict(x)


class Ensemble:
    """Bagged Gaussian NB members with a labelled validation pool for DCS-LA.

    :param members: fitted members
    :param X_val: validation features, used to find local neighbourhoods
    :param y_val: validation labels
    :param k_neighbors: neighbourhood size for local accuracy
    """

    def __init__(self, members: Sequence[GaussianNB], X_val, y_val, k_neighbors: int = 7):
        if not members:
            raise ValueError("ensemble needs at least one member")
        self.members = list(members)
        self.k_neighbors = int(k_neighbors)
        self.set_validation(X_val, y_val)

    def set_validation(self, X_val, y_val) -> None:
        self.X_val = np.asarray(X_val, dtype=float)
        self.y_val = np.asarray(y_val, dtype=np.int64)
        self.refresh()

    def refresh(self) -> None:
        """Recompute each member's correctness on the validation pool."""
        if len(self.y_val):
            self.correct = np.stack([m.predict_many(self.X_val) == self.y_val for m in self.members])
        else:
            self.correct = np.zeros((len(self.members), 0), dtype=bool)

    @classmethod
    def bagged(cls, X, y, X_val, y_val, class_count: int, n_members: int = 10,
               subspace: float = 0.5, k_neighbors: int = 7, seed: int = 0) -> "Ensemble":
        rng = np.random.default_rng(seed)
        members = fit_bagged_members(X, y, class_count, n_members, subspace, rng)
        return cls(members, X_val, y_val, k_neighbors)

    def update(self, X, y, rng: np.random.Generator) -> None:
        """Online bagging: each member absorbs each sample Poisson(1) times."""
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=np.int64)
        weights = rng.poisson(1.0, size=(len(self.members), len(y)))
        for member, w in zip(self.members, weights):
            for x, label, k in zip(X, y, w):
                for _ in range(k):
                    member.partial_fit(x, label)
        self.refresh()

    def member_predictions(self, x) -> np.ndarray:
        return np.array([m.predict(x)[0] for m in self.members])

    def vote(self, votes: np.ndarray) -> tuple[int, float]:
        counts = np.bincount(votes, minlength=self.members[0].class_count)
        label = int(np.argmax(counts))
        return label, counts[label] / len(votes)

    def predict(self, x) -> tuple[int, float]:
        """Majority vote; confidence is the winning vote share."""
        return self.vote(self.member_predictions(x))


def fit_bagged_members(X, y, class_count, n_members, subspace, rng) -> list[GaussianNB]:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    n, d = X.shape
    n_feat = d if d == 1 else max(1, int(round(subspace * d)))
    members = []
    for _ in range(n_members):
        rows = rng.integers(0, n, size=n)
        feats = np.sort(rng.choice(d, size=n_feat, replace=False))
        members.append(GaussianNB(class_count, features=feats).fit(X[rows], y[rows]))
    return members


def dcsla_select(ensemble: Ensemble, x, k_neighbors: Optional[int] = None) -> int:
    """Index of the member most accurate on the query's nearest validation samples.

    Ties go to the lowest index.
    """
    k = ensemble.k_neighbors if k_neighbors is None else int(k_neighbors)
    if len(ensemble.members) == 0:
        raise ValueError("empty ensemble")
    if len(ensemble.y_val) < k:
        raise ValueError(f"validation pool of {len(ensemble.y_val)} is smaller than k={k}")
    if len(ensemble.members) == 1:
        return 0
    d2 = ((ensemble.X_val - np.asarray(x, dtype=float)) ** 2).sum(axis=1)
    nearest = np.argsort(d2, kind="stable")[:k]
    local = ensemble.correct[:, nearest].sum(axis=1)
    return int(np.argmax(local))
