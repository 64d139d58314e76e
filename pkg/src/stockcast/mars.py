"""Multivariate adaptive regression splines.

The forward pass adds mirrored hinge pairs greedily; the backward pass prunes
single terms by generalized cross-validation (GCV) and keeps the best subset
seen at any size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateModelError, FitError, InputError, ShapeError

MIN_SAMPLES = 10
# relative column-norm threshold below which a column counts as dependent
DEPENDENCE_TOL = 1e-10
STOP_RTOL = 1e-10
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class Hinge:
    """``max(0, x[feature] - knot)`` when ``sign`` is +1, ``max(0, knot - x[feature])`` when -1."""

    feature: int
    knot: float
    sign: int

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise InputError(f"hinge sign must be +1 or -1, got {self.sign}")
        if self.feature < 0:
            raise InputError("feature index must be non-negative")

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        return np.maximum(0.0, self.sign * (X[:, self.feature] - self.knot))

    def to_dict(self) -> dict:
        return {"feature": self.feature, "knot": self.knot, "sign": self.sign}


@dataclass(frozen=True)
class BasisTerm:
    """Product of hinges; the empty product is the intercept."""

    hinges: tuple = ()

    def __post_init__(self):
        features = [h.feature for h in self.hinges]
        if len(set(features)) != len(features):
            raise InputError("a basis term may use each feature at most once")

    @property
    def degree(self) -> int:
        return len(self.hinges)

    def to_dict(self) -> list:
        return [h.to_dict() for h in self.hinges]

    @classmethod
    def from_dict(cls, payload: list) -> "BasisTerm":
        return cls(tuple(Hinge(int(h["feature"]), float(h["knot"]), int(h["sign"])) for h in payload))


INTERCEPT = BasisTerm()


@dataclass(frozen=True)
class MarsModel:
    terms: tuple
    coeffs: np.ndarray
    gcv: float
    penalty: float
    rss: float
    n_obs: int
    n_features: int

    def __post_init__(self):
        if len(self.terms) != len(self.coeffs):
            raise ShapeError(f"{len(self.terms)} terms but {len(self.coeffs)} coefficients")

    def to_dict(self) -> dict:
        return {
            "terms": [t.to_dict() for t in self.terms],
            "coeffs": [float(c) for c in self.coeffs],
            "gcv": self.gcv,
            "penalty": self.penalty,
            "rss": self.rss,
            "n_obs": self.n_obs,
            "n_features": self.n_features,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "MarsModel":
        return cls(
            tuple(BasisTerm.from_dict(t) for t in payload["terms"]),
            np.array(payload["coeffs"], dtype=float),
            float(payload["gcv"]),
            float(payload["penalty"]),
            float(payload["rss"]),
            int(payload["n_obs"]),
            int(payload["n_features"]),
        )


def _matrix(X, n_features: int | None = None) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2:
        raise ShapeError(f"expected a 2-D sample matrix, got shape {X.shape}")
    if n_features is not None and X.shape[1] != n_features:
        raise ShapeError(f"model expects {n_features} features, got {X.shape[1]}")
    return X


def eval_basis(term: BasisTerm, X) -> np.ndarray | float:
    """Evaluate a term on one sample (1-D input, float output) or on every row of a matrix."""
    single = np.ndim(X) == 1
    X = _matrix(X)
    for h in term.hinges:
        if h.feature >= X.shape[1]:
            raise ShapeError(f"feature {h.feature} out of range for {X.shape[1]} columns")
    out = np.ones(len(X))
    for h in term.hinges:
        out = out * h.evaluate(X)
    return float(out[0]) if single else out


def basis_matrix(terms, X) -> np.ndarray:
    X = _matrix(X)
    return np.column_stack([eval_basis(t, X) for t in terms])


def independent_columns(B: np.ndarray) -> list[int]:
    """Indices of columns kept by in-order Gram-Schmidt; later dependent columns are dropped."""
    kept, Q = [], []
    for j in range(B.shape[1]):
        col = B[:, j]
        norm = np.linalg.norm(col)
        if norm == 0.0:
            continue
        v = col.copy()
        for _ in range(2):  # re-orthogonalize once for stability
            for q in Q:
                v -= (q @ v) * q
        rest = np.linalg.norm(v)
        if rest > DEPENDENCE_TOL * norm:
            kept.append(j)
            Q.append(v / rest)
    return kept


def lsq_solve(B, y) -> np.ndarray:
    """Least-squares coefficients; dependent columns get a zero coefficient."""
    B = np.asarray(B, dtype=float)
    y = np.asarray(y, dtype=float)
    if B.ndim != 2 or B.size == 0:
        raise InputError("basis matrix must be non-empty and 2-D")
    if B.shape[0] < B.shape[1]:
        raise InputError(f"need rows >= columns, got {B.shape}")
    if len(y) != B.shape[0]:
        raise ShapeError(f"{B.shape[0]} rows but {len(y)} targets")
    coeffs = np.zeros(B.shape[1])
    kept = independent_columns(B)
    if kept:
        coeffs[kept] = np.linalg.lstsq(B[:, kept], y, rcond=None)[0]
    return coeffs


def effective_params(n_terms: int, penalty: float) -> float:
    return n_terms + penalty * (n_terms - 1) / 2.0


def gcv(rss: float, n: int, n_terms: int, penalty: float = 3.0) -> float:
    """``(rss/n) / (1 - C/n)**2`` with ``C = n_terms + penalty * (n_terms - 1) / 2``."""
    c = effective_params(n_terms, penalty)
    if c >= n:
        raise DegenerateModelError(f"effective parameters {c} >= samples {n}")
    return (rss / n) / (1.0 - c / n) ** 2


def _gcv_or_inf(rss, n, n_terms, penalty) -> float:
    try:
        return gcv(rss, n, n_terms, penalty)
    except DegenerateModelError:
        return np.inf


def candidate_knots(values: np.ndarray, max_knots: int | None = 100) -> np.ndarray:
    """Distinct observed values minus the extremes, after thinning to evenly spaced ranks.

    Thinning takes ``max_knots`` ranks spread evenly over all distinct values
    (extremes included) before the extremes are removed.
    """
    distinct = np.unique(values)
    if max_knots is not None and len(distinct) > max_knots:
        ranks = np.unique(np.round(np.linspace(0, len(distinct) - 1, max_knots)).astype(int))
        distinct = distinct[ranks]
    return distinct[(distinct > values.min()) & (distinct < values.max())]


def _fit(B, y, terms, penalty, n_features) -> MarsModel:
    coeffs = lsq_solve(B, y)
    resid = y - B @ coeffs
    rss = float(resid @ resid)
    n = len(y)
    return MarsModel(tuple(terms), coeffs, _gcv_or_inf(rss, n, len(terms), penalty), penalty, rss, n, n_features)


def _pair_gain(parent_col, xcol, knots, Q, resid):
    """RSS reduction from adding each mirrored pair ``parent * hinge(+/-)`` at every knot."""
    gains = np.zeros(len(knots))
    cols = []
    for sign in (1, -1):
        C = parent_col[:, None] * np.maximum(0.0, sign * (xcol[:, None] - knots[None, :]))
        norms = np.einsum("ij,ij->j", C, C)
        R = C - Q @ (Q.T @ C)
        R -= Q @ (Q.T @ R)
        cols.append((R, norms))
    (R1, n1), (R2, n2) = cols
    s11 = np.einsum("ij,ij->j", R1, R1)
    ok1 = s11 > (DEPENDENCE_TOL**2) * np.maximum(n1, np.finfo(float).tiny)
    a1 = R1.T @ resid
    safe11 = np.where(ok1, s11, 1.0)
    gains += np.where(ok1, a1 * a1 / safe11, 0.0)
    # second column orthogonalized against the first
    proj = np.where(ok1, np.einsum("ij,ij->j", R1, R2) / safe11, 0.0)
    U2 = R2 - R1 * proj[None, :]
    s22 = np.einsum("ij,ij->j", U2, U2)
    ok2 = s22 > (DEPENDENCE_TOL**2) * np.maximum(n2, np.finfo(float).tiny)
    a2 = U2.T @ resid
    gains += np.where(ok2, a2 * a2 / np.where(ok2, s22, 1.0), 0.0)
    return gains


def _orthonormal(B: np.ndarray) -> np.ndarray:
    kept = independent_columns(B)
    if not kept:
        return np.zeros((B.shape[0], 0))
    q, _ = np.linalg.qr(B[:, kept])
    return q


def forward_pass(
    X,
    y,
    max_terms: int = 21,
    max_degree: int = 1,
    penalty: float = 3.0,
    max_knots: int | None = 100,
) -> MarsModel:
    """Grow the basis from the intercept by adding the hinge pair with the largest RSS reduction.

    Stops once ``max_terms`` would be exceeded or the best reduction falls
    below ``1e-10`` of the total sum of squares. Near-ties go to the lowest
    (feature, knot), then the earliest parent.
    """
    X = _matrix(X)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if len(y) != n:
        raise ShapeError(f"{n} rows but {len(y)} targets")
    if n < MIN_SAMPLES:
        raise FitError(f"MARS needs at least {MIN_SAMPLES} samples, got {n}")
    if max_terms < 1 or max_degree < 1:
        raise InputError("max_terms and max_degree must be >= 1")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise InputError("MARS inputs must be finite")

    terms = [INTERCEPT]
    B = np.ones((n, 1))
    model = _fit(B, y, terms, penalty, p)
    tss = float(((y - y.mean()) ** 2).sum())
    knots = [candidate_knots(X[:, f], max_knots) for f in range(p)]

    while len(terms) + 2 <= max_terms:
        Q = _orthonormal(B)
        resid = y - B @ model.coeffs
        best_gain, best = -np.inf, None
        candidates = []
        for f in range(p):
            if len(knots[f]) == 0:
                continue
            for parent_idx, parent in enumerate(terms):
                if parent.degree >= max_degree or any(h.feature == f for h in parent.hinges):
                    continue
                gains = _pair_gain(B[:, parent_idx], X[:, f], knots[f], Q, resid)
                candidates.append((f, parent_idx, gains))
                best_gain = max(best_gain, float(gains.max()))
        if not candidates or best_gain < STOP_RTOL * tss:
            break
        tol = TIE_RTOL * max(tss, np.finfo(float).tiny)
        # lowest feature, then lowest knot, then earliest parent among near-ties
        for f, parent_idx, gains in candidates:
            hits = np.nonzero(gains >= best_gain - tol)[0]
            if len(hits) == 0:
                continue
            key = (f, float(knots[f][hits[0]]), parent_idx)
            if best is None or key < best:
                best = key
        f, knot, parent_idx = best
        parent = terms[parent_idx]
        new_terms = [BasisTerm(parent.hinges + (Hinge(f, knot, s),)) for s in (1, -1)]
        new_B = np.column_stack([B] + [eval_basis(t, X) for t in new_terms])
        new_model = _fit(new_B, y, terms + new_terms, penalty, p)
        if new_model.rss > model.rss:
            break  # numerical guard: rss must not grow
        terms, B, model = terms + new_terms, new_B, new_model
    return model


def backward_pass(candidate: MarsModel, X, y) -> MarsModel:
    """Delete one non-intercept term at a time, choosing the deletion with the lowest GCV,
    and return the lowest-GCV model over every size visited (ties favour the larger model)."""
    X = _matrix(X, candidate.n_features)
    y = np.asarray(y, dtype=float)
    terms = list(candidate.terms)
    B_full = basis_matrix(terms, X)
    best = candidate
    active = list(range(len(terms)))
    while len(active) > 1:
        step = None
        for j in active[1:]:
            keep = [k for k in active if k != j]
            trial = _fit(B_full[:, keep], y, [terms[k] for k in keep], candidate.penalty, candidate.n_features)
            if step is None or trial.gcv < step[1].gcv:
                step = (j, trial)
        active.remove(step[0])
        if step[1].gcv < best.gcv:
            best = step[1]
    return best


def fit_mars(X, y, max_terms: int = 21, max_degree: int = 1, penalty: float = 3.0, max_knots: int | None = 100):
    candidate = forward_pass(X, y, max_terms, max_degree, penalty, max_knots)
    return backward_pass(candidate, X, y)


def mars_predict(model: MarsModel, X) -> np.ndarray | float:
    single = np.ndim(X) == 1
    X = _matrix(X, model.n_features)
    out = basis_matrix(model.terms, X) @ model.coeffs
    return float(out[0]) if single else out
