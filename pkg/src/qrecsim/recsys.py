"""Preference instances, recommendation sampling, and quality bounds.

A preference matrix T marks which products each user likes. Recommendation
quality is measured against T itself: drawing column j for user i is bad
when T_ij = 0. Sampling instead from a low-rank or threshold-projected
surrogate of T is good on average because the surrogate concentrates mass
on the planted structure; the bounds here quantify how much of the sampled
mass can land on bad cells, overall and for "typical" users whose row mass
is close to the per-user average.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BoundVacuousError, ColdStartError, MatrixError, ProjectionEmptyError
from .linalg import SvdFactorization, as_matrix, svd
from .qproject import (
    ProjectionOutcome,
    ProjectionParams,
    default_max_iterations,
    exact_kept_components,
)
from .store import MatrixStore


def generate_T(
    m: int, n: int, k: int, noise: float, rng: np.random.Generator
) -> np.ndarray:
    """Planted 0/1 preference matrix: k user types plus independent flips.

    Each of the k type rows likes each product with probability 1/2 (redrawn
    if empty); every user copies one uniformly chosen type, then each cell
    flips with probability ``noise``. With noise = 0 the rank is at most k.
    """
    if m < 1 or n < 1 or k < 1:
        raise MatrixError(f"m, n, k must be >= 1, got {m}, {n}, {k}")
    if not 0.0 <= noise < 1.0:
        raise MatrixError(f"noise must be in [0, 1), got {noise}")
    types = rng.integers(0, 2, size=(k, n)).astype(np.float64)
    for t in range(k):
        while not types[t].any():
            types[t] = rng.integers(0, 2, size=n).astype(np.float64)
    assignment = rng.integers(0, k, size=m)
    matrix = types[assignment]
    if noise > 0.0:
        flips = rng.random((m, n)) < noise
        matrix = np.where(flips, 1.0 - matrix, matrix)
    return matrix


# -- analytic bounds ---------------------------------------------------------


def bad_sample_bound(eps: float) -> float:
    """Bad-cell mass bound (eps / (1 - eps))^2 for rank-k surrogate sampling.

    eps is the relative truncation error ||T - T_k||_F / ||T||_F; the bound
    covers the row-mass-weighted average bad probability.
    """
    _check_eps(eps)
    return (eps / (1.0 - eps)) ** 2


def typical_user_bound(eps: float, gamma: float, delta: float, zeta: float) -> float:
    """Bad-sample bound conditioned on hitting a typical user.

    (eps (1+eps) / (1-eps))^2 / ((1/sqrt(1+gamma) - eps/sqrt(delta))^2
    (1 - delta - zeta)). Raises BoundVacuousError when the denominator
    closes (eps too large relative to delta).
    """
    _check_eps(eps)
    _check_fractions(gamma=gamma, delta=delta, zeta=zeta)
    margin = 1.0 / np.sqrt(1.0 + gamma) - eps / np.sqrt(delta)
    if margin <= 0.0:
        raise BoundVacuousError(
            f"bound vacuous: eps={eps} needs eps < sqrt(delta)/sqrt(1+gamma)"
        )
    num = (eps * (1.0 + eps) / (1.0 - eps)) ** 2
    return float(num / (margin**2 * (1.0 - delta - zeta)))


def quantum_typical_user_bound(eps: float, gamma: float, delta: float, zeta: float) -> float:
    """Typical-user bound for the full quantum pipeline.

    The end-to-end surrogate error is at most 9 eps, so this is the plain
    bound with eps replaced by 9 eps throughout.
    """
    _check_eps(eps)
    if 9.0 * eps >= 1.0:
        raise BoundVacuousError(f"bound vacuous: 9 eps = {9.0 * eps} >= 1")
    return typical_user_bound(9.0 * eps, gamma, delta, zeta)


def w_statistic_bound(
    eps: float, gamma: float, delta: float, zeta: float, xi: float
) -> float:
    """Bound on the per-user overhead W_i holding for >= (1-xi) of typical users.

    (1 + eps)^2 / (xi (1 - delta - zeta) (1/sqrt(1+gamma) - 9 eps/sqrt(delta))^2).
    """
    _check_eps(eps)
    _check_fractions(gamma=gamma, delta=delta, zeta=zeta)
    if not 0.0 < xi < 1.0:
        raise MatrixError(f"xi must be in (0, 1), got {xi}")
    margin = 1.0 / np.sqrt(1.0 + gamma) - 9.0 * eps / np.sqrt(delta)
    if margin <= 0.0:
        raise BoundVacuousError(
            f"bound vacuous: 9 eps = {9.0 * eps} needs 9 eps < sqrt(delta)/sqrt(1+gamma)"
        )
    return float((1.0 + eps) ** 2 / (xi * (1.0 - delta - zeta) * margin**2))


def calibration_ratio(eps: float, gamma: float, delta: float, zeta: float) -> float:
    """typical_user_bound / bad_sample_bound: the price of conditioning."""
    return typical_user_bound(eps, gamma, delta, zeta) / bad_sample_bound(eps)


def _check_eps(eps: float) -> None:
    if not np.isfinite(eps) or not 0.0 < eps < 1.0:
        raise MatrixError(f"eps must be in (0, 1), got {eps}")


def _check_fractions(**values: float) -> None:
    for name, value in values.items():
        if not np.isfinite(value) or not 0.0 < value < 1.0:
            raise MatrixError(f"{name} must be in (0, 1), got {value}")
    if "delta" in values and "zeta" in values and values["delta"] + values["zeta"] >= 1.0:
        raise MatrixError("delta + zeta must be < 1")


# -- typical users and bad mass ----------------------------------------------


def typical_set(t, gamma: float) -> np.ndarray:
    """Users whose squared row norm is within (1+gamma) of the average.

    Returns a boolean mask: ||T||_F^2 / ((1+gamma) m) <= ||T_i||^2 <=
    (1+gamma) ||T||_F^2 / m, both edges inclusive.
    """
    arr = as_matrix(t)
    if not np.isfinite(gamma) or gamma <= 0.0:
        raise MatrixError(f"gamma must be finite and > 0, got {gamma}")
    row_sq = np.sum(arr * arr, axis=1)
    avg = np.sum(row_sq) / arr.shape[0]
    return (row_sq >= avg / (1.0 + gamma)) & (row_sq <= avg * (1.0 + gamma))


def bad_mass(surrogate, truth) -> float:
    """Fraction of the surrogate's squared mass on cells where truth is 0."""
    sur = as_matrix(surrogate)
    tru = as_matrix(truth)
    if sur.shape != tru.shape:
        raise MatrixError(f"shape mismatch {sur.shape} vs {tru.shape}")
    total = float(np.sum(sur * sur))
    if total <= 0.0:
        raise MatrixError("surrogate has zero mass")
    return float(np.sum((sur * sur)[tru == 0.0]) / total)


def w_statistic(row, projected_row) -> float:
    """Per-user overhead ||row||^2 / ||projected row||^2 (inf if wiped out)."""
    r = np.asarray(row, dtype=np.float64)
    p = np.asarray(projected_row, dtype=np.float64)
    top = float(r @ r)
    bottom = float(p @ p)
    if top <= 0.0:
        raise ColdStartError("cold-start user: zero stored row")
    return float(np.inf) if bottom <= 0.0 else top / bottom


# -- recommendation -----------------------------------------------------------


@dataclass(frozen=True)
class RecommendOutcome:
    """One recommendation: the product plus the run's bookkeeping."""

    user: int
    product: int
    iterations: int
    beta_sq: float
    w_stat: float


class RecommendContext:
    """Projection data for repeated recommendations against one store.

    Factorizes the stored matrix once and caches each user's component
    overlaps, kept set, and post-projection distribution; individual calls
    then only consume randomness (retry draws and the final measurement).
    Exact-path semantics: the kept set is the deterministic grid rounding.
    """

    def __init__(self, source, params: ProjectionParams):
        if isinstance(source, MatrixStore):
            self.dense = source.to_dense()
        else:
            self.dense = as_matrix(source)
        self.params = params
        self.f: SvdFactorization = svd(self.dense)
        fro = self.f.frobenius_norm()
        if params.sigma > fro:
            raise MatrixError(f"threshold {params.sigma} exceeds ||A||_F = {fro}")
        self._users: dict[int, tuple[np.ndarray, float, np.ndarray, list[int]]] = {}

    def user_state(self, i: int) -> tuple[np.ndarray, float, np.ndarray, list[int]]:
        """(probabilities, beta_sq, projected unit row, kept indices) for user i."""
        if i in self._users:
            return self._users[i]
        if not 0 <= i < self.dense.shape[0]:
            raise MatrixError(f"user index {i} outside [0, {self.dense.shape[0]})")
        row = self.dense[i]
        if not row.any():
            raise ColdStartError(f"cold-start user: user {i} has no stored entries")
        comps, alpha, kept = exact_kept_components(self.f, row, self.params)
        beta_sq = float(np.sum(alpha[kept] ** 2))
        if beta_sq > 0.0:
            state = self.f.v[:, kept] @ alpha[kept]
            state /= np.linalg.norm(state)
        else:
            state = np.zeros(self.dense.shape[1])
        self._users[i] = (state**2, beta_sq, state, [c.index for c in comps if c.kept])
        return self._users[i]

    def recommend(self, i: int, rng: np.random.Generator) -> RecommendOutcome:
        """Project user i's stored row, then measure a product index."""
        probs, beta_sq, _, _ = self.user_state(i)
        limit = self.params.max_iterations or default_max_iterations(
            self.dense.shape[1], beta_sq
        )
        for attempt in range(1, limit + 1):
            if rng.random() < beta_sq:
                product = int(rng.choice(self.dense.shape[1], p=probs))
                return RecommendOutcome(
                    user=i,
                    product=product,
                    iterations=attempt,
                    beta_sq=beta_sq,
                    w_stat=float(np.inf) if beta_sq <= 0.0 else 1.0 / beta_sq,
                )
        raise ProjectionEmptyError(
            f"projection empty: user {i} kept no component after {limit} repetitions",
            beta_sq=beta_sq,
            iterations=limit,
        )


def recommend(
    source,
    user: int,
    params: ProjectionParams,
    rng: np.random.Generator,
    context: RecommendContext | None = None,
) -> RecommendOutcome:
    """One recommendation for ``user`` from a store or dense matrix."""
    ctx = context or RecommendContext(source, params)
    return ctx.recommend(user, rng)


def recommendation_sigma(eps: float, p: float, k: int, norm_f_hat: float) -> float:
    """Threshold sqrt(eps^2 p / (2 k)) ||That||_F used for recommendations."""
    _check_eps(eps)
    if not 0.0 < p <= 1.0:
        raise MatrixError(f"sampling probability must be in (0, 1], got {p}")
    if k < 1:
        raise MatrixError(f"target rank k must be >= 1, got {k}")
    if not np.isfinite(norm_f_hat) or norm_f_hat <= 0.0:
        raise MatrixError(f"norm must be finite and > 0, got {norm_f_hat}")
    return float(np.sqrt(eps * eps * p / (2.0 * k)) * norm_f_hat)


def projection_outcome_to_row(outcome: ProjectionOutcome, row_norm: float) -> np.ndarray:
    """Scale a unit projection outcome back to row magnitude."""
    return outcome.state * row_norm
