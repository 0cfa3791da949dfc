"""End-to-end reconstruction experiment: plant, subsample, project, measure.

One run generates a preference matrix, hides part of it by subsampling,
builds the sampling-tree store, thresholds the subsample's spectrum at
sigma = sqrt(eps^2 p / 2k) ||That||_F, and recommends products to users
drawn from the typical set. The report compares measured bad-recommendation
rates and per-user overheads against the analytic bounds, and labels every
derived guarantee with whether the Frobenius-mass precondition held
("precondition-satisfied") or the run extrapolates below it
("extrapolated").
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone

import numpy as np

from .errors import BoundVacuousError, MatrixError, ProjectionEmptyError
from .linalg import svd
from .qproject import ProjectionParams, kept_mask
from .recsys import (
    RecommendContext,
    bad_sample_bound,
    generate_T,
    quantum_typical_user_bound,
    recommendation_sigma,
    typical_set,
    typical_user_bound,
    w_statistic_bound,
)
from .rng import stream
from .store import MatrixStore
from .subsample import bound_threshold_family_error, derive_params, subsample
from . import rng as rng_mod

REPORT_SCHEMA = "qrecsim-report/1"


@dataclass(frozen=True)
class ExperimentConfig:
    """Knobs for one seeded end-to-end run."""

    m: int = 64
    n: int = 64
    k: int = 4
    noise: float = 0.05
    p: float | None = 0.5
    seed: int = field(default_factory=rng_mod.default_seed)
    gamma: float = 0.1
    delta: float = 0.1
    zeta: float = 0.1
    xi: float = 0.1
    kappa: float = 1.0 / 3.0
    users: int = 50
    recs_per_user: int = 40

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise MatrixError(f"unknown config keys: {sorted(unknown)}")
        return cls(**raw)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def run_experiment(config: ExperimentConfig) -> tuple[dict, list[dict]]:
    """Execute one run; returns (report, per-user rows for CSV export)."""
    seed = config.seed
    truth = generate_T(config.m, config.n, config.k, config.noise, stream(seed, "preference"))
    f_truth = svd(truth)
    fro_truth = f_truth.frobenius_norm()
    tail_sq = float(np.sum(f_truth.sigma[config.k :] ** 2))
    eps_k = float(np.sqrt(tail_sq) / fro_truth)
    if eps_k <= 0.0:
        # Noise-free instances reconstruct exactly; keep bounds well defined.
        eps_k = 1e-9

    sub_params, thr_params = derive_params(
        truth, config.k, eps_k, p=config.p, kappa=config.kappa
    )
    sampled = subsample(truth, sub_params.p, stream(seed, "subsample"))
    store = MatrixStore.from_dense(sampled) if sampled.any() else None
    if store is None:
        raise MatrixError("subsample kept no entries; raise p or the matrix mass")
    fro_hat = store.frobenius_norm()
    sigma = recommendation_sigma(eps_k, sub_params.p, config.k, fro_hat)
    params = ProjectionParams(sigma=sigma, kappa=config.kappa)

    ctx = RecommendContext(store, params)
    kept = kept_mask(ctx.f, params)
    kept_rank = int(np.sum(kept))
    surrogate = ctx.f.reconstruct(np.flatnonzero(kept))
    realized_err = float(np.linalg.norm(truth - surrogate) / fro_truth)

    mask = typical_set(ctx.dense, config.gamma)
    typical_idx = np.flatnonzero(mask)
    report_flags: list[str] = [sub_params.status]

    # Sandwich check on the realized kept set (hard invariant).
    sandwich_ok = True
    for i in range(ctx.f.shape[1]):
        s_i = ctx.f.singular_value(i)
        if s_i >= sigma and not kept[i]:
            sandwich_ok = False
        if s_i < (1.0 - config.kappa) * sigma and kept[i]:
            sandwich_ok = False

    rows: list[dict] = []
    bad = 0
    total = 0
    iterations = 0
    failures = 0
    w_values: list[float] = []
    user_rng = stream(seed, "users")
    rec_rng = stream(seed, "recommend")
    if typical_idx.size:
        row_sq = np.sum(ctx.dense[typical_idx] ** 2, axis=1)
        user_probs = row_sq / row_sq.sum()
        chosen = user_rng.choice(typical_idx, size=config.users, p=user_probs)
        for user in np.unique(chosen):
            count = int(np.sum(chosen == user))
            stats = {"user": int(user), "typical": True, "recs": 0, "bad": 0}
            try:
                probs, beta_sq, _, _ = ctx.user_state(int(user))
            except MatrixError:
                continue
            stats["beta_sq"] = beta_sq
            stats["w_stat"] = float(np.inf) if beta_sq <= 0 else 1.0 / beta_sq
            w_values.append(stats["w_stat"])
            for _ in range(count * config.recs_per_user):
                try:
                    out = ctx.recommend(int(user), rec_rng)
                except ProjectionEmptyError:
                    failures += 1
                    continue
                total += 1
                iterations += out.iterations
                stats["recs"] += 1
                if truth[user, out.product] == 0.0:
                    bad += 1
                    stats["bad"] += 1
            stats["bad_rate"] = stats["bad"] / stats["recs"] if stats["recs"] else None
            rows.append(stats)

    bad_rate = bad / total if total else None

    bounds: dict[str, object] = {
        "bad_sample": bad_sample_bound(eps_k),
        "family_error_relative": bound_threshold_family_error(
            np.sqrt(tail_sq),
            sub_params.eta,
            config.k,
            thr_params.mu,
            sub_params.p,
            config.kappa,
            fro_truth,
        )
        / fro_truth,
    }
    try:
        bounds["typical_user"] = typical_user_bound(
            eps_k, config.gamma, config.delta, config.zeta
        )
    except BoundVacuousError as exc:
        bounds["typical_user"] = None
        report_flags.append(f"typical_user bound vacuous: {exc}")
    eps_hat = realized_err / 9.0
    try:
        bounds["quantum_typical_user"] = quantum_typical_user_bound(
            eps_hat, config.gamma, config.delta, config.zeta
        )
    except (BoundVacuousError, MatrixError) as exc:
        bounds["quantum_typical_user"] = None
        report_flags.append(f"quantum bound vacuous: {exc}")
    try:
        bounds["w_statistic"] = w_statistic_bound(
            eps_hat, config.gamma, config.delta, config.zeta, config.xi
        )
    except (BoundVacuousError, MatrixError) as exc:
        bounds["w_statistic"] = None
        report_flags.append(f"w bound vacuous: {exc}")

    finite_w = [w for w in w_values if np.isfinite(w)]
    checks = {
        "sandwich": sandwich_ok,
        "rate_within_quantum_bound": (
            None
            if bad_rate is None or bounds["quantum_typical_user"] is None
            else bad_rate <= bounds["quantum_typical_user"]
        ),
    }
    report = {
        "schema": REPORT_SCHEMA,
        "created": datetime.now(timezone.utc).isoformat(),
        "seed": seed,
        "config": asdict(config),
        "instance": {
            "m": config.m,
            "n": config.n,
            "k": config.k,
            "noise": config.noise,
            "fro_T": fro_truth,
            "fro_That": fro_hat,
            "eps_k": eps_k,
            "entry_bound": sub_params.b,
            "typical_users": int(typical_idx.size),
            "typical_fraction": float(typical_idx.size / config.m),
        },
        "params": {
            "p": sub_params.p,
            "eta": sub_params.eta,
            "eta_max": sub_params.eta_max,
            "mu": thr_params.mu,
            "sigma": sigma,
            "kappa": config.kappa,
            "precondition": sub_params.status,
        },
        "bounds": bounds,
        "measured": {
            "realized_error": realized_err,
            "eps_hat": eps_hat,
            "kept_rank": kept_rank,
            "recommendations": total,
            "bad_recommendations": bad,
            "bad_rate_typical": bad_rate,
            "projection_failures": failures,
            "mean_iterations": iterations / total if total else None,
            "w_mean": float(np.mean(finite_w)) if finite_w else None,
            "w_max": float(np.max(finite_w)) if finite_w else None,
            "users_sampled": len(rows),
        },
        "checks": checks,
        "flags": report_flags,
    }
    return report, rows


def report_to_json(report: dict) -> str:
    """Canonical serialization: stable key order, newline terminated."""
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_report(report: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(report_to_json(_sanitize(report)))


def write_user_csv(rows: list[dict], path) -> None:
    """Per-user series: one row per sampled user."""
    names = ["user", "typical", "beta_sq", "w_stat", "recs", "bad", "bad_rate"]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=names)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k) for k in names})


def _sanitize(obj):
    """Make numpy scalars and infinities JSON safe."""
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        obj = obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return repr(obj)
    return obj
