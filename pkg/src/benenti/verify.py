"""Verification engine: run identity checks over sampled points, build a report.

Checks are identified by short ids:

  basic       defining first-order identity of the structure tensor
  connection  difference of Christoffel symbols has the projective form
  phi         connection-trace route to the one-form matches the algebraic one
  killing     K^(t) satisfies the Killing tensor equation for every grid t
  ricci-comm  the Ricci endomorphism commutes with the structure tensor
  carter      divergence of [ricci, S(t)] vanishes for every grid t
  poisson     quadratic integrals Poisson-commute at sampled phase points
  commutator  quantized operators commute on the test function suite
  decompose   commutator decomposition has vanishing Q and V
  drift       K^(t) is conserved along numerically integrated geodesics

Each check produces one record per sampled point (per trajectory for
drift) carrying the worst residual seen there and the parameters that
produced it.  Reports are deterministic functions of the configuration:
identical seeds give byte-identical documents apart from the timing
block, and parallel runs reproduce the serial residuals exactly.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import yaml

from . import operators as ops
from .errors import DegenerateMetricError
from .projective import (
    ProjectivePair,
    check_carter_condition,
    check_connection_difference,
    check_killing_tensor,
    check_phi_identity,
    check_projective_equivalence,
    check_ricci_commutation,
    t_grid,
)

SCHEMA_VERSION = 1

CHECK_IDS = (
    "basic",
    "connection",
    "phi",
    "killing",
    "ricci-comm",
    "carter",
    "poisson",
    "commutator",
    "decompose",
    "drift",
)

# Pinned acceptance thresholds; --tol overrides all of them uniformly.
DEFAULT_THRESHOLDS = {
    "basic": 1e-8,
    "connection": 1e-8,
    "phi": 1e-8,
    "killing": 1e-9,
    "ricci-comm": 1e-8,
    "carter": 1e-7,
    "poisson": 1e-8,
    "commutator": 1e-7,
    "decompose": 1e-7,
    "drift": 1e-8,
}


def function_suite(coordinates: Sequence[str]) -> tuple:
    """Seven scalar test functions: quadratic monomials, sin/cos of single
    coordinates, exponentials of linear forms."""
    a, b = coordinates[0], coordinates[-1]
    return (
        f"{a} * {b}",
        f"{a}^2",
        f"{b}^2",
        f"sin({a})",
        f"cos({b})",
        f"exp({a} + {b})",
        f"exp({a} - {b})",
    )


@dataclass(frozen=True)
class VerifyConfig:
    """Echoable configuration for a verification run."""

    points: int = 20
    order: int = 4
    seed: int = 42
    tol: Optional[float] = None
    t_grid: Optional[tuple] = None
    checks: tuple = CHECK_IDS
    jobs: int = 1
    drift_step: float = 1e-3
    drift_horizon: float = 1.0
    drift_trajectories: int = 3

    def __post_init__(self):
        if self.points < 1:
            raise ValueError(f"points must be positive, got {self.points}")
        if self.order < 3:
            raise ValueError(f"order must be >= 3, got {self.order}")
        if self.jobs < 1:
            raise ValueError(f"jobs must be positive, got {self.jobs}")
        unknown = [c for c in self.checks if c not in CHECK_IDS]
        if unknown:
            raise ValueError(
                f"unknown checks {unknown}; known ids: {list(CHECK_IDS)}"
            )

    def threshold(self, check: str) -> float:
        if self.tol is not None:
            return self.tol
        return DEFAULT_THRESHOLDS[check]


@dataclass(frozen=True)
class CheckRecord:
    """Outcome of one check at one point."""

    check: str
    point: tuple
    residual: float
    threshold: float
    params: tuple = ()  # sorted (key, value) pairs, YAML-safe values

    @property
    def passed(self) -> bool:
        return self.residual <= self.threshold

    def to_mapping(self) -> dict:
        return {
            "check": self.check,
            "point": [float(c) for c in self.point],
            "residual": float(self.residual),
            "threshold": float(self.threshold),
            "verdict": "pass" if self.passed else "fail",
            "params": {k: v for k, v in self.params},
        }


@dataclass
class VerificationReport:
    """Structured outcome of a full verification run."""

    pair_name: str
    source: str
    dimension: int
    config: VerifyConfig
    records: list = field(default_factory=list)
    expected_equivalent: Optional[bool] = None
    elapsed_seconds: float = 0.0
    schema_version: int = SCHEMA_VERSION

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    @property
    def failures(self) -> int:
        return sum(not r.passed for r in self.records)

    def max_residuals(self) -> dict:
        out: dict = {}
        for r in self.records:
            cur = out.get(r.check)
            if cur is None or r.residual > cur:
                out[r.check] = r.residual
        return {k: out[k] for k in CHECK_IDS if k in out}

    def to_mapping(self) -> dict:
        cfg = self.config
        doc = {
            "schema_version": self.schema_version,
            "pair": self.pair_name,
            "source": self.source,
            "dimension": self.dimension,
        }
        if self.expected_equivalent is not None:
            doc["expected_equivalent"] = self.expected_equivalent
        doc.update({
            "configuration": {
                "seed": cfg.seed,
                "points": cfg.points,
                "order": cfg.order,
                "tol": "per-check defaults" if cfg.tol is None else float(cfg.tol),
                "t_grid": "eigenvalue-filtered default"
                if cfg.t_grid is None
                else [float(t) for t in cfg.t_grid],
                "checks": list(cfg.checks),
                "jobs": cfg.jobs,
                "drift": {
                    "step": cfg.drift_step,
                    "horizon": cfg.drift_horizon,
                    "trajectories": cfg.drift_trajectories,
                },
            },
            "summary": {
                "verdict": "pass" if self.passed else "fail",
                "records": len(self.records),
                "failures": self.failures,
                "max_residual": {
                    k: float(v) for k, v in self.max_residuals().items()
                },
            },
            "records": [r.to_mapping() for r in self.records],
            "timing": {"elapsed_seconds": round(self.elapsed_seconds, 3)},
        })
        return doc

    def render(self) -> str:
        return yaml.safe_dump(
            self.to_mapping(), sort_keys=False, default_flow_style=False
        )


def _sample_points(pair: ProjectivePair, n: int, rng: np.random.Generator):
    """n domain points, resampling degenerate draws up to 100 times each."""
    points = []
    for _ in range(n):
        for _attempt in range(100):
            p = pair.sample_point(rng)
            try:
                pair.frame(p, 0).L  # forces both metrics to evaluate
            except DegenerateMetricError:
                continue
            points.append(p)
            break
        else:
            raise DegenerateMetricError(
                f"could not sample a non-degenerate point in "
                f"{pair.name or 'pair'} after 100 tries"
            )
    return points


def _grid_at(pair: ProjectivePair, point, cfg: VerifyConfig) -> tuple:
    if cfg.t_grid is not None:
        return tuple(cfg.t_grid)
    return t_grid(pair, point)


def _unordered_pairs(values: Sequence[float]):
    for i, t in enumerate(values):
        for s in values[i:]:
            yield t, s


def _pointwise_residual(pair, check, point, cfg: VerifyConfig):
    """(residual, params) of one frame-based check at one point."""
    if check == "basic":
        return check_projective_equivalence(pair, point, cfg.order), ()
    if check == "connection":
        return check_connection_difference(pair, point, cfg.order), ()
    if check == "phi":
        return check_phi_identity(pair, point, cfg.order), ()
    if check == "ricci-comm":
        return check_ricci_commutation(pair, point, cfg.order), ()
    if check == "killing":
        worst, worst_t = -1.0, None
        for t in _grid_at(pair, point, cfg):
            r = check_killing_tensor(pair, t, point, cfg.order)
            if r > worst:
                worst, worst_t = r, t
        return worst, (("t", float(worst_t)),)
    if check == "carter":
        worst, worst_t = -1.0, None
        for t in _grid_at(pair, point, cfg):
            r = check_carter_condition(pair, t, point, max(cfg.order, 3))
            if r > worst:
                worst, worst_t = r, t
        return worst, (("t", float(worst_t)),)
    raise ValueError(f"not a pointwise check: {check}")


def _commutator_record(pair, point, cfg: VerifyConfig):
    grid = _grid_at(pair, point, cfg)
    worst = (-1.0, ())
    for f in function_suite(pair.coordinates):
        B = ops.killing_commutator_grid(pair, f, point)
        for t, s in _unordered_pairs(grid):
            value, scale = ops.commutator_from_grid(B, t, s)
            r = abs(value) / scale
            if r > worst[0]:
                worst = (
                    r,
                    (
                        ("function", f),
                        ("s", float(s)),
                        ("scale", float(scale)),
                        ("t", float(t)),
                    ),
                )
    return worst


def _poisson_record(pair, point, momentum, cfg: VerifyConfig):
    grid = _grid_at(pair, point, cfg)
    phi = ops.PhaseSpacePoint(point, tuple(momentum))
    worst = (-1.0, ())
    for t, s in _unordered_pairs(grid):
        r = ops.poisson_residual(pair, t, s, phi)
        if r > worst[0]:
            worst = (
                r,
                (
                    ("momentum", [float(m) for m in momentum]),
                    ("s", float(s)),
                    ("t", float(t)),
                ),
            )
    return worst


def _decompose_record(pair, point, cfg: VerifyConfig):
    grid = _grid_at(pair, point, cfg)
    t, s = grid[0], grid[-1]
    dec = ops.commutator_decompose(
        ops.killing_operator(pair, t), ops.killing_operator(pair, s), point
    )
    residual = max(dec.q_norm, dec.v_norm)
    params = (
        ("cubic_residual", float(dec.cubic_residual)),
        ("q_norm", float(dec.q_norm)),
        ("s", float(s)),
        ("t", float(t)),
        ("v_norm", float(dec.v_norm)),
    )
    return residual, params


def _drift_records(pair, points, velocities, cfg: VerifyConfig):
    records = []
    n = min(cfg.drift_trajectories, len(points))
    for x0, v in zip(points[:n], velocities[:n]):
        grid = _grid_at(pair, x0, cfg)
        t = grid[0]
        p0 = tuple(pair.g.values(x0) @ np.asarray(v, dtype=float))
        phi0 = ops.PhaseSpacePoint(x0, p0)
        result = ops.geodesic_drift(
            pair, t, phi0, cfg.drift_horizon, cfg.drift_step
        )
        params = [
            ("exited", bool(result.exited)),
            ("momentum", [float(c) for c in p0]),
            ("steps", int(result.steps)),
            ("t", float(t)),
        ]
        if result.exit_time is not None:
            params.insert(1, ("exit_time", float(result.exit_time)))
        records.append(
            CheckRecord(
                check="drift",
                point=tuple(float(c) for c in x0),
                residual=float(result.max_drift),
                threshold=cfg.threshold("drift"),
                params=tuple(params),
            )
        )
    return records


def _run_check_chunk(pair, check, points, momenta, velocities, cfg):
    """Worker body: records for one check over a chunk of points."""
    if check == "drift":
        return _drift_records(pair, points, velocities, cfg)
    records = []
    for i, point in enumerate(points):
        if check == "commutator":
            residual, params = _commutator_record(pair, point, cfg)
        elif check == "poisson":
            residual, params = _poisson_record(pair, point, momenta[i], cfg)
        elif check == "decompose":
            residual, params = _decompose_record(pair, point, cfg)
        else:
            residual, params = _pointwise_residual(pair, check, point, cfg)
        records.append(
            CheckRecord(
                check=check,
                point=tuple(float(c) for c in point),
                residual=float(residual),
                threshold=cfg.threshold(check),
                params=params,
            )
        )
    return records


def _chunk(seq, size):
    return [seq[i : i + size] for i in range(0, len(seq), size)]


def verify_pair(
    pair: ProjectivePair,
    config: Optional[VerifyConfig] = None,
    *,
    source: str = "memory",
    expected_equivalent: Optional[bool] = None,
) -> VerificationReport:
    """Run the configured checks and return the structured report.

    Sampling is deterministic in the seed: points, momenta and drift
    velocities come from independent child streams so that restricting
    --checks never changes the data seen by the remaining checks.
    """
    cfg = config or VerifyConfig()
    started = time.perf_counter()

    ss = np.random.SeedSequence(cfg.seed)
    s_points, s_momenta, s_velocities = ss.spawn(3)
    points = _sample_points(pair, cfg.points, np.random.default_rng(s_points))
    momenta = np.random.default_rng(s_momenta).uniform(
        -2.0, 2.0, size=(cfg.points, pair.dim)
    )
    velocities = np.random.default_rng(s_velocities).uniform(
        -0.7, 0.7, size=(cfg.points, pair.dim)
    )

    tasks = []
    for check in cfg.checks:
        if check == "drift":
            tasks.append((check, points, momenta, velocities))
            continue
        size = max(1, -(-len(points) // cfg.jobs))
        point_chunks = _chunk(points, size)
        momentum_chunks = _chunk(momenta, size)
        for pts, moms in zip(point_chunks, momentum_chunks):
            tasks.append((check, pts, moms, velocities))

    if cfg.jobs == 1:
        chunk_results = [
            _run_check_chunk(pair, check, pts, moms, vels, cfg)
            for check, pts, moms, vels in tasks
        ]
    else:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            futures = [
                pool.submit(_run_check_chunk, pair, check, pts, moms, vels, cfg)
                for check, pts, moms, vels in tasks
            ]
            chunk_results = [f.result() for f in futures]

    records = [rec for chunk in chunk_results for rec in chunk]
    return VerificationReport(
        pair_name=pair.name or "unnamed",
        source=source,
        dimension=pair.dim,
        config=cfg,
        records=records,
        expected_equivalent=expected_equivalent,
        elapsed_seconds=time.perf_counter() - started,
    )


def quick_config(**overrides) -> VerifyConfig:
    """Small-sample configuration for smoke runs and tests."""
    base = dict(points=5, drift_trajectories=1)
    base.update(overrides)
    return VerifyConfig(**base)


__all__ = [
    "CHECK_IDS",
    "DEFAULT_THRESHOLDS",
    "SCHEMA_VERSION",
    "CheckRecord",
    "VerificationReport",
    "VerifyConfig",
    "quick_config",
    "function_suite",
    "verify_pair",
]
