"""Second-order operators nabla_i A^{ij} nabla_j, their commutators, and the
classical (phase-space) counterparts.

The quantum side works pointwise through jets: applying an operator to an
order-m jet of a function yields the order-(m-2) jet of the result, so a
nested application (a commutator) of two second-order operators needs a
working order of exactly 4 and produces a plain number.  No symbolic
coefficient expansion ever happens.

The classical side treats the same coefficient families as quadratic
integrals I_t(x, p) = A_t^{ij}(x) p_i p_j on phase space, with Poisson
brackets (x-derivatives from jets, p-derivatives analytic) and a fixed-step
Runge-Kutta geodesic integrator measuring how well I_t is conserved.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement
from typing import Callable, Sequence, Union

import numpy as np

from . import expr, jets
from .errors import OrderExhaustedError
from .geometry import JetTensor, MetricField, christoffel_values
from .projective import PointFrame, ProjectivePair, _matmul

FunctionLike = Union[str, expr.Expression, Callable]


class QuantizedOperator:
    """The operator f -> nabla_i (A^{ij} d_j f) for a coefficient field A.

    ``geometry`` is a ProjectivePair (a bare MetricField is wrapped in a
    trivial pair); its first metric supplies the connection and volume
    density.  ``coefficients`` maps a PointFrame to the (2,0) component array
    of A at that frame's point and order.  Components are symmetrized on
    evaluation, like metric components.  Operators built this way annihilate
    constants by construction: there is no zeroth-order term.
    """

    def __init__(self, geometry, coefficients, name: str | None = None):
        if isinstance(geometry, MetricField):
            geometry = ProjectivePair(geometry, geometry)
        self.pair = geometry
        self.metric = geometry.g
        self.dim = geometry.dim
        self.coordinates = geometry.coordinates
        self._coefficients = coefficients
        self.name = name

    def coefficient_tensor(self, point, order: int) -> JetTensor:
        """A^{ij} as jets at (point, order), symmetrized."""
        frame = self.pair.frame(point, order)
        raw = self._coefficients(frame)
        comps = raw.comps if isinstance(raw, JetTensor) else np.asarray(raw)
        d = self.dim
        sym = np.empty((d, d), dtype=object)
        for i in range(d):
            sym[i, i] = comps[i, i]
            for j in range(i + 1, d):
                sym[i, j] = sym[j, i] = 0.5 * (comps[i, j] + comps[j, i])
        return JetTensor(sym, 2, 0)

    @classmethod
    def from_expressions(cls, metric: MetricField, components, name=None):
        """Operator with A^{ij} given as expression strings over the chart."""
        coords = metric.coordinates
        d = len(coords)
        if len(components) != d or any(len(row) != d for row in components):
            raise ValueError(f"coefficient matrix must be {d}x{d}")
        parsed = [[expr.parse(str(c), coords) for c in row] for row in components]

        def coefficients(frame: PointFrame):
            seeds = jets.seed_coordinates(frame.point, frame.order)
            assignment = dict(zip(coords, seeds))
            out = np.empty((d, d), dtype=object)
            for i in range(d):
                for j in range(d):
                    out[i, j] = expr.evaluate(parsed[i][j], assignment)
            return out

        return cls(metric, coefficients, name=name)

    def __repr__(self):
        label = f"{self.name!r}, " if self.name else ""
        return f"QuantizedOperator({label}dim={self.dim})"


def laplacian(geometry) -> QuantizedOperator:
    """The Laplace-Beltrami operator of the (first) metric: A = g^{-1}."""
    return QuantizedOperator(
        geometry, lambda frame: frame.g_inv, name="laplacian"
    )


def killing_operator(pair: ProjectivePair, t: float) -> QuantizedOperator:
    """Carter operator of the pair's Killing tensor K^(t): A = S(t) g^{-1}."""

    def coefficients(frame: PointFrame):
        ginv = frame.g_inv
        return _matmul(frame.S_of_t(t).comps, ginv.comps)

    return QuantizedOperator(pair, coefficients, name=f"K_hat(t={t})")


def killing_coefficient_operator(pair: ProjectivePair, l: int) -> QuantizedOperator:
    """Operator of the t^l coefficient of the family: A_l = S_l g^{-1}.

    The top coefficient l = n-1 is the Laplace-Beltrami operator itself.
    """
    if not 0 <= l < pair.dim:
        raise ValueError(f"coefficient index {l} outside 0..{pair.dim - 1}")

    def coefficients(frame: PointFrame):
        S = frame.benenti.S_coeffs[l]
        return _matmul(S.comps, frame.g_inv.comps)

    return QuantizedOperator(pair, coefficients, name=f"K_hat[{l}]")


def _function_jet(op: QuantizedOperator, f: FunctionLike, point, order: int):
    if isinstance(f, str):
        f = expr.parse(f, op.coordinates)
    if isinstance(f, jets.Jet):
        raise TypeError(
            "pass a jet factory (point, order) -> Jet, not a fixed jet"
        )
    if callable(f):
        out = f(point, order)
        if not isinstance(out, jets.Jet) or out.order != order:
            raise ValueError("jet factory must produce a Jet of the requested order")
        return out
    seeds = jets.seed_coordinates(point, order)
    return expr.evaluate(f, dict(zip(op.coordinates, seeds)))


def _apply_to_jet(op: QuantizedOperator, f_jet: jets.Jet, point,
                  form: str = "christoffel") -> jets.Jet:
    """Core application; consumes two jet orders."""
    m = f_jet.order
    if m < 2:
        raise OrderExhaustedError(
            f"applying a second-order operator needs jet order >= 2, got {m}"
        )
    d = op.dim
    frame = op.pair.frame(point, m)
    A = op.coefficient_tensor(point, m)
    df = [jets.differentiate(f_jet, j) for j in range(d)]  # order m-1
    V = []
    for i in range(d):
        acc = None
        for j in range(d):
            term = jets.truncate(A.comps[i, j], m - 1) * df[j]
            acc = term if acc is None else acc + term
        V.append(acc)
    if form == "christoffel":
        # nabla_i V^i = d_i V^i + gamma^s_{si} V^i
        acc = None
        for i in range(d):
            term = jets.differentiate(V[i], i)
            weight = jets.truncate(frame.gamma_trace[i], m - 2)
            term = term + weight * jets.truncate(V[i], m - 2)
            acc = term if acc is None else acc + term
        return acc
    if form == "density":
        # (1/w) d_i (w V^i) with w = sqrt |det g|
        w = frame.sqrt_abs_det_g
        w_cut = jets.truncate(w, m - 1)
        acc = None
        for i in range(d):
            term = jets.differentiate(w_cut * V[i], i)
            acc = term if acc is None else acc + term
        return jets.reciprocal(jets.truncate(w, m - 2)) * acc
    raise ValueError(f"unknown divergence form {form!r}")


def apply_operator(op: QuantizedOperator, f: FunctionLike, point,
                   output_order: int = 0, form: str = "christoffel") -> jets.Jet:
    """Jet of (op f) at the point, to the requested order.

    ``f`` may be expression text, a parsed expression, or a jet factory
    (point, order) -> Jet.  The working order is output_order + 2.
    """
    if output_order < 0:
        raise ValueError(f"output_order must be >= 0, got {output_order}")
    f_jet = _function_jet(op, f, point, output_order + 2)
    return _apply_to_jet(op, f_jet, point, form=form)


def laplace_apply(metric, f: FunctionLike, point, output_order: int = 0) -> jets.Jet:
    """Laplace-Beltrami operator applied to f at the point."""
    return apply_operator(laplacian(metric), f, point, output_order)


def _nested_values(op_t: QuantizedOperator, op_s: QuantizedOperator,
                   f_jet4: jets.Jet, point):
    """(op_t op_s f)(p) and (op_s op_t f)(p) from one order-4 jet."""
    inner_s = _apply_to_jet(op_s, f_jet4, point)  # order 2
    inner_t = _apply_to_jet(op_t, f_jet4, point)
    ts = _apply_to_jet(op_t, inner_s, point).value
    st = _apply_to_jet(op_s, inner_t, point).value
    return ts, st


def commutator_apply(op_t: QuantizedOperator, op_s: QuantizedOperator,
                     f: FunctionLike, point) -> float:
    """[op_t, op_s] f at the point, as a plain number (working order 4)."""
    if op_t.coordinates != op_s.coordinates:
        raise ValueError("operators live on different charts")
    f_jet = _function_jet(op_t, f, point, 4)
    ts, st = _nested_values(op_t, op_s, f_jet, point)
    return ts - st


def commutator_residual(op_t: QuantizedOperator, op_s: QuantizedOperator,
                        f: FunctionLike, point) -> float:
    """|[op_t, op_s] f| / max(1, |op_t op_s f|, |op_s op_t f|) at the point."""
    if op_t.coordinates != op_s.coordinates:
        raise ValueError("operators live on different charts")
    f_jet = _function_jet(op_t, f, point, 4)
    ts, st = _nested_values(op_t, op_s, f_jet, point)
    return abs(ts - st) / max(1.0, abs(ts), abs(st))


def killing_commutator_grid(pair: ProjectivePair, f: FunctionLike, point) -> np.ndarray:
    """B[l, k] = (K_hat[l] K_hat[k] f)(p) over the family's coefficients.

    Since K_hat(t) = sum_l t^l K_hat[l], any [K_hat(t), K_hat(s)] f follows
    from this grid by polynomial combination; see commutator_from_grid.
    """
    d = pair.dim
    ops = [killing_coefficient_operator(pair, l) for l in range(d)]
    f_jet = _function_jet(ops[0], f, point, 4)
    inner = [_apply_to_jet(op, f_jet, point) for op in ops]  # order 2 each
    B = np.empty((d, d))
    for l in range(d):
        for k in range(d):
            B[l, k] = _apply_to_jet(ops[l], inner[k], point).value
    return B


def commutator_from_grid(B: np.ndarray, t: float, s: float):
    """([K_hat(t), K_hat(s)] f, scale) from a nested-application grid.

    The scale is max(1, |K_t K_s f|, |K_s K_t f|), matching
    commutator_residual.
    """
    d = B.shape[0]
    tp = t ** np.arange(d)
    sp = s ** np.arange(d)
    ts = float(tp @ B @ sp)
    st = float(sp @ B @ tp)
    return ts - st, max(1.0, abs(ts), abs(st))


@dataclass(frozen=True)
class CommutatorDecomposition:
    """First-order form of a commutator at a point.

    If the commutator acts as nabla_i Q^{ij} nabla_j + V^l nabla_l (plus
    nothing of third order), probing with centered monomials recovers Q and
    V exactly: linear probes see only V, quadratic probes only 2Q (their
    first derivatives vanish at the center).  cubic_residual measures the
    scaled action on centered cubics, which any such operator annihilates
    at the center.
    """

    point: tuple
    Q: np.ndarray
    V: np.ndarray
    cubic_residual: float

    @property
    def q_norm(self) -> float:
        return float(np.max(np.abs(self.Q)))

    @property
    def v_norm(self) -> float:
        return float(np.max(np.abs(self.V)))


def commutator_decompose(op_t: QuantizedOperator, op_s: QuantizedOperator,
                         point) -> CommutatorDecomposition:
    """Probe [op_t, op_s] at a point with centered monomials.

    Both operators annihilate constants, so the commutator has no
    zeroth-order part; V comes from the linear probes and Q from the
    quadratic ones (halved: d^2 of u_a u_b hits both index orders).
    """
    if op_t.coordinates != op_s.coordinates:
        raise ValueError("operators live on different charts")
    d = op_t.dim
    seeds = jets.seed_coordinates(point, 4)
    u = [s - s.value for s in seeds]  # centered coordinates

    def commutator_on(probe):
        ts, st = _nested_values(op_t, op_s, probe, point)
        return ts - st, max(1.0, abs(ts), abs(st))

    V = np.empty(d)
    for a in range(d):
        V[a], _ = commutator_on(u[a])
    Q = np.empty((d, d))
    for a in range(d):
        for b in range(a, d):
            value, _ = commutator_on(u[a] * u[b])
            Q[a, b] = Q[b, a] = 0.5 * value
    cubic = 0.0
    for a, b, c in combinations_with_replacement(range(d), 3):
        value, scale = commutator_on(u[a] * u[b] * u[c])
        cubic = max(cubic, abs(value) / scale)
    return CommutatorDecomposition(
        point=tuple(float(x) for x in point), Q=Q, V=V, cubic_residual=cubic
    )


@dataclass(frozen=True)
class PhaseSpacePoint:
    """A chart point x with a momentum covector p."""

    x: tuple
    p: tuple

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(c) for c in self.x))
        object.__setattr__(self, "p", tuple(float(c) for c in self.p))
        if len(self.x) != len(self.p):
            raise ValueError(
                f"x has {len(self.x)} components but p has {len(self.p)}"
            )
        if not all(np.isfinite(self.x)) or not all(np.isfinite(self.p)):
            raise ValueError(f"non-finite phase-space point {self}")


def _structure_values(pair: ProjectivePair, x):
    """g, and the t-coefficients of S(t), as plain float matrices at x."""
    gv = pair.g.values(x)
    gbarv = pair.gbar.values(x)
    d = pair.dim
    ratio = abs(np.linalg.det(gbarv) / np.linalg.det(gv)) ** (1.0 / (d + 1))
    L = ratio * np.linalg.solve(gbarv, gv)
    S = [None] * d
    M = np.eye(d)
    S[d - 1] = M
    for k in range(1, d):
        LM = L @ M
        M = LM - (np.trace(LM) / k) * np.eye(d)
        S[d - 1 - k] = M
    return gv, S


def _S_at(S, t: float) -> np.ndarray:
    St = np.zeros_like(S[0])
    power = 1.0
    for Sl in S:
        St = St + power * Sl
        power *= t
    return St


def integral_value(pair: ProjectivePair, t: float, phi: PhaseSpacePoint) -> float:
    """The classical integral I_t = (K^(t))^{ij} p_i p_j at a phase point.

    With both indices raised, (K^(t))^{ij} = S(t)^i_r g^{rj}; the value is
    quadratic in p and polynomial of degree n-1 in t.
    """
    gv, S = _structure_values(pair, phi.x)
    A = _S_at(S, t) @ np.linalg.inv(gv)
    p = np.asarray(phi.p)
    return float(p @ A @ p)


def _integral_coefficient_fields(pair: ProjectivePair, x):
    """Values and first x-derivatives of every A_l = S_l g^{-1} at x."""
    frame = pair.frame(tuple(x), 1)
    d = pair.dim
    S_coeffs = frame.benenti.S_coeffs
    ginv = frame.g_inv
    vals = np.empty((d, d, d))
    derivs = np.empty((d, d, d, d))  # [l, s, i, j] = d_s A_l^{ij}
    for l, S in enumerate(S_coeffs):
        A = _matmul(S.comps, ginv.comps)
        for i in range(d):
            for j in range(d):
                vals[l, i, j] = A[i, j].value
                derivs[l, :, i, j] = A[i, j].coeffs[1 : 1 + d]
    return vals, derivs


def integral_field(pair: ProjectivePair, t: float):
    """x -> (A(t) values, d_s A(t) values) for the family's integral I_t."""

    def field(x):
        vals, derivs = _integral_coefficient_fields(pair, x)
        tp = t ** np.arange(pair.dim)
        return (
            np.einsum("l,lij->ij", tp, vals),
            np.einsum("l,lsij->sij", tp, derivs),
        )

    return field


def expression_quadratic_field(coordinates: Sequence[str], components):
    """x -> (values, derivatives) of a quadratic form given as expressions.

    For ad-hoc integrals F(x, p) = A^{ij}(x) p_i p_j that do not come from a
    metric pair, e.g. non-conserved controls.
    """
    coords = tuple(coordinates)
    d = len(coords)
    if len(components) != d or any(len(row) != d for row in components):
        raise ValueError(f"coefficient matrix must be {d}x{d}")
    parsed = [[expr.parse(str(c), coords) for c in row] for row in components]

    def field(x):
        seeds = jets.seed_coordinates(x, 1)
        assignment = dict(zip(coords, seeds))
        vals = np.empty((d, d))
        derivs = np.empty((d, d, d))
        for i in range(d):
            for j in range(d):
                jet = expr.evaluate(parsed[i][j], assignment)
                vals[i, j] = jet.value
                derivs[:, i, j] = jet.coeffs[1 : 1 + d]
        return vals, derivs

    return field


def _bracket_terms(field_t, field_s, phi: PhaseSpacePoint):
    At, dAt = field_t(phi.x)
    As, dAs = field_s(phi.x)
    p = np.asarray(phi.p)
    dIt_dp = 2.0 * At @ p
    dIs_dp = 2.0 * As @ p
    dIt_dx = np.einsum("sij,i,j->s", dAt, p, p)
    dIs_dx = np.einsum("sij,i,j->s", dAs, p, p)
    return dIt_dp, dIt_dx, dIs_dp, dIs_dx


def quadratic_bracket(field_t, field_s, phi: PhaseSpacePoint) -> float:
    """{F, G} for two quadratic-in-p functions given by coefficient fields."""
    dIt_dp, dIt_dx, dIs_dp, dIs_dx = _bracket_terms(field_t, field_s, phi)
    return float(dIt_dp @ dIs_dx - dIt_dx @ dIs_dp)


def poisson_bracket(pair: ProjectivePair, t: float, s: float,
                    phi: PhaseSpacePoint) -> float:
    """{I_t, I_s} = sum_i dI_t/dp_i dI_s/dx^i - dI_t/dx^i dI_s/dp_i.

    The x-derivatives come from order-1 jets of the coefficient fields; the
    p-derivatives are analytic (I is an explicit quadratic in p).
    """
    return quadratic_bracket(
        integral_field(pair, t), integral_field(pair, s), phi
    )


def poisson_residual(pair: ProjectivePair, t: float, s: float,
                     phi: PhaseSpacePoint) -> float:
    """|{I_t, I_s}| over max(1, size of either term), cancellation-proof."""
    dIt_dp, dIt_dx, dIs_dp, dIs_dx = _bracket_terms(
        integral_field(pair, t), integral_field(pair, s), phi
    )
    value = float(dIt_dp @ dIs_dx - dIt_dx @ dIs_dp)
    scale = max(
        1.0,
        float(np.sum(np.abs(dIt_dp * dIs_dx))),
        float(np.sum(np.abs(dIt_dx * dIs_dp))),
    )
    return abs(value) / scale


@dataclass(frozen=True)
class DriftResult:
    """Conservation report for one trajectory."""

    max_drift: float
    exited: bool
    exit_time: float | None
    steps: int


def geodesic_drift(pair: ProjectivePair, t: float, phi0: PhaseSpacePoint,
                   horizon: float, step: float) -> DriftResult:
    """Max relative drift of I_t along the g-geodesic through phi0.

    Integrates x'' + Gamma(x') x' = 0 with classical fixed-step RK4 (global
    error O(step^4)) and tracks |I_t - I_t(0)| / max(1, |I_t(0)|).
    Integration stops at the domain boundary; the result records the exit.
    """

    def form(x):
        gv, S = _structure_values(pair, x)
        return gv @ _S_at(S, t)  # K^(t)_ab, to contract with velocities

    return geodesic_form_drift(pair, form, phi0, horizon, step)


def geodesic_form_drift(pair: ProjectivePair, form, phi0: PhaseSpacePoint,
                        horizon: float, step: float) -> DriftResult:
    """Drift of an arbitrary quadratic form K_ab(x) v^a v^b along geodesics.

    ``form`` maps a chart point to the (0,2) component matrix.  This is the
    engine behind geodesic_drift; non-conserved forms make a positive
    control for the convergence harness.
    """
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    if horizon <= 0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    x = np.asarray(phi0.x, dtype=float)
    g0 = pair.g.values(x)
    v = np.linalg.solve(g0, np.asarray(phi0.p, dtype=float))

    def acceleration(y):
        gamma = christoffel_values(pair.g, y[:pair.dim])
        vel = y[pair.dim:]
        acc = -np.einsum("ijk,j,k->i", gamma, vel, vel)
        return np.concatenate([vel, acc])

    def invariant(y):
        return float(y[pair.dim:] @ form(y[:pair.dim]) @ y[pair.dim:])

    y = np.concatenate([x, v])
    i0 = invariant(y)
    denom = max(1.0, abs(i0))
    drift = 0.0
    steps = int(np.ceil(horizon / step))
    tau = 0.0
    for n in range(steps):
        h = min(step, horizon - tau)
        try:
            k1 = acceleration(y)
            k2 = acceleration(y + 0.5 * h * k1)
            k3 = acceleration(y + 0.5 * h * k2)
            k4 = acceleration(y + h * k3)
            y_next = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        except Exception:
            # a stage left the metric's good region; treat as a domain exit
            return DriftResult(drift, True, tau, n)
        if not pair.contains(y_next[:pair.dim]):
            return DriftResult(drift, True, tau, n)
        y = y_next
        tau += h
        drift = max(drift, abs(invariant(y) - i0) / denom)
    return DriftResult(drift, False, None, steps)
