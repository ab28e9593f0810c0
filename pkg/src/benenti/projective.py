"""Structure tensors of a projectively equivalent metric pair, and checks.

Given two metrics g, gbar on one chart, this module builds the (1,1) tensor

    L^i_j = |det(gbar)/det(g)|^(1/(n+1)) gbar^{il} g_{lj},

the scalar lam = (1/2) trace L with its differential lam_form, the 1-form
phi_form entering the connection difference, and the one-parameter family of
Killing-candidate tensors

    K^(t)_ij = g_ir S(t)^r_j,     S(t) = adjugate(t Id - L),

as explicit polynomial coefficients in t (degree n-1), obtained by the
Faddeev-LeVerrier recursion in jet arithmetic rather than by sampling t.

The residual checks quantify, at a point, how well the pair satisfies the
identities that characterize projective equivalence:

  * check_projective_equivalence:  nabla_k L_ij = lam_i g_jk + lam_j g_ik
  * check_connection_difference:   gammabar - gamma = delta^i_k phi_j
                                                    + delta^i_j phi_k
  * check_phi_identity:            trace route vs algebraic route to phi
  * check_killing:                 nabla_(i K_jk) = 0
  * check_ricci_commutation:       [Ric_endo, L] = 0
  * check_carter_condition:        div [Ric_endo, S(t)] = 0

All residuals are max-norms normalized by the scale of the terms entering
them, so they are dimensionless and comparable across metrics.

On phi: the 1-form that makes the connection-difference identity hold is
phi_i = -(L^{-1})^s_i lam_s, equivalently phi = -(1/2) d ln|det L|.  The
contraction with L runs the other way in some statements of the identity
(lam_i = -L^s_i phi_s is the inverse-free form); both are verified in the
test suite.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass
from functools import cached_property
from itertools import permutations
from typing import Mapping, Sequence

import numpy as np

from . import jets
from .geometry import (
    JetTensor,
    MetricField,
    christoffel,
    contract,
    covariant_derivative,
    determinant,
    _adjugate,
    inverse_metric,
    ricci,
)

_FRAME_CACHE_SIZE = 128


class ProjectivePair:
    """Two metrics sharing a chart, with an optional sampling domain.

    The pair is just data; whether it is actually projectively equivalent is
    decided numerically by the checks below, never assumed.
    """

    def __init__(
        self,
        g: MetricField,
        gbar: MetricField,
        domain: Mapping[str, Sequence[float]] | None = None,
        name: str | None = None,
        notes: str | None = None,
    ):
        if g.coordinates != gbar.coordinates:
            raise ValueError(
                f"metrics use different charts: {g.coordinates} vs "
                f"{gbar.coordinates}"
            )
        self.g = g
        self.gbar = gbar
        self.dim = g.dim
        self.coordinates = g.coordinates
        self.name = name
        self.notes = notes
        if domain is not None:
            missing = set(self.coordinates) - set(domain)
            if missing:
                raise ValueError(f"domain missing coordinates: {sorted(missing)}")
            clean = {}
            for c in self.coordinates:
                lo, hi = map(float, domain[c])
                if not lo < hi:
                    raise ValueError(f"empty domain interval for {c}: [{lo}, {hi}]")
                clean[c] = (lo, hi)
            self.domain = clean
        else:
            self.domain = None
        self._frames: OrderedDict = OrderedDict()

    def frame(self, point, order: int) -> "PointFrame":
        """Geometric data at (point, order), cached per pair."""
        key = (tuple(float(c) for c in point), int(order))
        hit = self._frames.get(key)
        if hit is not None:
            self._frames.move_to_end(key)
            return hit
        fr = PointFrame(self, key[0], order)
        self._frames[key] = fr
        if len(self._frames) > _FRAME_CACHE_SIZE:
            self._frames.popitem(last=False)
        return fr

    def sample_point(self, rng: np.random.Generator, shrink: float = 0.0):
        """Uniform point in the domain box, optionally shrunk toward center."""
        if self.domain is None:
            raise ValueError("pair has no sampling domain")
        out = []
        for c in self.coordinates:
            lo, hi = self.domain[c]
            pad = shrink * (hi - lo) / 2
            out.append(rng.uniform(lo + pad, hi - pad))
        return tuple(out)

    def contains(self, point) -> bool:
        if self.domain is None:
            return True
        return all(
            self.domain[c][0] <= v <= self.domain[c][1]
            for c, v in zip(self.coordinates, point)
        )

    def __getstate__(self):
        state = self.__dict__.copy()
        state["_frames"] = OrderedDict()  # jets are cheap to rebuild
        return state

    def __repr__(self):
        label = f"{self.name!r}, " if self.name else ""
        return f"ProjectivePair({label}dim={self.dim})"


@dataclass(frozen=True)
class BenentiData:
    """L and everything derived from it at one (point, order).

    K_coeffs[l] is the coefficient of t^l in K^(t)_ij; S_coeffs[l] the
    coefficient of t^l in S(t)^i_j; char_coeffs are the characteristic
    polynomial coefficients of L (det(t Id - L) = t^n + c_{n-1} t^{n-1} +
    ... + c_0) as jets.
    """

    L: JetTensor
    lam: jets.Jet
    lam_form: JetTensor
    phi_form: JetTensor
    S_coeffs: tuple
    K_coeffs: tuple
    char_coeffs: tuple


def _matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.einsum("is,sj->ij", a, b)


def _trace(a: np.ndarray):
    d = a.shape[0]
    acc = a[0, 0]
    for s in range(1, d):
        acc = acc + a[s, s]
    return acc


def _identity_like(sample: jets.Jet, d: int) -> np.ndarray:
    out = np.empty((d, d), dtype=object)
    one = jets.Jet.constant(1.0, sample.nvars, sample.order)
    zero = jets.Jet.constant(0.0, sample.nvars, sample.order)
    for i in range(d):
        for j in range(d):
            out[i, j] = one if i == j else zero
    return out


def adjugate_family(L: JetTensor):
    """Coefficients of adjugate(t Id - L) and of det(t Id - L) in t.

    Faddeev-LeVerrier: M_1 = Id and, for k = 1..n-1,

        c_{n-k}  = -trace(L M_k) / k,
        M_{k+1}  = L M_k + c_{n-k} Id,

    with c_0 = -trace(L M_n)/n.  Then adjugate(t Id - L) = sum_k t^{n-k} M_k,
    so the coefficient of t^l is M_{n-l}.  Everything is exact polynomial
    algebra; no t is ever substituted.
    """
    d = L.dim
    ident = _identity_like(L.comps[0, 0], d)
    S = [None] * d  # S[l] = coefficient of t^l
    char = [None] * (d + 1)
    char[d] = jets.Jet.constant(1.0, L.comps[0, 0].nvars, L.order)
    M = ident
    S[d - 1] = M
    for k in range(1, d):
        LM = _matmul(L.comps, M)
        c = _trace(LM) * (-1.0 / k)
        char[d - k] = c
        M = LM.copy()
        for i in range(d):
            M[i, i] = M[i, i] + c
        S[d - 1 - k] = M
    char[0] = _trace(_matmul(L.comps, M)) * (-1.0 / d)
    S_coeffs = tuple(JetTensor(m, 1, 1) for m in S)
    return S_coeffs, tuple(char)


class PointFrame:
    """Lazily computed jet data of a pair at one point and truncation order.

    Derivatives consume orders: with the metrics at order m, the Christoffel
    symbols live at m-1 and the Ricci tensor at m-2.
    """

    def __init__(self, pair: ProjectivePair, point, order: int):
        if order < 0:
            raise ValueError(f"order must be non-negative, got {order}")
        self.pair = pair
        self.point = tuple(float(c) for c in point)
        self.order = order
        self.dim = pair.dim

    @cached_property
    def g(self) -> JetTensor:
        return self.pair.g.evaluate(self.point, self.order)

    @cached_property
    def gbar(self) -> JetTensor:
        return self.pair.gbar.evaluate(self.point, self.order)

    @cached_property
    def g_inv(self) -> JetTensor:
        return inverse_metric(self.g)

    @cached_property
    def gbar_inv(self) -> JetTensor:
        return inverse_metric(self.gbar)

    @cached_property
    def gamma(self) -> JetTensor:
        return christoffel(self.g, self.g_inv)

    @cached_property
    def gamma_bar(self) -> JetTensor:
        return christoffel(self.gbar, self.gbar_inv)

    @cached_property
    def gamma_trace(self) -> np.ndarray:
        """gamma^s_si as a vector of jets (order m-1); the divergence weight."""
        d = self.dim
        out = np.empty((d,), dtype=object)
        for i in range(d):
            acc = self.gamma.comps[0, 0, i]
            for s in range(1, d):
                acc = acc + self.gamma.comps[s, s, i]
            out[i] = acc
        return out

    @cached_property
    def sqrt_abs_det_g(self) -> jets.Jet:
        return jets.sqrt(jets.absolute(determinant(self.g)))

    @cached_property
    def L(self) -> JetTensor:
        ratio = determinant(self.gbar) * jets.reciprocal(determinant(self.g))
        factor = jets.power(jets.absolute(ratio), 1.0 / (self.dim + 1))
        mixed = _matmul(self.gbar_inv.comps, self.g.comps)
        out = np.empty_like(mixed)
        for idx in np.ndindex(*mixed.shape):
            out[idx] = factor * mixed[idx]
        return JetTensor(out, 1, 1)

    @cached_property
    def benenti(self) -> BenentiData:
        L = self.L
        d = self.dim
        lam = _trace(L.comps) * 0.5
        lam_form = JetTensor(
            np.array([jets.differentiate(lam, i) for i in range(d)], dtype=object),
            0,
            1,
        )
        det_L = determinant(L)
        adj_L = _adjugate(L.comps)
        inv_det = jets.reciprocal(det_L)
        sub = lam_form.comps[0].order  # = order - 1
        phi = np.empty((d,), dtype=object)
        for i in range(d):
            acc = None
            for s in range(d):
                linv_si = jets.truncate(adj_L[s, i] * inv_det, sub)
                term = linv_si * lam_form.comps[s]
                acc = term if acc is None else acc + term
            phi[i] = -acc
        S_coeffs, char_coeffs = adjugate_family(L)
        K_coeffs = []
        for S in S_coeffs:
            K = np.empty((d, d), dtype=object)
            for i in range(d):
                for j in range(d):
                    acc = None
                    for r in range(d):
                        term = self.g.comps[i, r] * S.comps[r, j]
                        acc = term if acc is None else acc + term
                    K[i, j] = acc
            K_coeffs.append(JetTensor(K, 0, 2))
        return BenentiData(
            L=L,
            lam=lam,
            lam_form=lam_form,
            phi_form=JetTensor(phi, 0, 1),
            S_coeffs=S_coeffs,
            K_coeffs=tuple(K_coeffs),
            char_coeffs=char_coeffs,
        )

    @cached_property
    def ricci_tensor(self) -> JetTensor:
        return ricci(self.gamma)

    @cached_property
    def ricci_endo(self) -> JetTensor:
        """Ric raised on the first slot: R^i_j = g^{is} R_sj, order m-2."""
        ric = self.ricci_tensor
        ginv = self.g_inv.truncated(ric.order)
        return JetTensor(_matmul(ginv.comps, ric.comps), 1, 1)

    def S_of_t(self, t: float) -> JetTensor:
        """S(t) assembled from its polynomial coefficients."""
        coeffs = self.benenti.S_coeffs
        acc = coeffs[0].comps
        power = 1.0
        for S in coeffs[1:]:
            power *= t
            acc = acc + S.comps * power
        return JetTensor(acc, 1, 1)

    def K_of_t(self, t: float) -> JetTensor:
        coeffs = self.benenti.K_coeffs
        acc = coeffs[0].comps
        power = 1.0
        for K in coeffs[1:]:
            power *= t
            acc = acc + K.comps * power
        return JetTensor(acc, 0, 2)

    def L_eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.L.value())


def build_L(pair: ProjectivePair, point, order: int) -> JetTensor:
    """The (1,1) structure tensor of the pair at a point, as jets."""
    return pair.frame(point, order).L


def benenti_data(pair: ProjectivePair, point, order: int) -> BenentiData:
    """L, lam, phi and the t-polynomial coefficients of S and K at a point."""
    return pair.frame(point, order).benenti


DEFAULT_T_GRID = (-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 3.0)


def t_grid(pair: ProjectivePair, point, base=DEFAULT_T_GRID) -> tuple:
    """The default t sample grid, minus values within 1e-6 of an eigenvalue
    of L at the point.

    Proximity to the spectrum only degrades the conditioning of eigenvalue
    diagnostics; the polynomial family itself is fine there, so the filter
    is purely cosmetic for reports.
    """
    eigs = pair.frame(point, 0).L_eigenvalues()
    return tuple(
        t for t in base if np.min(np.abs(eigs - t)) > 1e-6
    )


def check_projective_equivalence(pair: ProjectivePair, point, order: int = 2) -> float:
    """Residual of nabla_k L_ij = lam_i g_jk + lam_j g_ik at the point.

    Zero (to rounding) iff the pair is projectively equivalent there; the
    value is normalized by max(1, |nabla L|) so it is scale-free.
    """
    frame = pair.frame(point, order)
    bd = frame.benenti
    d = frame.dim
    # lowered form a_ij = g_is L^s_j
    a = np.empty((d, d), dtype=object)
    for i in range(d):
        for j in range(d):
            acc = None
            for s in range(d):
                term = frame.g.comps[i, s] * bd.L.comps[s, j]
                acc = term if acc is None else acc + term
            a[i, j] = acc
    nabla_a = covariant_derivative(JetTensor(a, 0, 2), frame.gamma)
    lam_v = bd.lam_form.value()
    g_v = frame.g.value()
    nav = nabla_a.value()  # [k, i, j]
    model = np.empty_like(nav)
    for k in range(d):
        for i in range(d):
            for j in range(d):
                model[k, i, j] = lam_v[i] * g_v[j, k] + lam_v[j] * g_v[i, k]
    defect = np.max(np.abs(nav - model))
    return float(defect / max(1.0, np.max(np.abs(nav))))


def check_connection_difference(pair: ProjectivePair, point, order: int = 2) -> float:
    """Residual of gammabar - gamma = delta^i_k phi_j + delta^i_j phi_k."""
    frame = pair.frame(point, order)
    phi_v = frame.benenti.phi_form.value()
    diff = frame.gamma_bar.value() - frame.gamma.value()
    d = frame.dim
    model = np.zeros_like(diff)
    for i in range(d):
        for j in range(d):
            model[i, j, i] += phi_v[j]  # delta^i_k phi_j at k = i
            model[i, i, j] += phi_v[j]  # delta^i_j phi_k at j = i, k = j
    defect = np.max(np.abs(diff - model))
    return float(defect / max(1.0, np.max(np.abs(diff))))


def check_phi_identity(pair: ProjectivePair, point, order: int = 2) -> float:
    """Residual between the two routes to the 1-form phi.

    Tracing the connection difference over its upper and first lower index
    gives gammabar^s_{si} - gamma^s_{si} = (n+1) phi_i; the algebraic route
    is phi_i = -(L^{-1})^s_i lam_s.  Both agree exactly when the pair is
    projectively equivalent and generically disagree otherwise.
    """
    frame = pair.frame(point, order)
    d = frame.dim
    phi_alg = frame.benenti.phi_form.value()
    trace_bar = np.array(
        [sum(frame.gamma_bar.comps[s, s, i].value for s in range(d)) for i in range(d)]
    )
    trace = np.array(
        [sum(frame.gamma.comps[s, s, i].value for s in range(d)) for i in range(d)]
    )
    phi_conn = (trace_bar - trace) / (d + 1)
    defect = np.max(np.abs(phi_conn - phi_alg))
    return float(defect / max(1.0, np.max(np.abs(phi_conn))))


def check_killing(K: JetTensor, gamma: JetTensor) -> float:
    """Residual of the Killing equation nabla_(i K_jk) = 0.

    The symmetrization averages over all six permutations of (i, j, k);
    for symmetric K this equals the cyclic average.  Normalized by
    max(1, |nabla K|).
    """
    if K.rank != (0, 2):
        raise ValueError(f"check_killing needs a (0,2) tensor, got {K.rank}")
    nabla = covariant_derivative(K, gamma).value()  # [k, i, j]
    d = nabla.shape[0]
    sym = np.zeros_like(nabla)
    for perm in permutations(range(3)):
        sym += nabla.transpose(perm)
    sym /= 6.0
    return float(np.max(np.abs(sym)) / max(1.0, np.max(np.abs(nabla))))


def check_killing_tensor(pair: ProjectivePair, t: float, point, order: int = 2) -> float:
    """check_killing applied to the pair's K^(t) at a point."""
    frame = pair.frame(point, order)
    return check_killing(frame.K_of_t(t), frame.gamma)


def check_ricci_commutation(pair: ProjectivePair, point, order: int = 3) -> float:
    """Residual of [R_endo, L] = 0, normalized by max(1, |R| |L|)."""
    frame = pair.frame(point, order)
    r = frame.ricci_endo.value()
    l = frame.L.value()
    comm = r @ l - l @ r
    scale = max(1.0, float(np.max(np.abs(r)) * np.max(np.abs(l))))
    return float(np.max(np.abs(comm)) / scale)


def check_carter_condition(
    pair: ProjectivePair, t: float, point, order: int = 4
) -> float:
    """Residual of nabla_i B^i_j = 0 for B = R_endo S(t) - S(t) R_endo.

    The divergence is computed as d_i B^i_j + gamma^i_is B^s_j
    - gamma^s_ij B^i_s.  Needs order >= 3 (two orders for Ricci, one for
    the divergence).
    """
    if order < 3:
        raise ValueError(f"carter check needs order >= 3, got {order}")
    frame = pair.frame(point, order)
    r = frame.ricci_endo  # order m-2
    s_t = frame.S_of_t(t).truncated(r.order)
    B = JetTensor(
        _matmul(r.comps, s_t.comps) - _matmul(s_t.comps, r.comps), 1, 1
    )
    div = contract(covariant_derivative(B, frame.gamma), 0, 0)
    b_vals = np.abs(B.value())
    db_max = max(
        float(np.max(np.abs(j.coeffs[1 : 1 + frame.dim]))) for j in B.comps.flat
    )
    gamma_max = float(np.max(np.abs(frame.gamma.value())))
    scale = max(1.0, db_max, gamma_max * float(np.max(b_vals)))
    return float(np.max(np.abs(div.value())) / scale)
