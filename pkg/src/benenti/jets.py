"""Truncated multivariate Taylor ("jet") arithmetic.

A jet of order ``m`` in ``n`` variables stores the Taylor coefficients
``c_alpha = (d^alpha f)(p) / alpha!`` of a scalar function at a base point,
for every multi-index ``alpha`` with ``|alpha| <= m``.  Arithmetic on jets is
exact up to the truncation order, so jets replace symbolic differentiation
everywhere derivatives of metric components or test functions are needed.

Coefficients are kept in a dense float64 vector in graded-lexicographic
multi-index order (sorted by total degree, then by exponent tuple in
descending lexicographic order).  That ordering makes the coefficient vector
of a lower-order jet a prefix of the higher-order one, so truncation is a
slice.  Index bookkeeping (multi-index lists, multiplication tables,
differentiation maps) is precomputed once per ``(nvars, order)`` and cached;
the intended regime is ``nvars <= 4`` and ``order <= 6`` where the dense
tables stay tiny.

Jets are immutable values and all operations are pure.
"""

from __future__ import annotations

import functools
import math
from typing import Iterable, Sequence

import numpy as np

from .errors import OrderExhaustedError, SingularInputError

MultiIndex = tuple  # tuple[int, ...], one non-negative exponent per variable


def multi_indices(nvars: int, order: int) -> list[MultiIndex]:
    """All multi-indices with ``|alpha| <= order`` in graded-lex order."""
    if nvars < 1:
        raise ValueError("nvars must be >= 1")
    if order < 0:
        raise ValueError("order must be >= 0")

    def degree_block(total: int, k: int):
        if k == 1:
            yield (total,)
            return
        for head in range(total, -1, -1):
            for tail in degree_block(total - head, k - 1):
                yield (head,) + tail

    out: list[MultiIndex] = []
    for d in range(order + 1):
        out.extend(degree_block(d, nvars))
    return out


class _Space:
    """Cached index tables for jets of a fixed (nvars, order)."""

    __slots__ = (
        "nvars", "order", "indices", "position", "ncoeffs",
        "_mul", "_diff", "factorials",
    )

    def __init__(self, nvars: int, order: int):
        self.nvars = nvars
        self.order = order
        self.indices = multi_indices(nvars, order)
        self.position = {a: i for i, a in enumerate(self.indices)}
        self.ncoeffs = len(self.indices)
        # Convolution table: all (i, j, k) with index_i + index_j = index_k.
        ii, jj, kk = [], [], []
        for i, a in enumerate(self.indices):
            da = sum(a)
            for j, b in enumerate(self.indices):
                if da + sum(b) > order:
                    continue
                s = tuple(x + y for x, y in zip(a, b))
                ii.append(i)
                jj.append(j)
                kk.append(self.position[s])
        self._mul = (np.asarray(ii), np.asarray(jj), np.asarray(kk))
        self._diff = None
        self.factorials = np.array(
            [math.prod(math.factorial(e) for e in a) for a in self.indices]
        )

    def diff_tables(self):
        """Per-variable (source positions, factors) mapping coefficients of a
        jet to those of its partial derivative one order down."""
        if self._diff is None:
            lower = _space(self.nvars, self.order - 1)
            tabs = []
            for v in range(self.nvars):
                src = np.empty(lower.ncoeffs, dtype=np.intp)
                fac = np.empty(lower.ncoeffs)
                for t, beta in enumerate(lower.indices):
                    shifted = beta[:v] + (beta[v] + 1,) + beta[v + 1:]
                    src[t] = self.position[shifted]
                    fac[t] = beta[v] + 1
                tabs.append((src, fac))
            self._diff = tabs
        return self._diff


@functools.lru_cache(maxsize=None)
def _space(nvars: int, order: int) -> _Space:
    return _Space(nvars, order)


class Jet:
    """A truncated Taylor expansion at a base point.

    The public constructor accepts coefficients either as a mapping from
    multi-index tuples to floats (missing entries are zero) or as a dense
    sequence in graded-lex order.
    """

    __slots__ = ("space", "coeffs")

    def __init__(self, nvars: int, order: int, coeffs=None):
        sp = _space(nvars, order)
        vec = np.zeros(sp.ncoeffs)
        if coeffs is not None:
            if isinstance(coeffs, dict):
                for alpha, c in coeffs.items():
                    alpha = tuple(alpha)
                    if alpha not in sp.position:
                        raise ValueError(f"multi-index {alpha} out of range")
                    vec[sp.position[alpha]] = c
            else:
                arr = np.asarray(coeffs, dtype=float)
                if arr.shape != (sp.ncoeffs,):
                    raise ValueError(
                        f"expected {sp.ncoeffs} coefficients, got {arr.shape}"
                    )
                vec = arr.copy()
        self.space = sp
        self.coeffs = vec

    @classmethod
    def _new(cls, space: _Space, coeffs: np.ndarray) -> "Jet":
        j = object.__new__(cls)
        j.space = space
        j.coeffs = coeffs
        return j

    @classmethod
    def constant(cls, value: float, nvars: int, order: int) -> "Jet":
        sp = _space(nvars, order)
        vec = np.zeros(sp.ncoeffs)
        vec[0] = value
        return cls._new(sp, vec)

    @property
    def nvars(self) -> int:
        return self.space.nvars

    @property
    def order(self) -> int:
        return self.space.order

    @property
    def value(self) -> float:
        """The constant term, i.e. the function value at the base point."""
        return float(self.coeffs[0])

    def coefficient(self, alpha: Iterable[int]) -> float:
        return float(self.coeffs[self.space.position[tuple(alpha)]])

    def __repr__(self):
        terms = ", ".join(
            f"{a}: {c:.6g}"
            for a, c in zip(self.space.indices, self.coeffs)
            if c != 0.0
        )
        return f"Jet(nvars={self.nvars}, order={self.order}, {{{terms or '0'}}})"

    # -- arithmetic ---------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.space is not self.space:
                raise ValueError(
                    "jets must share nvars and order: "
                    f"({self.nvars},{self.order}) vs ({other.nvars},{other.order})"
                )
            return other
        if isinstance(other, (int, float, np.floating, np.integer)):
            vec = np.zeros(self.space.ncoeffs)
            vec[0] = other
            return Jet._new(self.space, vec)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Jet._new(self.space, self.coeffs + o.coeffs)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Jet._new(self.space, self.coeffs - o.coeffs)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Jet._new(self.space, o.coeffs - self.coeffs)

    def __neg__(self):
        return Jet._new(self.space, -self.coeffs)

    def __mul__(self, other):
        if isinstance(other, Jet):
            if other.space is not self.space:
                raise ValueError(
                    "jets must share nvars and order: "
                    f"({self.nvars},{self.order}) vs ({other.nvars},{other.order})"
                )
            ii, jj, kk = self.space._mul
            return Jet._new(
                self.space,
                np.bincount(kk, self.coeffs[ii] * other.coeffs[jj],
                            minlength=self.space.ncoeffs),
            )
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Jet._new(self.space, self.coeffs * float(other))
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * reciprocal(other)
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Jet._new(self.space, self.coeffs / float(other))
        return NotImplemented

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o * reciprocal(self)

    def __pow__(self, exponent):
        return power(self, exponent)


def seed_coordinates(point: Sequence[float], order: int) -> list[Jet]:
    """Coordinate jets at ``point``: constant term ``point[i]``, unit linear
    term in slot ``i``.  Everything else is built from these by arithmetic."""
    pt = np.asarray(point, dtype=float)
    if pt.ndim != 1 or pt.size < 1:
        raise ValueError("point must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(pt)):
        raise ValueError(f"non-finite coordinate in point {point}")
    if order < 0:
        raise ValueError("order must be >= 0")
    nvars = pt.size
    sp = _space(nvars, order)
    out = []
    for i in range(nvars):
        vec = np.zeros(sp.ncoeffs)
        vec[0] = pt[i]
        if order >= 1:
            e_i = tuple(1 if v == i else 0 for v in range(nvars))
            vec[sp.position[e_i]] = 1.0
        out.append(Jet._new(sp, vec))
    return out


def truncate(f: Jet, order: int) -> Jet:
    """Discard coefficients above ``order`` (graded storage makes this a
    prefix slice)."""
    if order == f.order:
        return f
    if order > f.order or order < 0:
        raise ValueError(f"cannot truncate order-{f.order} jet to order {order}")
    sp = _space(f.nvars, order)
    return Jet._new(sp, f.coeffs[: sp.ncoeffs].copy())


def partial(f: Jet, alpha: Iterable[int]) -> float:
    """The partial derivative ``d^alpha f`` at the base point."""
    alpha = tuple(alpha)
    if len(alpha) != f.nvars:
        raise ValueError(f"multi-index length {len(alpha)} != nvars {f.nvars}")
    if sum(alpha) > f.order:
        raise OrderExhaustedError(
            f"requested |alpha|={sum(alpha)} derivative from an order-{f.order} jet"
        )
    pos = f.space.position[alpha]
    return float(f.coeffs[pos] * f.space.factorials[pos])


def differentiate(f: Jet, i: int) -> Jet:
    """Jet of ``d f / d x_i``, one order lower than ``f``."""
    if f.order < 1:
        raise OrderExhaustedError("cannot differentiate an order-0 jet")
    if not 0 <= i < f.nvars:
        raise ValueError(f"variable index {i} out of range for nvars={f.nvars}")
    src, fac = f.space.diff_tables()[i]
    lower = _space(f.nvars, f.order - 1)
    return Jet._new(lower, f.coeffs[src] * fac)


def gradient(f: Jet) -> list[Jet]:
    return [differentiate(f, i) for i in range(f.nvars)]


# -- analytic functions via Taylor-of-outer composed with the nilpotent part --


def _compose(f: Jet, series: np.ndarray) -> Jet:
    """Evaluate ``sum_k series[k] * (f - f.value)^k`` by Horner."""
    sp = f.space
    w = f.coeffs.copy()
    w[0] = 0.0
    ii, jj, kk = sp._mul
    acc = np.zeros(sp.ncoeffs)
    acc[0] = series[-1]
    for a in series[-2::-1]:
        acc = np.bincount(kk, acc[ii] * w[jj], minlength=sp.ncoeffs)
        acc[0] += a
    return Jet._new(sp, acc)


def reciprocal(f: Jet) -> Jet:
    c0 = f.value
    if c0 == 0.0:
        raise SingularInputError("div", "division by a jet with zero constant term")
    k = np.arange(f.order + 1)
    series = (-1.0) ** k / c0 ** (k + 1)
    return _compose(f, series)


def exp(f: Jet) -> Jet:
    e0 = math.exp(f.value)
    series = np.array([e0 / math.factorial(k) for k in range(f.order + 1)])
    return _compose(f, series)


def log(f: Jet) -> Jet:
    c0 = f.value
    if c0 <= 0.0:
        raise SingularInputError("ln", f"log of non-positive constant term {c0}")
    series = np.empty(f.order + 1)
    series[0] = math.log(c0)
    for k in range(1, f.order + 1):
        series[k] = (-1.0) ** (k - 1) / (k * c0**k)
    return _compose(f, series)


def sin(f: Jet) -> Jet:
    c0 = f.value
    series = np.array(
        [math.sin(c0 + k * math.pi / 2) / math.factorial(k)
         for k in range(f.order + 1)]
    )
    return _compose(f, series)


def cos(f: Jet) -> Jet:
    c0 = f.value
    series = np.array(
        [math.cos(c0 + k * math.pi / 2) / math.factorial(k)
         for k in range(f.order + 1)]
    )
    return _compose(f, series)


def power(f: Jet, exponent: float) -> Jet:
    """``f ** exponent`` for a real exponent.

    Non-negative integer exponents work for any jet (repeated squaring, so
    ``x**2`` is fine at ``x = 0``); other exponents go through the binomial
    series and require a nonzero (negative-integer exponent) or positive
    (fractional exponent) constant term.
    """
    if isinstance(exponent, Jet):
        raise SingularInputError("pow", "exponent must be a real constant")
    e = float(exponent)
    if e.is_integer():
        n = int(e)
        if n >= 0:
            result = Jet.constant(1.0, f.nvars, f.order)
            base = f
            while n:
                if n & 1:
                    result = result * base
                n >>= 1
                if n:
                    base = base * base
            return result
        if f.value == 0.0:
            raise SingularInputError(
                "pow", "negative power of a jet with zero constant term"
            )
    elif f.value <= 0.0:
        raise SingularInputError(
            "pow",
            f"fractional power of non-positive constant term {f.value}",
        )
    c0 = f.value
    series = np.empty(f.order + 1)
    coeff = 1.0
    for k in range(f.order + 1):
        series[k] = coeff * c0 ** (e - k)
        coeff *= (e - k) / (k + 1)
    return _compose(f, series)


def sqrt(f: Jet) -> Jet:
    if f.value <= 0.0:
        raise SingularInputError(
            "sqrt", f"sqrt of non-positive constant term {f.value}"
        )
    return power(f, 0.5)


def absolute(f: Jet) -> Jet:
    """``|f|`` for a jet bounded away from zero: ``sign(c0) * f``."""
    c0 = f.value
    if c0 == 0.0:
        raise SingularInputError("abs", "abs of a jet with zero constant term")
    return f if c0 > 0.0 else -f


_ELEMENTARY = {
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "mul": lambda a, b: a * b,
    "div": lambda a, b: a / b,
    "neg": lambda a: -a,
    "pow": power,
    "sqrt": sqrt,
    "abs": absolute,
    "exp": exp,
    "ln": log,
    "sin": sin,
    "cos": cos,
}


def elementary(tag: str, *operands):
    """Dispatch an elementary operation by tag (see ``_ELEMENTARY`` keys)."""
    try:
        op = _ELEMENTARY[tag]
    except KeyError:
        raise ValueError(f"unknown elementary operation {tag!r}") from None
    return op(*operands)
