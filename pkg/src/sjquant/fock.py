"""Truncated multi-mode Fock space.

Basis states are multi-indices ``(n_1, ..., n_N)`` with ``n_i <= cutoff``,
enumerated lexicographically, so operators on separate modes combine with
``np.kron`` in mode order.

``raise`` is the creation operator and ``lower`` the annihilation operator.
Quantization sends ``z^m zb^n`` to ``hbar^{(|m|+|n|)/2} lower^n raise^m``
(anti-normal order); dequantization sends ``hbar^{(m+n)/2} raise^m lower^n``
back to ``z^m zb^n`` (normal order).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.stats import poisson

from .errors import (
    DegreeTooHigh,
    MalformedInput,
    ModeMismatch,
    NoClosedForm,
    NotPolynomial,
    ShapeMismatch,
    TruncationTooSmall,
)
from .sj import Covector
from .symbols import ExponentialSymbol, GaussianSymbol, PolynomialSymbol

DEFAULT_TAIL_TOL = 1e-8


@dataclass(frozen=True)
class FockTruncation:
    modes: int
    cutoff: int

    def __post_init__(self):
        if self.modes < 1:
            raise ValueError("need at least one mode")
        if self.cutoff < 1:
            raise ValueError("cutoff must be at least 1")

    @property
    def dim(self) -> int:
        return (self.cutoff + 1) ** self.modes

    @cached_property
    def states(self) -> np.ndarray:
        return np.array(list(itertools.product(range(self.cutoff + 1), repeat=self.modes)), dtype=int).reshape(
            self.dim, self.modes
        )

    def index(self, occupation) -> int:
        occ = tuple(int(x) for x in occupation)
        if len(occ) != self.modes or min(occ) < 0 or max(occ) > self.cutoff:
            raise ValueError(f"occupation {occ} outside the truncation")
        pos = 0
        for n in occ:
            pos = pos * (self.cutoff + 1) + n
        return pos

    def interior(self, depth: int) -> np.ndarray:
        """Positions of states with every ``n_i <= cutoff - depth``."""
        return np.flatnonzero(np.all(self.states <= self.cutoff - depth, axis=1))

    def embed(self, mode_ops: list[np.ndarray]) -> np.ndarray:
        """Tensor product of one ``(cutoff+1)``-square matrix per mode."""
        if len(mode_ops) != self.modes:
            raise ModeMismatch("one matrix per mode is required")
        out = mode_ops[0]
        for m in mode_ops[1:]:
            out = np.kron(out, m)
        return out

    def to_json(self) -> dict:
        return {"modes": self.modes, "cutoff": self.cutoff, "dim": self.dim}


@dataclass(frozen=True)
class FockOperator:
    """Matrix on a truncation, exact on columns with ``n_i <= cutoff - valid_degree``."""

    trunc: FockTruncation
    matrix: np.ndarray = field(repr=False)
    valid_degree: int = 0

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.trunc.dim, self.trunc.dim):
            raise ShapeMismatch(f"matrix shape {m.shape} does not match truncation dimension {self.trunc.dim}")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls, trunc: FockTruncation) -> "FockOperator":
        return cls(trunc, np.eye(trunc.dim), 0)

    @classmethod
    def projector(cls, trunc: FockTruncation, occupation) -> "FockOperator":
        p = np.zeros((trunc.dim, trunc.dim))
        k = trunc.index(occupation)
        p[k, k] = 1.0
        return cls(trunc, p, 0)

    def _same(self, other: "FockOperator"):
        if self.trunc != other.trunc:
            raise ShapeMismatch("operators live on different truncations")

    def __matmul__(self, other: "FockOperator") -> "FockOperator":
        self._same(other)
        return FockOperator(self.trunc, self.matrix @ other.matrix, self.valid_degree + other.valid_degree)

    def __add__(self, other: "FockOperator") -> "FockOperator":
        self._same(other)
        return FockOperator(self.trunc, self.matrix + other.matrix, max(self.valid_degree, other.valid_degree))

    def __sub__(self, other: "FockOperator") -> "FockOperator":
        return self + (-1.0) * other

    def __mul__(self, c) -> "FockOperator":
        return FockOperator(self.trunc, c * self.matrix, self.valid_degree)

    __rmul__ = __mul__

    def adjoint(self) -> "FockOperator":
        return FockOperator(self.trunc, self.matrix.conj().T, self.valid_degree)

    @property
    def interior(self) -> np.ndarray:
        return self.trunc.interior(self.valid_degree)

    def interior_columns(self, depth: int | None = None) -> np.ndarray:
        idx = self.trunc.interior(self.valid_degree if depth is None else depth)
        return self.matrix[:, idx]

    def interior_residual(self, other: "FockOperator", relative: bool = False, columns=None) -> float:
        """Largest entry of ``self - other`` over the jointly valid columns.

        ``columns`` overrides the interior derived from the valid degrees.
        With ``relative=True`` the residual is divided by the largest entry of
        either operand on those columns (floor 1).
        """
        self._same(other)
        if columns is None:
            idx = self.trunc.interior(max(self.valid_degree, other.valid_degree))
        else:
            idx = np.asarray(columns, dtype=int)
        if idx.size == 0:
            raise TruncationTooSmall("interior subspace is empty; raise the cutoff")
        a, b = self.matrix[:, idx], other.matrix[:, idx]
        res = float(np.max(np.abs(a - b)))
        if relative:
            res /= max(1.0, float(np.max(np.abs(a))), float(np.max(np.abs(b))))
        return res

    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 2))

    def interior_norm(self) -> float:
        idx = self.interior
        return float(np.linalg.norm(self.matrix[:, idx], 2)) if idx.size else 0.0

    def vacuum_expectation(self) -> complex:
        return complex(self.matrix[0, 0])

    def to_json(self) -> dict:
        m = self.matrix
        return {
            "trunc": self.trunc.to_json(),
            "valid_degree": self.valid_degree,
            "matrix": [[[float(v.real), float(v.imag)] for v in row] for row in m],
        }

    @classmethod
    def from_json(cls, data) -> "FockOperator":
        if isinstance(data, str):
            data = json.loads(data)
        try:
            trunc = FockTruncation(int(data["trunc"]["modes"]), int(data["trunc"]["cutoff"]))
            arr = np.asarray(data["matrix"], dtype=float)
            matrix = arr[..., 0] + 1j * arr[..., 1]
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise MalformedInput(f"bad operator JSON: {exc}") from exc
        return cls(trunc, matrix, int(data.get("valid_degree", 0)))

    def to_csv(self) -> str:
        """Rows ``i,j,re,im`` for the nonzero entries."""
        lines = ["row,col,re,im"]
        for i, j in zip(*np.nonzero(self.matrix)):
            v = self.matrix[i, j]
            lines.append(f"{i},{j},{v.real!r},{v.imag!r}")
        return "\n".join(lines) + "\n"


def _lower_1d(cutoff: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, cutoff + 1, dtype=float)), 1)


def build_ladders(t: FockTruncation) -> tuple[list[FockOperator], list[FockOperator]]:
    """Creation and annihilation operators for every mode (valid degree 1)."""
    low = _lower_1d(t.cutoff)
    eye = np.eye(t.cutoff + 1)
    raises, lowers = [], []
    for i in range(t.modes):
        ops = [eye] * t.modes
        ops[i] = low
        lo = t.embed(ops)
        lowers.append(FockOperator(t, lo, 1))
        raises.append(FockOperator(t, lo.T.copy(), 1))
    return raises, lowers


class _ModePowers:
    """Cached powers of the single-mode ladder matrices."""

    def __init__(self, cutoff: int):
        self.low = _lower_1d(cutoff)
        self.up = self.low.T
        self.eye = np.eye(cutoff + 1)
        self._lp = {0: self.eye}
        self._rp = {0: self.eye}

    def lower(self, k: int) -> np.ndarray:
        if k not in self._lp:
            self._lp[k] = self.lower(k - 1) @ self.low
        return self._lp[k]

    def raise_(self, k: int) -> np.ndarray:
        if k not in self._rp:
            self._rp[k] = self.raise_(k - 1) @ self.up
        return self._rp[k]


def toeplitz_of_symbol(f: PolynomialSymbol, hbar: float, t: FockTruncation) -> FockOperator:
    """Anti-normal ordered quantization of a polynomial symbol."""
    if f.modes != t.modes:
        raise ModeMismatch(f"symbol has {f.modes} modes, truncation {t.modes}")
    d = f.degree
    if d > t.cutoff:
        raise DegreeTooHigh(f"degree {d} exceeds cutoff {t.cutoff}")
    pw = _ModePowers(t.cutoff)
    out = np.zeros((t.dim, t.dim), dtype=complex)
    for (m, n), c in f.terms.items():
        scale = complex(c) * hbar ** ((sum(m) + sum(n)) / 2)
        out += scale * t.embed([pw.lower(ni) @ pw.raise_(mi) for mi, ni in zip(m, n)])
    return FockOperator(t, out, d)


def normal_ordered_operator(coeffs: dict, hbar: float, t: FockTruncation) -> FockOperator:
    """Inverse of dequantization: ``z^m zb^n -> hbar^{(|m|+|n|)/2} raise^m lower^n``."""
    pw = _ModePowers(t.cutoff)
    out = np.zeros((t.dim, t.dim), dtype=complex)
    deg = 0
    for (m, n), c in coeffs.items():
        deg = max(deg, sum(m) + sum(n))
        scale = complex(c) * hbar ** ((sum(m) + sum(n)) / 2)
        out += scale * t.embed([pw.raise_(mi) @ pw.lower(ni) for mi, ni in zip(m, n)])
    return FockOperator(t, out, deg)


def toeplitz_of_gaussian(g: GaussianSymbol, hbar: float, t: FockTruncation) -> FockOperator:
    """Diagonal: ``<n|T|n> = amplitude prod_i (beta_i/(beta_i+hbar))^{n_i+1}``."""
    if g.modes != t.modes:
        raise ModeMismatch("Gaussian and truncation disagree on the number of modes")
    r = np.array(g.variances) / (np.array(g.variances) + hbar)
    diag = g.amplitude * np.prod(r[None, :] ** (t.states + 1), axis=1)
    return FockOperator(t, np.diag(diag), 0)


# reordering of ladder words


def _mode_reorder(m: int, n: int, sign: int) -> list[tuple[int, int, int]]:
    """``lower^m raise^n`` (sign +1) or ``raise^n lower^m`` (sign -1) rewritten.

    Returns ``(weight, n-l, m-l)`` triples for the opposite order.
    """
    return [
        (sign**l * math.factorial(l) * math.comb(m, l) * math.comb(n, l), n - l, m - l) for l in range(min(m, n) + 1)
    ]


def antinormal_to_normal(terms: dict) -> dict:
    """Rewrite ``sum c lower^n raise^m`` (keys ``(m, n)``) as ``sum c' raise^p lower^q``.

    Uses ``lower^n raise^m = sum_l l! C(n,l) C(m,l) raise^{m-l} lower^{n-l}`` per mode.
    """
    out: dict = {}
    for (m, n), c in terms.items():
        per_mode = [_mode_reorder(ni, mi, 1) for mi, ni in zip(m, n)]
        for choice in itertools.product(*per_mode):
            w = math.prod(x[0] for x in choice)
            key = (tuple(x[1] for x in choice), tuple(x[2] for x in choice))
            out[key] = out.get(key, 0) + c * w
    return {k: v for k, v in out.items() if v != 0}


def normal_to_antinormal(terms: dict) -> dict:
    """Inverse rewrite with alternating signs, ``raise^m lower^n -> lower^q raise^p``."""
    out: dict = {}
    for (m, n), c in terms.items():
        per_mode = [_mode_reorder(ni, mi, -1) for mi, ni in zip(m, n)]
        for choice in itertools.product(*per_mode):
            w = math.prod(x[0] for x in choice)
            key = (tuple(x[1] for x in choice), tuple(x[2] for x in choice))
            out[key] = out.get(key, 0) + c * w
    return {k: v for k, v in out.items() if v != 0}


def dequantize_toeplitz_poly(f: PolynomialSymbol, hbar) -> PolynomialSymbol:
    """``Xi(T(f))`` by ladder algebra alone: normal-order ``T(f)`` and read off symbols."""
    out = PolynomialSymbol(f.modes)
    for (m0, n0), c0 in f.terms.items():
        # the anti-normal word carries hbar^{deg/2}, each normal word consumes hbar^{deg'/2}
        for (m, n), w in antinormal_to_normal({(m0, n0): 1}).items():
            shift = (sum(m0) + sum(n0) - sum(m) - sum(n)) // 2
            out = out + PolynomialSymbol.monomial(m, n, c0 * w * hbar**shift)
    return out


# dequantization of matrices


def _coherent_weights(t: FockTruncation, z, hbar: float) -> np.ndarray:
    """Unnormalised ``z^n / (hbar^{|n|/2} sqrt(n!))`` over the basis."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if z.shape[0] != t.modes:
        raise ModeMismatch("point dimension does not match the truncation")
    st = t.states
    fact = np.array([[math.sqrt(math.factorial(k)) for k in row] for row in st])
    return np.prod(z[None, :] ** st / (hbar ** (st / 2) * fact), axis=1)


def dequantize_at(op: FockOperator, hbar: float, z) -> complex:
    """Coherent-state expectation ``Xi(A)(z) = <z|A|z>`` on the truncation."""
    w = _coherent_weights(op.trunc, z, hbar)
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    val = w @ op.matrix @ w.conj()
    return complex(np.exp(-np.sum(np.abs(z) ** 2) / hbar) * val)


def state_value(op: FockOperator) -> complex:
    """``sigma_hbar(A) = Xi(A)(0)``, the vacuum expectation."""
    return op.vacuum_expectation()


def dequantize(op: FockOperator, hbar: float, tol: float = 1e-8, degree: int | None = None) -> PolynomialSymbol:
    """Recover the polynomial symbol of a ladder-polynomial operator.

    Coefficients follow from expanding ``<z|A|z>``:
    ``c_{mn} = hbar^{-(|m|+|n|)/2} sum_l A_{m-l, n-l} (-1)^{|l|} / (l! sqrt((m-l)! (n-l)!))``.
    The result is re-quantized in normal order and compared with ``op`` on the
    interior; a relative residual above ``tol`` raises :class:`NotPolynomial`.
    """
    t = op.trunc
    d = op.valid_degree if degree is None else degree
    if 2 * d > t.cutoff:
        raise TruncationTooSmall(f"cutoff {t.cutoff} too small to recover degree {d}")
    A = op.matrix
    coeffs: dict = {}
    for m in itertools.product(range(d + 1), repeat=t.modes):
        if sum(m) > d:
            continue
        for n in itertools.product(range(d + 1 - sum(m)), repeat=t.modes):
            acc = 0j
            for l in itertools.product(*(range(min(a, b) + 1) for a, b in zip(m, n))):
                ml = tuple(a - b for a, b in zip(m, l))
                nl = tuple(a - b for a, b in zip(n, l))
                w = (-1) ** sum(l) / math.prod(
                    math.factorial(x) * math.sqrt(math.factorial(a) * math.factorial(b)) for x, a, b in zip(l, ml, nl)
                )
                acc += A[t.index(ml), t.index(nl)] * w
            c = acc / hbar ** ((sum(m) + sum(n)) / 2)
            if c != 0:
                coeffs[(m, n)] = c
    rebuilt = normal_ordered_operator(coeffs, hbar, t)
    res = FockOperator(t, op.matrix, d).interior_residual(FockOperator(t, rebuilt.matrix, d), relative=True)
    if res > tol:
        raise NotPolynomial(f"operator is not a ladder polynomial of degree <= {d} (residual {res:.3e})")
    scale = max(1.0, max((abs(c) for c in coeffs.values()), default=0.0))
    return PolynomialSymbol(t.modes, {k: c for k, c in coeffs.items() if abs(c) > 1e-14 * scale})


def dequantize_projector(j, hbar: float) -> Callable:
    """``z -> exp(-|z|^2/hbar) prod_k (|z_k|^2/hbar)^{j_k} / j_k!``."""
    j = np.atleast_1d(np.asarray(j, dtype=int))
    fact = np.array([math.factorial(int(x)) for x in j], dtype=float)

    def xi(z):
        z = np.asarray(z, dtype=complex)
        r2 = np.abs(z) ** 2
        if r2.shape[-1] != j.size:
            raise ModeMismatch("point dimension does not match the projector")
        return np.exp(-r2.sum(axis=-1) / hbar) * np.prod((r2 / hbar) ** j / fact, axis=-1)

    return xi


# Weyl generators


def vacuum_tail(phi: Covector, hbar: float, cutoff: int) -> float:
    """Occupation mass of the displaced vacuum ``W(phi)|0>`` beyond the cutoff.

    Each mode carries a Poisson distribution with mean ``hbar |phi_i|^2``.
    """
    means = hbar * np.abs(phi.components) ** 2
    inside = np.prod([poisson.cdf(cutoff, mu) for mu in means])
    return float(1.0 - inside)


def _mode_weyl(phi_i: complex, hbar: float, cutoff: int) -> np.ndarray:
    low = _lower_1d(cutoff)
    gen = np.sqrt(hbar) * (phi_i * low.T + np.conj(phi_i) * low)
    w, v = np.linalg.eigh(gen)
    return (v * np.exp(1j * w)) @ v.conj().T


def _mode_depth(phi_i: complex, hbar: float, cutoff: int, tol: float) -> int:
    """Smallest depth ``d`` such that columns ``n <= cutoff - d`` match a padded truncation."""
    if phi_i == 0:
        return 0
    w = _mode_weyl(phi_i, hbar, cutoff)
    pad = cutoff + 20
    ref = _mode_weyl(phi_i, hbar, pad)
    err = np.abs(w - ref[: cutoff + 1, : cutoff + 1]).max(axis=0)
    leak = np.linalg.norm(ref[cutoff + 1 :, : cutoff + 1], axis=0)
    bad = np.flatnonzero(np.maximum(err, leak) > tol)
    if bad.size == 0:
        return 0
    return cutoff + 1 - int(bad.min())


def weyl_generator(phi: Covector, hbar: float, t: FockTruncation, tol: float = DEFAULT_TAIL_TOL) -> FockOperator:
    """``exp(i sqrt(hbar) sum_i (phi_i raise_i + conj(phi_i) lower_i))``.

    The generator is Hermitian, so each mode factor is exponentiated through
    its eigendecomposition; modes commute and the result is their tensor
    product.  ``valid_degree`` records how many top occupations per mode are
    affected by the cutoff at tolerance ``tol``.
    """
    if phi.modes != t.modes:
        raise ModeMismatch(f"covector has {phi.modes} modes, truncation {t.modes}")
    tail = vacuum_tail(phi, hbar, t.cutoff)
    if tail > tol:
        raise TruncationTooSmall(f"displaced vacuum leaks {tail:.2e} beyond cutoff {t.cutoff}")
    factors = [_mode_weyl(p, hbar, t.cutoff) for p in phi.components]
    depth = max(_mode_depth(p, hbar, t.cutoff, tol) for p in phi.components)
    if depth > t.cutoff:
        raise TruncationTooSmall("no column of the truncated Weyl operator meets the tolerance")
    return FockOperator(t, t.embed(factors), depth)


def product_interior(left: FockOperator, right: FockOperator, tol: float = DEFAULT_TAIL_TOL) -> np.ndarray:
    """Columns on which ``left @ right`` is trustworthy.

    A column qualifies when it is exact for ``right`` and ``right`` sends less
    than ``tol`` of its norm into states outside the exact columns of ``left``.
    Sharper than adding valid degrees for operators with spreading support.
    """
    left._same(right)
    good_left = np.zeros(left.trunc.dim, dtype=bool)
    good_left[left.interior] = True
    cols = right.interior
    leak = np.linalg.norm(right.matrix[~good_left][:, cols], axis=0)
    return cols[leak <= tol]


def weyl_vacuum_expectation(phi: Covector, hbar: float, cutoff: int, tol: float = DEFAULT_TAIL_TOL) -> complex:
    """``<0|W(phi)|0>`` as a product of single-mode truncated exponentials.

    Equals the vacuum entry of :func:`weyl_generator` without building the
    ``(cutoff+1)^N`` tensor product, so it scales to many modes.
    """
    tail = vacuum_tail(phi, hbar, cutoff)
    if tail > tol:
        raise TruncationTooSmall(f"displaced vacuum leaks {tail:.2e} beyond cutoff {cutoff}")
    return complex(np.prod([_mode_weyl(p, hbar, cutoff)[0, 0] for p in phi.components]))


def toeplitz_exponential(phi: Covector, hbar: float, t: FockTruncation, tol: float = DEFAULT_TAIL_TOL) -> FockOperator:
    """``T(e^{i phi}) = exp(-(hbar/2)|phi|^2) W(phi)``."""
    w = weyl_generator(phi, hbar, t, tol)
    return FockOperator(t, np.exp(-0.5 * hbar * phi.norm2) * w.matrix, w.valid_degree)


def quantize(symbol, hbar: float, t: FockTruncation) -> FockOperator:
    """Toeplitz operator of any supported symbol family."""
    if isinstance(symbol, PolynomialSymbol):
        return toeplitz_of_symbol(symbol, hbar, t)
    if isinstance(symbol, GaussianSymbol):
        return toeplitz_of_gaussian(symbol, hbar, t)
    if isinstance(symbol, ExponentialSymbol):
        return toeplitz_exponential(symbol.phi, hbar, t)
    raise TypeError(f"cannot quantize {type(symbol).__name__}")


# trace pairing


def _gaussian_poly_integral(f: PolynomialSymbol, g: GaussianSymbol) -> complex:
    """``int p(z) g(z) dvol`` with ``dvol = prod 2 dx dy``; only ``m == n`` terms survive."""
    total = 0j
    for (m, n), c in f.terms.items():
        if m != n:
            continue
        total += complex(c) * math.prod(2 * np.pi * math.factorial(k) * b ** (k + 1) for k, b in zip(m, g.variances))
    return g.amplitude * total


@dataclass(frozen=True)
class TracePairing:
    lhs: complex
    rhs: complex

    @property
    def difference(self) -> float:
        return abs(self.lhs - self.rhs)


def trace_pairing_check(op: FockOperator, f, hbar: float) -> TracePairing:
    """Both sides of ``Tr(A T(f)) = (2 pi hbar)^{-N} int Xi(A) f dvol`` for Gaussian ``f``.

    The right side uses the polynomial symbol of ``A`` when it has one (the
    untruncated reading, e.g. ``Xi(1) = 1``); otherwise the coherent-state
    expansion of the matrix, where the angular integral keeps the diagonal.
    """
    t = op.trunc
    if isinstance(f, PolynomialSymbol) and f.is_zero():
        return TracePairing(0j, 0j)
    if not isinstance(f, GaussianSymbol):
        raise NoClosedForm(f"no closed-form integral for {type(f).__name__}")
    if f.modes != t.modes:
        raise ModeMismatch("symbol and operator disagree on the number of modes")
    lhs = complex(np.trace(op.matrix @ toeplitz_of_gaussian(f, hbar, t).matrix))
    pref = (2 * np.pi * hbar) ** (-t.modes)
    try:
        if op.valid_degree == 0 and not np.allclose(op.matrix, op.matrix[0, 0] * np.eye(t.dim)):
            raise NotPolynomial("not a multiple of the identity")
        xi = dequantize(op, hbar)
        rhs = pref * _gaussian_poly_integral(xi, f)
    except (NotPolynomial, TruncationTooSmall):
        b = np.array(f.variances)
        # per mode: int exp(-r^2/hbar - r^2/beta) r^{2n}/(hbar^n n!) dvol = 2 pi / (hbar^n a^{n+1})
        a = 1.0 / hbar + 1.0 / b
        weights = np.prod(2 * np.pi / (hbar ** t.states * a[None, :] ** (t.states + 1)), axis=1)
        rhs = pref * f.amplitude * complex(np.sum(np.diag(op.matrix) * weights))
    return TracePairing(lhs, rhs)
