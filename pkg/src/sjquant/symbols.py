"""Classical observables: polynomial, Gaussian and plane-wave symbols.

Polynomials live in the complex mode coordinates ``z^i`` and ``conj(z^i)``.
A term is keyed by ``(m, n)``, two exponent tuples, for ``z^m conj(z)^n``.
Coefficients may be Python floats/complex or :class:`fractions.Fraction`;
with Fraction coefficients and a Fraction ``hbar`` every operation below is
exact, which the associativity tests rely on.
"""

from __future__ import annotations

import itertools
import json
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping

import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy.optimize import minimize

from .errors import MalformedInput, ModeMismatch
from .sj import Covector

Key = tuple[tuple[int, ...], tuple[int, ...]]


def _falling(a: int, k: int) -> int:
    return math.perm(a, k)


def _multi_range(bound: Iterable[int]):
    return itertools.product(*(range(b + 1) for b in bound))


class PolynomialSymbol:
    """Polynomial in ``z`` and ``conj(z)`` with complex (or rational) coefficients."""

    __slots__ = ("modes", "terms")

    def __init__(self, modes: int, terms: Mapping[Key, object] | None = None):
        if modes < 1:
            raise ValueError("need at least one mode")
        self.modes = modes
        clean: dict[Key, object] = {}
        for (m, n), c in (terms or {}).items():
            m, n = tuple(int(x) for x in m), tuple(int(x) for x in n)
            if len(m) != modes or len(n) != modes:
                raise ModeMismatch(f"exponent tuples {m}, {n} do not match {modes} modes")
            if min(m + n) < 0:
                raise ValueError("negative exponent")
            if c != 0:
                clean[(m, n)] = clean.get((m, n), 0) + c
                if clean[(m, n)] == 0:
                    del clean[(m, n)]
        self.terms = clean

    # construction helpers

    @classmethod
    def constant(cls, modes: int, c=1) -> "PolynomialSymbol":
        zero = (0,) * modes
        return cls(modes, {(zero, zero): c})

    @classmethod
    def monomial(cls, m, n, c=1) -> "PolynomialSymbol":
        return cls(len(m), {(tuple(m), tuple(n)): c})

    @classmethod
    def z(cls, i: int, modes: int = 1) -> "PolynomialSymbol":
        """Holomorphic coordinate ``z^i`` (zero-based mode index)."""
        m = [0] * modes
        m[i] = 1
        return cls.monomial(m, [0] * modes)

    @classmethod
    def zbar(cls, i: int, modes: int = 1) -> "PolynomialSymbol":
        n = [0] * modes
        n[i] = 1
        return cls.monomial([0] * modes, n)

    @classmethod
    def random(cls, rng: np.random.Generator, modes: int, degree: int, density: float = 0.6) -> "PolynomialSymbol":
        """Random complex polynomial of total degree at most ``degree``."""
        terms = {}
        for key in _keys_up_to(modes, degree):
            if rng.random() < density:
                terms[key] = complex(rng.standard_normal(), rng.standard_normal())
        return cls(modes, terms)

    # algebra

    def _check(self, other: "PolynomialSymbol"):
        if self.modes != other.modes:
            raise ModeMismatch(f"{self.modes} vs {other.modes} modes")

    def _coerce(self, other) -> "PolynomialSymbol":
        if isinstance(other, PolynomialSymbol):
            self._check(other)
            return other
        return PolynomialSymbol.constant(self.modes, other)

    def __add__(self, other) -> "PolynomialSymbol":
        other = self._coerce(other)
        terms = dict(self.terms)
        for k, c in other.terms.items():
            terms[k] = terms.get(k, 0) + c
        return PolynomialSymbol(self.modes, terms)

    __radd__ = __add__

    def __neg__(self) -> "PolynomialSymbol":
        return PolynomialSymbol(self.modes, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other) -> "PolynomialSymbol":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "PolynomialSymbol":
        return (-self) + other

    def __mul__(self, other) -> "PolynomialSymbol":
        if not isinstance(other, PolynomialSymbol):
            return PolynomialSymbol(self.modes, {k: c * other for k, c in self.terms.items()})
        self._check(other)
        terms: dict[Key, object] = {}
        for (m1, n1), c1 in self.terms.items():
            for (m2, n2), c2 in other.terms.items():
                key = (_add(m1, m2), _add(n1, n2))
                terms[key] = terms.get(key, 0) + c1 * c2
        return PolynomialSymbol(self.modes, terms)

    def __rmul__(self, other) -> "PolynomialSymbol":
        return self * other

    def __pow__(self, k: int) -> "PolynomialSymbol":
        out = PolynomialSymbol.constant(self.modes)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, PolynomialSymbol):
            return NotImplemented
        return self.modes == other.modes and self.terms == other.terms

    def __hash__(self):
        return hash((self.modes, frozenset(self.terms.items())))

    def conj(self) -> "PolynomialSymbol":
        """Complex conjugate function: swaps the roles of ``z`` and ``conj(z)``."""
        return PolynomialSymbol(self.modes, {(n, m): _conj(c) for (m, n), c in self.terms.items()})

    # calculus

    def d_z(self, i: int) -> "PolynomialSymbol":
        terms = {}
        for (m, n), c in self.terms.items():
            if m[i]:
                terms[(_bump(m, i, -1), n)] = c * m[i]
        return PolynomialSymbol(self.modes, terms)

    def d_zbar(self, i: int) -> "PolynomialSymbol":
        terms = {}
        for (m, n), c in self.terms.items():
            if n[i]:
                terms[(m, _bump(n, i, -1))] = c * n[i]
        return PolynomialSymbol(self.modes, terms)

    def mixed_laplacian(self) -> "PolynomialSymbol":
        """``sum_i d/dz^i d/dconj(z)^i``."""
        out = PolynomialSymbol(self.modes)
        for i in range(self.modes):
            out = out + self.d_z(i).d_zbar(i)
        return out

    # inspection

    @property
    def degree(self) -> int:
        return max((sum(m) + sum(n) for m, n in self.terms), default=0)

    def is_zero(self) -> bool:
        return not self.terms

    def coefficient(self, m, n):
        return self.terms.get((tuple(m), tuple(n)), 0)

    def max_abs_diff(self, other: "PolynomialSymbol") -> float:
        self._check(other)
        keys = set(self.terms) | set(other.terms)
        return max((abs(complex(self.coefficient(*k)) - complex(other.coefficient(*k))) for k in keys), default=0.0)

    def __call__(self, z) -> complex:
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        if z.shape[0] != self.modes:
            raise ModeMismatch(f"point has {z.shape[0]} coordinates, symbol has {self.modes} modes")
        zc = z.conj()
        total = 0j
        for (m, n), c in self.terms.items():
            total += complex(c) * np.prod(z ** np.array(m)) * np.prod(zc ** np.array(n))
        return complex(total)

    def to_float(self) -> "PolynomialSymbol":
        return PolynomialSymbol(self.modes, {k: complex(c) for k, c in self.terms.items()})

    # serialisation

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for (m, n), c in sorted(self.terms.items()):
            factors = [_format_coeff(c)]
            for i, e in enumerate(m):
                if e:
                    factors.append(f"z{i + 1}" + (f"^{e}" if e > 1 else ""))
            for i, e in enumerate(n):
                if e:
                    factors.append(f"zb{i + 1}" + (f"^{e}" if e > 1 else ""))
            parts.append("*".join(factors))
        return " + ".join(parts)

    def __repr__(self) -> str:
        return f"PolynomialSymbol({self.modes}, '{self}')"

    def to_json(self) -> dict:
        return {
            "modes": self.modes,
            "terms": [
                {"m": list(m), "n": list(n), "re": complex(c).real, "im": complex(c).imag}
                for (m, n), c in sorted(self.terms.items())
            ],
        }

    @classmethod
    def from_json(cls, data) -> "PolynomialSymbol":
        if isinstance(data, str):
            data = json.loads(data)
        try:
            terms_in = data["terms"]
            modes = data.get("modes") or max((len(t["m"]) for t in terms_in), default=1)
            terms: dict[Key, object] = {}
            for t in terms_in:
                key = (tuple(t["m"]), tuple(t["n"]))
                c = complex(t.get("re", 0.0), t.get("im", 0.0))
                terms[key] = terms.get(key, 0) + (c.real if c.imag == 0 else c)
        except (KeyError, TypeError) as exc:
            raise MalformedInput(f"bad symbol JSON: {exc}") from exc
        return cls(modes, terms)

    @classmethod
    def parse(cls, text: str, modes: int | None = None) -> "PolynomialSymbol":
        return _parse_symbol(text, modes)


def _add(a, b):
    return tuple(x + y for x, y in zip(a, b))


def _bump(a, i, d):
    out = list(a)
    out[i] += d
    return tuple(out)


def _conj(c):
    return c.conjugate() if hasattr(c, "conjugate") else c


def _keys_up_to(modes: int, degree: int):
    for m in itertools.product(range(degree + 1), repeat=modes):
        if sum(m) > degree:
            continue
        for n in itertools.product(range(degree + 1 - sum(m)), repeat=modes):
            if sum(m) + sum(n) <= degree:
                yield (m, n)


def _format_coeff(c) -> str:
    c = complex(c)
    if c.imag == 0:
        return repr(c.real)
    return f"({c.real!r},{c.imag!r})"


_TOKEN = re.compile(
    r"\s*(?:(?P<complex>\(\s*[-+]?[0-9.eE+-]+\s*,\s*[-+]?[0-9.eE+-]+\s*\))"
    r"|(?P<var>zb?)(?P<idx>\d+)"
    r"|(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)"
    r"|(?P<op>[-+*^]))"
)


def _tokenize(text: str):
    pos, out = 0, []
    text = text.strip()
    while pos < len(text):
        mt = _TOKEN.match(text, pos)
        if not mt or mt.end() == pos:
            raise MalformedInput(f"cannot parse symbol near {text[pos:pos + 10]!r}")
        pos = mt.end()
        if mt.group("complex"):
            re_, im_ = mt.group("complex").strip("() ").split(",")
            out.append(("num", complex(float(re_), float(im_))))
        elif mt.group("var"):
            out.append(("var", (mt.group("var") == "zb", int(mt.group("idx")))))
        elif mt.group("num"):
            out.append(("num", float(mt.group("num"))))
        else:
            out.append(("op", mt.group("op")))
        pos = len(text) - len(text[pos:].lstrip()) if pos < len(text) else pos
    return out


def _parse_symbol(text: str, modes: int | None) -> "PolynomialSymbol":
    tokens = _tokenize(text)
    if not tokens:
        raise MalformedInput("empty symbol")
    highest = max((t[1][1] for t in tokens if t[0] == "var"), default=1)
    if min((t[1][1] for t in tokens if t[0] == "var"), default=1) < 1:
        raise MalformedInput("mode indices start at 1")
    modes = modes or highest
    if highest > modes:
        raise ModeMismatch(f"symbol uses mode {highest} but only {modes} modes were given")

    result = PolynomialSymbol(modes)
    i, sign = 0, 1
    expect_term = True
    while i < len(tokens):
        kind, val = tokens[i]
        if kind == "op" and val in "+-" and expect_term:
            sign = -sign if val == "-" else sign
            i += 1
            continue
        if not expect_term:
            if kind == "op" and val in "+-":
                sign = -1 if val == "-" else 1
                expect_term = True
                i += 1
                continue
            raise MalformedInput(f"unexpected token {val!r}")
        coeff: object = sign
        m, n = [0] * modes, [0] * modes
        while True:
            kind, val = tokens[i]
            if kind == "num":
                coeff = coeff * val
                i += 1
            elif kind == "var":
                is_bar, idx = val
                power = 1
                i += 1
                if i + 1 < len(tokens) + 1 and i < len(tokens) and tokens[i] == ("op", "^"):
                    if i + 1 >= len(tokens) or tokens[i + 1][0] != "num" or float(tokens[i + 1][1]) % 1:
                        raise MalformedInput("exponent must be a nonnegative integer")
                    power = int(tokens[i + 1][1])
                    i += 2
                (n if is_bar else m)[idx - 1] += power
            else:
                raise MalformedInput(f"unexpected token {val!r}")
            if i < len(tokens) and tokens[i] == ("op", "*"):
                i += 1
                if i >= len(tokens):
                    raise MalformedInput("dangling '*'")
                continue
            break
        result = result + PolynomialSymbol.monomial(m, n, coeff)
        expect_term, sign = False, 1
    if expect_term:
        raise MalformedInput("dangling sign")
    return result


# Poisson bracket and star products


def poisson_bracket(f: PolynomialSymbol, g: PolynomialSymbol) -> PolynomialSymbol:
    """``{f, g} = i sum_i (df/dz^i dg/dzb^i - dg/dz^i df/dzb^i)``; ``{z, zb} = i``."""
    f._check(g)
    out = PolynomialSymbol(f.modes)
    for i in range(f.modes):
        out = out + f.d_z(i) * g.d_zbar(i) - g.d_z(i) * f.d_zbar(i)
    return out * 1j


def _bidifferential(f: PolynomialSymbol, g: PolynomialSymbol, weight, left_holomorphic: bool) -> PolynomialSymbol:
    """``sum_alpha weight^|alpha| / alpha! (D_L^alpha f)(D_R^alpha g)``.

    ``left_holomorphic`` selects ``D_L = d/dz, D_R = d/dzb``; otherwise the
    roles are swapped.  Terminates on polynomials.
    """
    f._check(g)
    terms: dict[Key, object] = {}
    for (m1, n1), c1 in f.terms.items():
        for (m2, n2), c2 in g.terms.items():
            cap = [min(a, b) for a, b in zip(m1, n2)] if left_holomorphic else [min(a, b) for a, b in zip(n1, m2)]
            for alpha in _multi_range(cap):
                order = sum(alpha)
                num, den = 1, 1
                for i, a in enumerate(alpha):
                    if left_holomorphic:
                        num *= _falling(m1[i], a) * _falling(n2[i], a)
                    else:
                        num *= _falling(n1[i], a) * _falling(m2[i], a)
                    den *= math.factorial(a)
                if left_holomorphic:
                    key = (_add(_sub(m1, alpha), m2), _add(n1, _sub(n2, alpha)))
                else:
                    key = (_add(m1, _sub(m2, alpha)), _add(_sub(n1, alpha), n2))
                c = c1 * c2 * Fraction(num, den) * weight**order
                terms[key] = terms.get(key, 0) + c
    return PolynomialSymbol(f.modes, terms)


def _sub(a, b):
    return tuple(x - y for x, y in zip(a, b))


def star_t(f: PolynomialSymbol, g: PolynomialSymbol, hbar) -> PolynomialSymbol:
    """Quantization star product ``f exp(-hbar <-d_z . d_zb->) g``."""
    return _bidifferential(f, g, -hbar, left_holomorphic=True)


def star_xi(f: PolynomialSymbol, g: PolynomialSymbol, hbar) -> PolynomialSymbol:
    """Dequantization star product ``f exp(+hbar <-d_zb . d_z->) g``."""
    return _bidifferential(f, g, hbar, left_holomorphic=False)


def expansion_coefficients(f: PolynomialSymbol, order: int | None = None) -> list[PolynomialSymbol]:
    """``f_j = (1/j!) (sum_i d_z^i d_zb^i)^j f`` for ``j = 0..order``.

    With ``order=None`` the list runs until the terms vanish, which for a
    polynomial happens after ``degree/2`` steps.
    """
    out = [f]
    cur = f
    j = 0
    while order is None or j < order:
        j += 1
        cur = cur.mixed_laplacian() * Fraction(1, j)
        if cur.is_zero() and order is None:
            break
        out.append(cur)
    return out


def berezin_transform_poly(f: PolynomialSymbol, hbar) -> PolynomialSymbol:
    """Berezin transform of a polynomial, ``sum_j f_j hbar^j`` (finite)."""
    out = PolynomialSymbol(f.modes)
    for j, fj in enumerate(expansion_coefficients(f)):
        out = out + fj * hbar**j
    return out


def gauge_relation_check(f: PolynomialSymbol, g: PolynomialSymbol, hbar) -> float:
    """Coefficient residual of ``B(f *_T g) = B(f) *_Xi B(g)`` with ``B`` the Berezin transform."""
    lhs = berezin_transform_poly(star_t(f, g, hbar), hbar)
    rhs = star_xi(berezin_transform_poly(f, hbar), berezin_transform_poly(g, hbar), hbar)
    return lhs.max_abs_diff(rhs)


# Gaussian and plane-wave symbols


@dataclass(frozen=True)
class GaussianSymbol:
    """``amplitude * prod_i exp(-|z^i|^2 / beta_i)``."""

    variances: tuple[float, ...]
    amplitude: float = 1.0

    def __post_init__(self):
        v = tuple(float(b) for b in np.atleast_1d(self.variances))
        if not v or any(b <= 0 for b in v):
            raise ValueError("variances must be positive")
        object.__setattr__(self, "variances", v)

    @classmethod
    def normalized(cls, variances) -> "GaussianSymbol":
        """Unit-integral Gaussian, amplitude ``prod 1/(2 pi beta_i)``."""
        v = np.atleast_1d(np.asarray(variances, dtype=float))
        return cls(tuple(v), float(np.prod(1.0 / (2 * np.pi * v))))

    @property
    def modes(self) -> int:
        return len(self.variances)

    def __call__(self, z) -> float:
        z = np.asarray(z, dtype=complex)
        if z.shape[-1] != self.modes:
            raise ModeMismatch("point dimension does not match the symbol")
        return self.amplitude * np.exp(-np.sum(np.abs(z) ** 2 / np.array(self.variances), axis=-1))

    def sup_norm(self) -> float:
        return abs(self.amplitude)


def berezin_transform_gaussian(g: GaussianSymbol, hbar: float) -> GaussianSymbol:
    """Closed form: variances grow by ``hbar``, amplitude picks up ``prod beta/(beta+hbar)``."""
    if hbar < 0:
        raise ValueError("hbar must be nonnegative")
    if hbar == 0:
        return g
    b = np.array(g.variances)
    return GaussianSymbol(tuple(b + hbar), g.amplitude * float(np.prod(b / (b + hbar))))


def berezin_kernel(z, hbar: float) -> np.ndarray:
    """``b_hbar(z) = (2 pi hbar)^{-N} exp(-|z|^2/hbar)``; last axis runs over modes."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    n = z.shape[-1]
    return np.exp(-np.sum(np.abs(z) ** 2, axis=-1) / hbar) / (2 * np.pi * hbar) ** n


def berezin_transform_quadrature(f: Callable, modes: int, hbar: float, points, nodes: int = 64) -> np.ndarray:
    """Numerical convolution ``(b_hbar * f)(z)`` by tensor Gauss-Hermite quadrature.

    ``f`` takes an array of points (last axis = modes) and is evaluated at
    ``z - sqrt(hbar) (s + i t)`` for Hermite nodes ``s, t`` in every mode.
    The volume element is ``2 dx dy`` per mode for ``z = x + iy``.
    """
    x, w = hermgauss(nodes)
    shifts_1d = (x[:, None] + 1j * x[None, :]).ravel()
    weights_1d = (w[:, None] * w[None, :]).ravel()
    shifts = np.array(list(itertools.product(shifts_1d, repeat=modes)))
    weights = np.prod(np.array(list(itertools.product(weights_1d, repeat=modes))), axis=1)
    pts = np.atleast_2d(np.asarray(points, dtype=complex))
    if pts.shape[-1] != modes:
        pts = pts.reshape(-1, modes)
    out = np.empty(pts.shape[0], dtype=complex)
    for a, z in enumerate(pts):
        vals = f(z[None, :] - np.sqrt(hbar) * shifts)
        out[a] = np.sum(weights * vals) / np.pi**modes
    return out


@dataclass(frozen=True)
class ExponentialSymbol:
    """Plane wave ``exp(i phi(z))``."""

    phi: Covector

    @property
    def modes(self) -> int:
        return self.phi.modes

    def __call__(self, z) -> complex:
        return complex(np.exp(1j * self.phi(z)))

    def sup_norm(self) -> float:
        return 1.0


# remainder of the exponential series


def exp_remainder(k: int, zeta) -> np.ndarray:
    """``er_k(zeta) = exp(zeta) - sum_{j<=k} zeta^j / j!``, accurate near zero."""
    zeta = np.asarray(zeta, dtype=complex)
    small = np.abs(zeta) < 2.0
    out = np.empty_like(zeta)
    zs = zeta[small]
    term = zs ** (k + 1) / math.factorial(k + 1)
    acc = np.zeros_like(zs)
    for j in range(k + 1, k + 60):
        acc = acc + term
        term = term * zs / (j + 1)
    out[small] = acc
    zl = zeta[~small]
    partial = sum(zl**j / math.factorial(j) for j in range(k + 1))
    out[~small] = np.exp(zl) - partial
    return out


def remainder_ratio(k: int, zeta) -> np.ndarray:
    """``|er_k| / ((1 + e^{Re zeta}) |zeta|^{k+1})``, continuous at zero."""
    zeta = np.asarray(zeta, dtype=complex)
    r = np.abs(zeta)
    out = np.full(zeta.shape, 0.5 / math.factorial(k + 1))
    nz = r > 0
    out[nz] = np.abs(exp_remainder(k, zeta[nz])) / ((1.0 + np.exp(zeta[nz].real)) * r[nz] ** (k + 1))
    return out


@dataclass(frozen=True)
class RemainderBound:
    order: int
    constant: float
    radius: float
    heldout_max_ratio: float
    violations: int

    @property
    def holds(self) -> bool:
        return self.violations == 0


def fit_remainder_constant(k: int, radius: float, extra=None) -> float:
    """Smallest ``C_k`` valid on the disk ``|zeta| <= radius``.

    Maximises the ratio on a polar grid, polishes the best grid point with
    Nelder-Mead inside the disk, and includes any ``extra`` samples.
    """
    radii = np.linspace(0, radius, 241)[1:]
    angles = np.linspace(-np.pi, np.pi, 361)
    grid = (radii[:, None] * np.exp(1j * angles[None, :])).ravel()
    ratios = remainder_ratio(k, grid)
    best = grid[np.argmax(ratios)]

    def neg(p):
        z = complex(p[0], p[1])
        if abs(z) > radius:
            z *= radius / abs(z)
        return -float(remainder_ratio(k, np.array([z]))[0])

    res = minimize(neg, [best.real, best.imag], method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-15})
    cands = [ratios.max(), -res.fun, 0.5 / math.factorial(k + 1)]
    if extra is not None and len(extra):
        cands.append(remainder_ratio(k, np.asarray(extra)).max())
    return float(max(cands))


def exp_remainder_bound_check(k: int, zeta_samples, fit_fraction: float = 0.5) -> RemainderBound:
    """Fit ``C_k`` on part of the samples (plus a dense disk search) and test the rest.

    Samples are split deterministically: even positions fit, odd positions
    are held out.
    """
    if k < 0:
        raise ValueError("order must be nonnegative")
    zs = np.atleast_1d(np.asarray(zeta_samples, dtype=complex))
    fit, held = (zs[0::2], zs[1::2]) if zs.size > 1 else (zs, zs)
    radius = float(max(np.abs(zs).max(), 1e-12))
    c = fit_remainder_constant(k, radius, fit)
    lhs = np.abs(exp_remainder(k, held))
    rhs = c * (1 + np.exp(held.real)) * np.abs(held) ** (k + 1)
    ratio = remainder_ratio(k, held) if held.size else np.zeros(0)
    return RemainderBound(
        order=k,
        constant=c,
        radius=radius,
        heldout_max_ratio=float(ratio.max()) if ratio.size else 0.0,
        violations=int(np.sum(lhs > rhs)),
    )


def star_remainder_exponentials(phi: Covector, phi2: Covector, hbar: float, k: int) -> float:
    """Closed-form ``R_T^k(e^{i phi}, e^{i phi'}, hbar)``.

    ``hbar^{-k} |er_k(zeta)| exp(-(hbar/2)|phi+phi'|^2)`` with
    ``zeta = hbar sum_i phi_i conj(phi'_i)``.
    """
    if hbar <= 0:
        raise ValueError("hbar must be positive")
    zeta = hbar * np.vdot(phi2.components, phi.components)
    er = abs(complex(exp_remainder(k, np.array([zeta]))[0]))
    return er * np.exp(-0.5 * hbar * (phi + phi2).norm2) / hbar**k


def star_remainder_bound(phi: Covector, phi2: Covector, k: int, constant: float) -> float:
    """Upper bound ``2 C_k |sum phi_i conj(phi'_i)|^{k+1}`` on ``R_T^k / hbar``."""
    return 2.0 * constant * abs(np.vdot(phi2.components, phi.components)) ** (k + 1)
