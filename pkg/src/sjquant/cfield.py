"""Sections over a grid of hbar values and their classical-limit diagnostics."""

from __future__ import annotations

import io
import math
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import MalformedInput, NotExpandable, TruncationTooSmall
from .fock import FockOperator, FockTruncation, dequantize, quantize, weyl_generator
from .sj import Covector
from .symbols import (
    ExponentialSymbol,
    GaussianSymbol,
    PolynomialSymbol,
    berezin_transform_gaussian,
    berezin_transform_poly,
    expansion_coefficients,
)


def thread_count() -> int:
    """Worker cap from ``SJQ_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("SJQ_THREADS", "1")))
    except ValueError:
        return 1


def parallel_map(fn: Callable, items: Sequence) -> list:
    """Order-preserving map, threaded when ``SJQ_THREADS`` > 1."""
    workers = min(thread_count(), max(1, len(items)))
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _parse_number(tok: str) -> float:
    tok = tok.strip()
    m = re.fullmatch(r"([-+]?[0-9.]+)\s*\^\s*([-+]?[0-9.]+)", tok)
    if m:
        return float(m.group(1)) ** float(m.group(2))
    return float(tok)


@dataclass(frozen=True)
class HbarGrid:
    """Strictly decreasing positive values followed by the classical point 0."""

    values: tuple[float, ...]

    def __post_init__(self):
        v = tuple(float(x) for x in self.values)
        if not v or v[-1] != 0.0:
            v = v + (0.0,)
        if len(v) < 2 or any(x < 0 for x in v) or any(a <= b for a, b in zip(v, v[1:])):
            raise MalformedInput("hbar grid needs positive values in strictly decreasing order")
        object.__setattr__(self, "values", v)

    @classmethod
    def geometric(cls, start: float = 1.0, stop: float = 2.0**-16, ratio: float = 2.0) -> "HbarGrid":
        vals, h = [], start
        while h >= stop * (1 - 1e-12):
            vals.append(h)
            h /= ratio
        return cls(tuple(vals))

    @classmethod
    def default(cls) -> "HbarGrid":
        return cls.geometric()

    @classmethod
    def parse(cls, spec: str) -> "HbarGrid":
        """``"1:2^-16"`` (halving), ``"1:2^-16:4"`` (custom ratio) or a comma list."""
        try:
            if ":" in spec:
                parts = spec.split(":")
                if len(parts) not in (2, 3):
                    raise ValueError
                start, stop = _parse_number(parts[0]), _parse_number(parts[1])
                ratio = _parse_number(parts[2]) if len(parts) == 3 else 2.0
                if not (start >= stop > 0 and ratio > 1):
                    raise ValueError
                return cls.geometric(start, stop, ratio)
            return cls(tuple(sorted({_parse_number(p) for p in spec.split(",") if p.strip()}, reverse=True)))
        except ValueError as exc:
            raise MalformedInput(f"cannot parse hbar grid {spec!r}") from exc

    @property
    def positive(self) -> tuple[float, ...]:
        return self.values[:-1]

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class SectionSample:
    """Operators at every positive grid point and the classical observable at 0."""

    kind: str
    symbol: object
    grid: HbarGrid
    trunc: FockTruncation
    operators: dict = field(repr=False)

    def at(self, hbar: float):
        if hbar == 0:
            return self.symbol
        return self.operators[hbar]

    @property
    def modes(self) -> int:
        return self.trunc.modes


def toeplitz_section(f, grid: HbarGrid, trunc: FockTruncation) -> SectionSample:
    """``hbar -> T_hbar(f)`` with ``f`` itself at the classical point."""
    ops = parallel_map(lambda h: quantize(f, h, trunc), grid.positive)
    return SectionSample("toeplitz", f, grid, trunc, dict(zip(grid.positive, ops)))


def weyl_section(phi: Covector, grid: HbarGrid, trunc: FockTruncation) -> SectionSample:
    """``hbar -> W_hbar(phi)`` with ``e^{i phi}`` at the classical point."""
    ops = parallel_map(lambda h: weyl_generator(phi, h, trunc), grid.positive)
    return SectionSample("weyl", ExponentialSymbol(phi), grid, trunc, dict(zip(grid.positive, ops)))


def _disk_sup(f: PolynomialSymbol, radius: float, samples: int | None = None) -> float:
    samples = samples or (201 if f.modes == 1 else 24)
    axes = [np.linspace(-radius, radius, samples)] * (2 * f.modes)
    best = 0.0
    for pt in np.stack(np.meshgrid(*axes), -1).reshape(-1, 2 * f.modes):
        z = pt[0::2] + 1j * pt[1::2]
        if np.sum(np.abs(z) ** 2) <= radius**2:
            best = max(best, abs(f(z)))
    return best


def classical_sup(symbol, radius: float = 1.0) -> float:
    """Sup norm at the classical point; polynomials are sampled on a ball of ``radius``."""
    if isinstance(symbol, PolynomialSymbol):
        return _disk_sup(symbol, radius)
    return float(symbol.sup_norm())


@dataclass(frozen=True)
class GridTable:
    """Rows of ``(hbar, value[, residual])`` plus named diagnostics."""

    name: str
    hbar: tuple[float, ...]
    value: tuple[complex, ...]
    residual: tuple[float, ...] | None = None
    diagnostics: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = ["hbar", "value_re", "value_im"] + (["residual"] if self.residual is not None else [])
        buf.write(",".join(cols) + "\n")
        for i, h in enumerate(self.hbar):
            v = complex(self.value[i])
            row = [repr(float(h)), repr(v.real), repr(v.imag)]
            if self.residual is not None:
                row.append(repr(float(self.residual[i])))
            buf.write(",".join(row) + "\n")
        return buf.getvalue()

    def to_json(self) -> dict:
        out = {
            "name": self.name,
            "hbar": [float(h) for h in self.hbar],
            "value": [[complex(v).real, complex(v).imag] for v in self.value],
            "diagnostics": self.diagnostics,
        }
        if self.residual is not None:
            out["residual"] = [float(r) for r in self.residual]
        return out


def _max_jump(values) -> float:
    v = np.asarray(values, dtype=complex)
    return float(np.max(np.abs(np.diff(v)))) if v.size > 1 else 0.0


def phase_space_norm(op: FockOperator, hbar: float, radius: float) -> float:
    """Norm of ``op`` compressed to the states with ``hbar |n| <= radius^2``.

    These states quantize the ball ``|z| <= radius``; for a polynomial
    Toeplitz operator the compressed norm tends to the sup of ``|f|`` on the
    ball as ``hbar -> 0``.
    """
    t = op.trunc
    top = radius**2 / hbar
    if top > t.cutoff - op.valid_degree:
        raise TruncationTooSmall(f"ball of radius {radius} at hbar={hbar} needs cutoff >= {math.ceil(top) + op.valid_degree}")
    idx = np.flatnonzero(t.states.sum(axis=1) <= top * (1 + 1e-12))
    return float(np.linalg.norm(op.matrix[np.ix_(idx, idx)], 2))


def norm_function(s: SectionSample, radius: float = 1.0) -> GridTable:
    """``n(hbar) = ||s(hbar)||`` over the grid.

    Bounded sections use the full truncated operator norm.  Polynomial
    sections are unbounded, so both sides are taken on the ball
    ``|z| <= radius``: the classical sup there and :func:`phase_space_norm`.
    """
    poly = isinstance(s.symbol, PolynomialSymbol) and s.symbol.degree > 0

    def one(h):
        op = s.at(h)
        if poly:
            return phase_space_norm(op, h, radius)
        return op.interior_norm() if op.valid_degree > 0 else op.norm()

    vals = parallel_map(one, s.grid.positive) + [classical_sup(s.symbol, radius)]
    return GridTable(
        f"norm:{s.kind}",
        s.grid.values,
        tuple(vals),
        diagnostics={"max_successive_jump": _max_jump(vals), "jump_at_zero": abs(vals[-1] - vals[-2])},
    )


@dataclass(frozen=True)
class ExpansionTable:
    order: int
    coefficients: list
    table: GridTable

    @property
    def decreasing(self) -> bool:
        return bool(self.table.diagnostics["decreasing"])


def _decreasing_with_floor(res: Sequence[float], floors: Sequence[float]) -> bool:
    for a, b, fl in zip(res, res[1:], floors[1:]):
        if b > a * (1 + 1e-9) + fl:
            return False
    return True


def dequantization_expansion(s: SectionSample, k: int, points=None) -> ExpansionTable:
    """Coefficients ``f_0..f_k`` and the residual ``||Xi(s(hbar)) - sum f_j hbar^j|| / hbar^k``.

    Toeplitz sections of polynomials compare symbol coefficients of the
    dequantized operator.  Weyl sections use
    ``w_j = (1/j!) (-|phi|^2/2)^j e^{i phi}`` and compare at the origin, where
    the truncated coherent state is exact.
    """
    if k < 0:
        raise ValueError("order must be nonnegative")
    hs = s.grid.positive
    if s.kind == "toeplitz" and isinstance(s.symbol, PolynomialSymbol):
        coeffs = expansion_coefficients(s.symbol, k)
        coeffs += [PolynomialSymbol(s.symbol.modes)] * (k + 1 - len(coeffs))

        def one(h):
            xi = dequantize(s.at(h), h)
            approx = PolynomialSymbol(s.symbol.modes)
            for j, fj in enumerate(coeffs):
                approx = approx + fj.to_float() * h**j
            return xi.max_abs_diff(approx) / h**k, xi(np.zeros(s.modes))

    elif s.kind == "weyl":
        phi = s.symbol.phi
        a = -0.5 * phi.norm2
        coeffs = [(a**j / math.factorial(j), s.symbol) for j in range(k + 1)]

        def one(h):
            xi0 = s.at(h).vacuum_expectation()
            approx = sum(c * h**j for j, (c, _) in enumerate(coeffs))
            return abs(xi0 - approx) / h**k, xi0

    else:
        raise NotExpandable(f"no dequantization expansion for a {s.kind} section of {type(s.symbol).__name__}")

    rows = parallel_map(one, hs)
    res = [r for r, _ in rows]
    floors = [1e-12 / h**k for h in hs]
    diag = {"decreasing": _decreasing_with_floor(res, floors), "max_residual": float(max(res))}
    table = GridTable(f"expansion:{s.kind}:k={k}", tuple(hs), tuple(v for _, v in rows), tuple(res), diag)
    return ExpansionTable(k, coeffs, table)


def berezin_distance(f: GaussianSymbol, hbar: float) -> float:
    """``sup_z |b_hbar * f - f|`` for two Gaussians, maximised over radii."""
    if hbar == 0:
        return 0.0
    g = berezin_transform_gaussian(f, hbar)
    b0, b1 = np.array(f.variances), np.array(g.variances)

    def diff(r2):
        return f.amplitude * np.exp(-np.sum(r2 / b0)) - g.amplitude * np.exp(-np.sum(r2 / b1))

    best = abs(diff(np.zeros(f.modes)))
    # radial profiles are monotone in each |z_i|^2, scan then polish
    scale = float(np.max(b1))
    for s in np.linspace(0, 20 * scale, 401)[1:]:
        best = max(best, abs(diff(np.full(f.modes, s / f.modes))))
    res = minimize(lambda x: -abs(diff(np.abs(x))), np.full(f.modes, scale), method="Nelder-Mead")
    return float(max(best, -res.fun))


def classical_limit_berezin(f: GaussianSymbol, grid: HbarGrid) -> GridTable:
    """Sup-norm distance between ``f`` and its Berezin transform along the grid."""
    d = [berezin_distance(f, h) for h in grid.values]
    strictly = all(a > b for a, b in zip(d, d[1:]))
    diag = {
        "strictly_decreasing": strictly,
        "ratio_last_to_first": d[-2] / d[0] if d[0] > 0 else 0.0,
        "limit": d[-1],
    }
    return GridTable("berezin-distance", grid.values, tuple(d), diagnostics=diag)


def closed_form_state(symbol, hbar: float, kind: str = "toeplitz") -> complex:
    """``sigma_hbar`` of a section element from closed forms alone."""
    if kind == "weyl" or isinstance(symbol, ExponentialSymbol):
        return complex(np.exp(-0.5 * hbar * symbol.phi.norm2))
    if isinstance(symbol, PolynomialSymbol):
        return berezin_transform_poly(symbol, hbar)(np.zeros(symbol.modes))
    if isinstance(symbol, GaussianSymbol):
        return complex(berezin_transform_gaussian(symbol, hbar)(np.zeros(symbol.modes)))
    raise NotExpandable(f"no closed form for {type(symbol).__name__}")


def state_field(s: SectionSample, tol: float = 1e-8) -> GridTable:
    """``sigma_hbar(s(hbar)) = Xi(s(hbar))(0)``; the classical point evaluates at the origin.

    The residual column is the disagreement with the closed-form path.
    """

    def one(h):
        fock = s.at(h).vacuum_expectation()
        return fock, abs(fock - closed_form_state(s.symbol, h, s.kind))

    rows = parallel_map(one, s.grid.positive)
    sym = s.symbol
    v0 = complex(sym(np.zeros(s.modes))) if not isinstance(sym, ExponentialSymbol) else 1.0 + 0j
    vals = [v for v, _ in rows] + [v0]
    res = [r for _, r in rows] + [0.0]
    diag = {
        "max_path_disagreement": float(max(res)),
        "paths_agree": bool(max(res) <= tol),
        "jump_at_zero": abs(vals[-1] - vals[-2]),
    }
    return GridTable(f"state:{s.kind}", s.grid.values, tuple(vals), tuple(res), diag)
