"""Check battery shared by the command-line reports.

Every check returns a :class:`Check` with the measured value, the threshold
it is compared against and the verdict.  Thresholds are written for the
default tolerance 1e-10 and scale linearly with ``tol``.
"""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from .cfield import HbarGrid, berezin_distance, classical_limit_berezin, dequantization_expansion, parallel_map, weyl_section
from .fock import (
    FockTruncation,
    product_interior,
    toeplitz_of_symbol,
    weyl_generator,
    weyl_vacuum_expectation,
)
from .kahler import KahlerDecomposition, PauliJordanOperator, laplacian_spectrum, spectra_ab_ba_check
from .sj import (
    Covector,
    QuasiFreeState,
    SJOperator,
    purity_check,
    sj_operator,
    solve_sj_axioms,
    state_on_weyl,
    state_positivity_gram,
)
from .symbols import (
    GaussianSymbol,
    PolynomialSymbol,
    berezin_transform_gaussian,
    berezin_transform_quadrature,
    exp_remainder_bound_check,
    fit_remainder_constant,
    gauge_relation_check,
    star_remainder_bound,
    star_remainder_exponentials,
    star_t,
    star_xi,
)
from .fock import dequantize

DEFAULT_TOL = 1e-10
STATE_TOL = 1e-8


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    threshold: float
    passed: bool
    mode: str = "max"

    def to_json(self) -> dict:
        d = asdict(self)
        d["value"] = float(d["value"])
        d["threshold"] = float(d["threshold"])
        return d


def at_most(name: str, value: float, threshold: float) -> Check:
    return Check(name, float(value), float(threshold), bool(value <= threshold), "max")


def at_least(name: str, value: float, threshold: float) -> Check:
    return Check(name, float(value), float(threshold), bool(value >= threshold), "min")


def flag(name: str, ok: bool) -> Check:
    return Check(name, float(ok), 1.0, bool(ok), "flag")


def _scaled(base: float, tol: float) -> float:
    return base * tol / DEFAULT_TOL


def kahler_checks(k: KahlerDecomposition, tol: float) -> list[Check]:
    return [at_most(f"kahler.{name}", v, _scaled(1e-10, tol)) for name, v in sorted(k.residuals().items())]


def sj_axiom_checks(a: SJOperator, e: PauliJordanOperator, tol: float) -> list[Check]:
    r = a.axiom_residuals(e)
    ne = np.linalg.norm(e.matrix, 2)
    na = np.linalg.norm(a.matrix, 2)
    return [
        at_least("sj.positivity", r["positivity"], -tol),
        at_most("sj.commutator", r["commutator"], _scaled(1e-12, tol) * ne),
        at_most("sj.purity", r["purity"], tol * na**2),
    ]


def sj_uniqueness_check(k: KahlerDecomposition, tol: float) -> Check:
    a = sj_operator(k).matrix
    b = solve_sj_axioms(k.operator).matrix
    return at_most("sj.uniqueness", np.linalg.norm(a - b, 2) / max(1.0, np.linalg.norm(a, 2)), tol)


def purity_checks(k: KahlerDecomposition, hbar: float, tol: float) -> list[Check]:
    s = QuasiFreeState.sorkin_johnston(k, hbar)
    rep = purity_check(s, tol=tol)
    half = purity_check(s.scaled(2.0), tol=tol)
    return [
        at_most("purity.theta_norm_deviation", abs(rep.norm_theta - 1.0), tol),
        at_most("purity.theta_square", rep.square_residual, tol),
        flag("purity.sj_is_pure", rep.is_pure),
        at_most("purity.scaled_norm_deviation", abs(half.norm_theta - 0.5), tol),
        flag("purity.scaled_not_pure", not half.is_pure),
    ]


def brute_force_levels(thetas, hbar, vmax: Fraction) -> list[Fraction]:
    """All values ``sum (2 n_i + 1) theta_i / hbar`` not above ``vmax``, by direct enumeration."""
    th = [Fraction(t) for t in thetas]
    h = Fraction(hbar)
    base = sum(th) / h
    steps = [2 * t / h for t in th]
    caps = [int((vmax - base) / s) if vmax >= base else -1 for s in steps]
    out = []
    if min(caps) < 0:
        return out
    for n in itertools.product(*(range(c + 1) for c in caps)):
        v = base + sum(ni * s for ni, s in zip(n, steps))
        if v <= vmax:
            out.append(v)
    return sorted(out)


def spectrum_checks(k: KahlerDecomposition, grid: HbarGrid, tol: float, count: int = 30) -> list[Check]:
    levels = laplacian_spectrum(k.thetas, 1, count)
    flat = [lv.value for lv in levels for _ in range(lv.multiplicity)]
    ok = True
    if len(k.thetas) <= 8:
        brute = brute_force_levels(k.thetas, 1, levels[-1].value)
        ok = brute[: len(flat)] == flat[: len(brute)] and len(brute) >= len(flat)
    worst = 0.0
    for h in grid.positive:
        low = float(laplacian_spectrum(k.thetas, Fraction(h), 1)[0].value)
        worst = max(worst, abs(low - k.lambda_of(h)) / k.lambda_of(h))
    return [flag("spectrum.matches_enumeration", ok), at_most("spectrum.ground_vs_trace", worst, _scaled(1e-12, tol))]


def random_covectors(k: KahlerDecomposition, rng: np.random.Generator, count: int, scale: float = 1.0) -> list:
    return [Covector.from_real(scale * rng.standard_normal(k.operator.dim), k) for _ in range(count)]


def state_checks(k: KahlerDecomposition, grid: HbarGrid, rng: np.random.Generator, tol: float, cutoff: int) -> list[Check]:
    phis = random_covectors(k, rng, 16, 0.5)
    worst_gram = np.inf
    for h in (1.0, 0.25):
        s = QuasiFreeState.sorkin_johnston(k, h)
        worst_gram = min(worst_gram, state_positivity_gram([p.real for p in phis], s))
    worst = 0.0
    for h in grid.positive:
        s = QuasiFreeState.sorkin_johnston(k, h)
        for p in phis[:4]:
            q = p * (1.0 / max(1.0, np.sqrt(h * p.norm2)))
            fock = weyl_vacuum_expectation(q, h, cutoff)
            worst = max(worst, abs(fock - state_on_weyl(q.real, s)), abs(fock - np.exp(-0.5 * h * q.norm2)))
    return [
        at_least("state.gram_min_eigenvalue", worst_gram, -tol),
        at_most("state.fock_vs_closed_form", worst, _scaled(STATE_TOL, tol)),
    ]


def star_product_checks(modes: int, rng: np.random.Generator, tol: float, cutoff: int = 16, trials: int = 4) -> list[Check]:
    n = min(modes, 2)
    t = FockTruncation(n, cutoff)
    prod_res = deq_res = assoc = 0.0
    for _ in range(trials):
        f, g, h3 = (PolynomialSymbol.random(rng, n, 2) for _ in range(3))
        hb = float(rng.choice([1.0, 0.5, 0.25]))
        tf, tg = toeplitz_of_symbol(f, hb, t), toeplitz_of_symbol(g, hb, t)
        prod_res = max(prod_res, (tf @ tg).interior_residual(toeplitz_of_symbol(star_t(f, g, hb), hb, t)))
        lhs = dequantize(tf @ tg, hb)
        deq_res = max(deq_res, lhs.max_abs_diff(star_xi(dequantize(tf, hb), dequantize(tg, hb), hb)))
        assoc = max(assoc, star_t(star_t(f, g, hb), h3, hb).max_abs_diff(star_t(f, star_t(g, h3, hb), hb)))
    gauge = max(
        gauge_relation_check(PolynomialSymbol.random(rng, n, 3), PolynomialSymbol.random(rng, n, 3), 0.5)
        for _ in range(10)
    )
    return [
        at_most("star.toeplitz_product", prod_res, tol),
        at_most("star.dequantized_product", deq_res, tol),
        at_most("star.associativity", assoc, tol),
        at_most("star.gauge_relation", gauge, tol),
    ]


def berezin_checks(grid: HbarGrid, tol: float) -> list[Check]:
    worst = 0.0
    pts = np.linspace(-3, 3, 13)[:, None] + 0.5j
    for beta in (0.5, 1.0, 2.0):
        g = GaussianSymbol.normalized([beta])
        for h in (0.1, 0.25):
            quad = berezin_transform_quadrature(g, 1, h, pts)
            worst = max(worst, float(np.max(np.abs(quad - berezin_transform_gaussian(g, h)(pts)))))
    unit = GaussianSymbol.normalized([1.0])
    lim = classical_limit_berezin(unit, grid)
    # fixed points, so the check does not depend on how far the grid reaches
    ratio = berezin_distance(unit, 1e-4) / berezin_distance(unit, 1.0)
    return [
        at_most("berezin.quadrature_vs_closed_form", worst, _scaled(1e-6, tol)),
        flag("berezin.limit_strictly_decreasing", lim.diagnostics["strictly_decreasing"]),
        at_most("berezin.limit_ratio", ratio, 1e-3),
    ]


def weyl_checks(hbar_values, rng: np.random.Generator, tol: float, cutoff: int) -> list[Check]:
    t = FockTruncation(1, cutoff)
    bch = unit = adj = 0.0
    for h in hbar_values:
        v = rng.standard_normal(2)
        p = Covector.from_components([complex(*v) / np.linalg.norm(v) / np.sqrt(h) * 0.9])
        v = rng.standard_normal(2)
        q = Covector.from_components([complex(*v) / np.linalg.norm(v) / np.sqrt(h) * 0.6])
        wp, wq, wpq = weyl_generator(p, h, t), weyl_generator(q, h, t), weyl_generator(p + q, h, t)
        phase = np.exp(-0.5j * h * p.bracket(q))
        bch = max(bch, (wp @ wq).interior_residual(phase * wpq, columns=product_interior(wp, wq)))
        unit = max(unit, abs(wp.norm() - 1.0))
        adj = max(adj, wp.adjoint().interior_residual(weyl_generator(-p, h, t)))
    return [
        at_most("weyl.bch_product", bch, _scaled(1e-6, tol)),
        at_most("weyl.norm_deviation", unit, _scaled(1e-6, tol)),
        at_most("weyl.adjoint", adj, _scaled(1e-6, tol)),
    ]


def expansion_check(grid: HbarGrid, cutoff: int) -> Check:
    phi = Covector.from_components([0.7 + 0.4j])
    exp = dequantization_expansion(weyl_section(phi, grid, FockTruncation(1, cutoff)), 1)
    return flag("field.weyl_expansion_decreasing", exp.decreasing)


def lemma_checks(rng: np.random.Generator, tol: float, trials: int = 20) -> Check:
    ok = True
    for _ in range(trials):
        m, n = int(rng.integers(1, 9)), int(rng.integers(1, 6))
        a = rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
        b = rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))
        ok &= spectra_ab_ba_check(a, b, _scaled(1e-8, tol))
    return flag("lemma.ab_ba_spectra", ok)


def remainder_checks(rng: np.random.Generator, grid: HbarGrid) -> list[Check]:
    zs = rng.uniform(0, 10, 2000) * np.exp(1j * rng.uniform(-np.pi, np.pi, 2000))
    er_ok = all(exp_remainder_bound_check(k, zs).holds for k in range(4))
    p = Covector.from_components([0.8 + 0.3j])
    q = Covector.from_components([-0.2 + 0.9j])
    zeta_max = abs(np.vdot(q.components, p.components)) * grid.positive[0]
    rt_ok = True
    for k in range(4):
        c = fit_remainder_constant(k, max(zeta_max, 1e-6))
        bound = star_remainder_bound(p, q, k, c)
        rt_ok &= all(star_remainder_exponentials(p, q, h, k) / h <= bound * (1 + 1e-9) for h in grid.positive)
    return [flag("remainder.er_k_bound", er_ok), flag("remainder.star_exponentials_bound", rt_ok)]


def run_suite(k: KahlerDecomposition, grid: HbarGrid, seed: int, tol: float, cutoff: int) -> list[Check]:
    rng = np.random.default_rng(seed)
    groups = [
        lambda r: kahler_checks(k, tol),
        lambda r: sj_axiom_checks(sj_operator(k), k.operator, tol) + [sj_uniqueness_check(k, tol)],
        lambda r: purity_checks(k, 1.0, tol),
        lambda r: spectrum_checks(k, grid, tol),
        lambda r: state_checks(k, grid, r, tol, cutoff),
        lambda r: star_product_checks(k.modes, r, tol),
        lambda r: berezin_checks(grid, tol),
        lambda r: weyl_checks((1.0, 0.25), r, tol, cutoff),
        lambda r: [expansion_check(grid, cutoff)],
        lambda r: [lemma_checks(r, tol)],
        lambda r: remainder_checks(r, grid),
    ]
    # independent child generators keep results identical for any thread count
    seeds = rng.spawn(len(groups))
    results = parallel_map(lambda pair: pair[0](pair[1]), list(zip(groups, seeds)))
    return [c for group in results for c in group]
