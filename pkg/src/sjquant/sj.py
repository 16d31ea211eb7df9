"""Sorkin-Johnston operator and the quasi-free state it determines."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, ShapeMismatch, SingularE, SingularOmega
from .kahler import (
    DEFAULT_RANK_TOL,
    InnerProductSpace,
    KahlerDecomposition,
    PauliJordanOperator,
)


@dataclass(frozen=True)
class Covector:
    """Real linear functional on the phase space.

    ``components`` are the complex mode components ``phi_i`` with
    ``phi(v) = sum_i phi_i z^i + conj(phi_i) conj(z^i)``.  ``real`` holds the
    ambient row vector when the covector is tied to a decomposition; Fock-space
    code only needs the components.
    """

    components: np.ndarray
    real: np.ndarray | None = None

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.components, dtype=complex))
        c.setflags(write=False)
        object.__setattr__(self, "components", c)
        if self.real is not None:
            r = np.asarray(self.real, dtype=float)
            r.setflags(write=False)
            object.__setattr__(self, "real", r)

    @classmethod
    def from_real(cls, phi, k: KahlerDecomposition) -> "Covector":
        phi = np.asarray(phi, dtype=float)
        if phi.shape != (k.operator.dim,):
            raise DimensionMismatch(f"covector has shape {phi.shape}, space has dim {k.operator.dim}")
        scale = np.sqrt(2.0 * k.thetas)
        comps = (phi @ k.mode_re - 1j * (phi @ k.mode_im)) / scale
        return cls(comps, phi)

    @classmethod
    def from_components(cls, comps, k: KahlerDecomposition | None = None) -> "Covector":
        comps = np.atleast_1d(np.asarray(comps, dtype=complex))
        if k is None:
            return cls(comps)
        if comps.shape != (k.modes,):
            raise DimensionMismatch(f"expected {k.modes} components, got {comps.shape}")
        g = k.operator.space.gram
        scale = np.sqrt(2.0 * k.thetas)
        real = g @ (k.mode_re @ (scale * comps.real) - k.mode_im @ (scale * comps.imag))
        return cls(comps, real)

    @property
    def modes(self) -> int:
        return self.components.shape[0]

    @property
    def norm2(self) -> float:
        """``|phi|^2 = sum_i |phi_i|^2``."""
        return float(np.sum(np.abs(self.components) ** 2))

    def bracket(self, other: "Covector") -> float:
        """Poisson bracket ``{phi, phi'} = i sum_i (phi_i conj(phi'_i) - conj(phi_i) phi'_i)``."""
        if other.modes != self.modes:
            raise DimensionMismatch("covectors have different numbers of modes")
        return float(-2.0 * np.imag(np.vdot(other.components, self.components)))

    def __call__(self, z) -> complex:
        """Evaluate on complex mode coordinates ``z`` (real-valued result)."""
        z = np.asarray(z, dtype=complex)
        return float(2.0 * np.real(self.components @ z))

    def _combine(self, other: "Covector", sign: float) -> "Covector":
        real = None
        if self.real is not None and other.real is not None:
            real = self.real + sign * other.real
        return Covector(self.components + sign * other.components, real)

    def __add__(self, other: "Covector") -> "Covector":
        return self._combine(other, 1.0)

    def __sub__(self, other: "Covector") -> "Covector":
        return self._combine(other, -1.0)

    def __neg__(self) -> "Covector":
        return Covector(-self.components, None if self.real is None else -self.real)

    def __mul__(self, t: float) -> "Covector":
        return Covector(t * self.components, None if self.real is None else t * self.real)

    __rmul__ = __mul__


def complex_coordinates(k: KahlerDecomposition, v) -> np.ndarray:
    """Canonical complex coordinates ``z^i = sqrt(theta_i/2) (<e_i, v> + i <f_i, v>)``."""
    gv = k.operator.space.gram @ np.asarray(v, dtype=float)
    return np.sqrt(0.5 * k.thetas) * (k.mode_re.T @ gv + 1j * (k.mode_im.T @ gv))


@dataclass(frozen=True)
class SJOperator:
    """Complex operator ``A`` on the complexified space; self-adjoint for the gram."""

    space: InnerProductSpace
    matrix: np.ndarray

    @cached_property
    def euclidean(self) -> np.ndarray:
        """Hermitian matrix representing ``A`` in Euclidean coordinates."""
        re = self.space.to_euclidean(self.matrix.real)
        im = self.space.to_euclidean(self.matrix.imag)
        return re + 1j * im

    def hermiticity_residual(self) -> float:
        a = self.euclidean
        return float(np.linalg.norm(a - a.conj().T, 2) / max(np.linalg.norm(a, 2), np.finfo(float).tiny))

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        a = self.euclidean
        return np.linalg.eigvalsh(0.5 * (a + a.conj().T))

    def axiom_residuals(self, e: PauliJordanOperator) -> dict:
        """Positivity (min eigenvalue), commutator and purity residuals.

        Commutator and purity residuals are absolute spectral norms of
        ``A - conj(A) - iE`` and ``A conj(A)``.
        """
        a = self.matrix
        return {
            "positivity": float(self.eigenvalues.min()),
            "commutator": float(np.linalg.norm(a - a.conj() - 1j * e.matrix, 2)),
            "purity": float(np.linalg.norm(a @ a.conj(), 2)),
        }


def sj_operator(k: KahlerDecomposition, e: PauliJordanOperator | None = None) -> SJOperator:
    """Closed form ``A = (|E| + iE)/2``."""
    e = k.operator if e is None else e
    if e.matrix.shape != k.abs_e.shape:
        raise ShapeMismatch("decomposition and operator have different dimensions")
    return SJOperator(e.space, 0.5 * (k.abs_e + 1j * e.matrix))


def solve_sj_axioms(e: PauliJordanOperator, rank_tol: float = DEFAULT_RANK_TOL) -> SJOperator:
    """Solve positivity, commutator and purity axioms for ``A``.

    Writing ``A = (H + iE)/2`` the axioms reduce to ``H`` real, ``H >= 0``,
    ``H^2 = -E^2`` and ``[E, H] = 0``.  ``H`` is obtained as the nonnegative
    square root on the eigenbasis of ``-E^2`` (Euclidean coordinates, where it
    is symmetric PSD).  This path does not use the polar factorisation.
    """
    s = e.singular_values
    if s[0] == 0 or s[-1] <= rank_tol * s[0]:
        raise SingularE("E is singular on the given space")
    et = e.euclidean
    m = -(et @ et)
    w, v = np.linalg.eigh(0.5 * (m + m.T))
    h = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T
    h = e.space.from_euclidean(0.5 * (h + h.T))
    return SJOperator(e.space, 0.5 * (h + 1j * e.matrix))


@dataclass(frozen=True)
class QuasiFreeState:
    """Quasi-free state ``sigma(W(phi)) = exp(-(hbar/4) phi^T C phi)``.

    ``eta_inverse`` is the covariance ``C`` on ambient covectors and ``omega``
    the symplectic form on vectors.  ``theta_op`` is the operator with
    ``omega(v1, v2) = eta_G(theta v1, v2)`` where ``eta_G = C^{-1}``.
    """

    hbar: float
    eta_inverse: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.eta_inverse, dtype=float)
        if c.shape != np.shape(self.omega) or c.shape[0] != c.shape[1]:
            raise DimensionMismatch("covariance and symplectic form shapes differ")
        if self.hbar <= 0:
            raise ValueError("hbar must be positive")
        c = 0.5 * (c + c.T)
        if np.linalg.eigvalsh(c).min() <= 0:
            raise ValueError("covariance must be positive definite")
        object.__setattr__(self, "eta_inverse", c)
        object.__setattr__(self, "omega", np.asarray(self.omega, dtype=float))

    @classmethod
    def sorkin_johnston(cls, k: KahlerDecomposition, hbar: float) -> "QuasiFreeState":
        return cls(hbar, k.eta_inverse, k.operator.omega)

    def scaled(self, factor: float) -> "QuasiFreeState":
        """State with ``eta_G`` multiplied by ``factor`` (covariance divided)."""
        return QuasiFreeState(self.hbar, self.eta_inverse / factor, self.omega)

    @property
    def dim(self) -> int:
        return self.eta_inverse.shape[0]

    @cached_property
    def eta_g(self) -> np.ndarray:
        h = np.linalg.inv(self.eta_inverse)
        return 0.5 * (h + h.T)

    @cached_property
    def poisson(self) -> np.ndarray:
        return np.linalg.inv(self.omega)

    @cached_property
    def theta_op(self) -> np.ndarray:
        return -np.linalg.solve(self.eta_g, self.omega)

    def bracket(self, phi1, phi2) -> float:
        """Poisson bracket of ambient covectors, ``phi1^T omega^{-1} phi2``."""
        return float(_real(phi1, self.dim) @ self.poisson @ _real(phi2, self.dim))

    def covariance(self, phi) -> float:
        p = _real(phi, self.dim)
        return float(p @ self.eta_inverse @ p)


def _real(phi, dim: int) -> np.ndarray:
    if isinstance(phi, Covector):
        if phi.real is None:
            raise DimensionMismatch("covector carries no ambient representation")
        phi = phi.real
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (dim,):
        raise DimensionMismatch(f"covector has shape {phi.shape}, state has dim {dim}")
    return phi


def state_on_weyl(phi, s: QuasiFreeState) -> complex:
    return complex(np.exp(-0.25 * s.hbar * s.covariance(phi)))


def eta_norm(op: np.ndarray, form: np.ndarray) -> float:
    """Operator norm induced by the SPD bilinear form ``form``."""
    L = np.linalg.cholesky(form)
    return float(np.linalg.norm(L.T @ op @ np.linalg.inv(L.T), 2))


@dataclass(frozen=True)
class PurityReport:
    norm_theta: float
    square_residual: float
    is_pure: bool
    dominated: bool
    # the Gaussian is a positive functional iff the covariance dominates the
    # bracket on covectors, which is the dual condition ||Theta^{-1}|| <= 1
    positive: bool


def purity_check(s: QuasiFreeState, omega=None, tol: float = 1e-10) -> PurityReport:
    omega = s.omega if omega is None else np.asarray(omega, dtype=float)
    if omega.shape != (s.dim, s.dim):
        raise DimensionMismatch("omega has the wrong shape")
    if np.linalg.matrix_rank(omega) < s.dim:
        raise SingularOmega("symplectic form is degenerate")
    theta = -np.linalg.solve(s.eta_g, omega)
    norm = eta_norm(theta, s.eta_g)
    sq = float(np.linalg.norm(theta @ theta + np.eye(s.dim), 2))
    return PurityReport(
        norm_theta=norm,
        square_residual=sq,
        is_pure=abs(norm - 1.0) <= tol and sq <= tol,
        dominated=norm <= 1.0 + tol,
        positive=eta_norm(np.linalg.inv(theta), s.eta_g) <= 1.0 + tol,
    )


def domination_gap(s: QuasiFreeState, v1, v2) -> float:
    """``eta_G(v1,v1) eta_G(v2,v2) - |omega(v1,v2)|^2``; negative means violated."""
    v1 = np.asarray(v1, dtype=float)
    v2 = np.asarray(v2, dtype=float)
    w = v1 @ s.omega @ v2
    return float((v1 @ s.eta_g @ v1) * (v2 @ s.eta_g @ v2) - w * w)


def weyl_gram_matrix(phis: Sequence, s: QuasiFreeState) -> np.ndarray:
    """``M[a, b] = sigma(W(phi_a)^* W(phi_b))`` via the Weyl product relation."""
    reals = [_real(p, s.dim) for p in phis]
    n = len(reals)
    m = np.empty((n, n), dtype=complex)
    for a in range(n):
        for b in range(n):
            phase = np.exp(-0.5j * s.hbar * s.bracket(-reals[a], reals[b]))
            m[a, b] = phase * state_on_weyl(reals[b] - reals[a], s)
    return m


def state_positivity_gram(phis: Sequence, s: QuasiFreeState) -> float:
    if len(phis) == 0:
        raise ValueError("need at least one covector")
    m = weyl_gram_matrix(phis, s)
    return float(np.linalg.eigvalsh(0.5 * (m + m.conj().T)).min())
