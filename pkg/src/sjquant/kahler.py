"""Kähler structure of a finite-dimensional symplectic space with inner product.

The symplectic form is carried implicitly by a Pauli-Jordan operator ``E``
through ``omega(v1, v2) = <v1, E^{-1} v2>``.  All matrices are expressed in a
fixed ambient basis; the inner product is an SPD Gram matrix ``G``.
Internally most work happens in "Euclidean" coordinates ``x = L^T v`` with
``G = L L^T``, where ``E`` becomes an ordinary antisymmetric matrix.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np
import scipy.linalg as sla
from scipy.optimize import linear_sum_assignment

from .errors import (
    DegenerateInput,
    InvalidTheta,
    NotAntisymmetric,
    NotPositiveDefinite,
    OddRank,
    ShapeMismatch,
    SingularE,
)

DEFAULT_RANK_TOL = 1e-10
DEFAULT_ANTISYMMETRY_TOL = 1e-8


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class InnerProductSpace:
    """Real vector space with an SPD Gram matrix."""

    gram: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gram, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] == 0:
            raise ShapeMismatch(f"gram must be a non-empty square matrix, got {g.shape}")
        scale = max(np.abs(g).max(), 1.0)
        if np.abs(g - g.T).max() > 1e-12 * scale:
            raise NotPositiveDefinite("gram matrix is not symmetric")
        g = 0.5 * (g + g.T)
        if np.linalg.eigvalsh(g).min() <= 0:
            raise NotPositiveDefinite("gram matrix is not positive definite")
        object.__setattr__(self, "gram", _readonly(g))

    @classmethod
    def euclidean(cls, dim: int) -> "InnerProductSpace":
        return cls(np.eye(dim))

    @property
    def dim(self) -> int:
        return self.gram.shape[0]

    @cached_property
    def is_identity(self) -> bool:
        return bool(np.array_equal(self.gram, np.eye(self.dim)))

    @cached_property
    def cholesky(self) -> np.ndarray:
        """Lower-triangular ``L`` with ``gram = L L^T``."""
        return np.linalg.cholesky(self.gram)

    def to_euclidean(self, a: np.ndarray) -> np.ndarray:
        """Conjugate an operator into Euclidean coordinates: ``L^T A L^{-T}``."""
        if self.is_identity:
            return np.array(a)
        L = self.cholesky
        left = L.T @ a
        return sla.solve_triangular(L, left.T, lower=True).T

    def from_euclidean(self, a: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`to_euclidean`: ``L^{-T} A L^T``."""
        if self.is_identity:
            return np.array(a)
        L = self.cholesky
        return sla.solve_triangular(L.T, a @ L.T, lower=False)

    def vectors_from_euclidean(self, x: np.ndarray) -> np.ndarray:
        """Map Euclidean coordinates back to ambient vectors, ``v = L^{-T} x``."""
        if self.is_identity:
            return np.array(x)
        return sla.solve_triangular(self.cholesky.T, x, lower=False)

    def adjoint(self, a: np.ndarray) -> np.ndarray:
        """Adjoint with respect to the inner product, ``G^{-1} A^T G``."""
        return np.linalg.solve(self.gram, a.T @ self.gram)

    def inner(self, v1: np.ndarray, v2: np.ndarray) -> float:
        return float(v1 @ self.gram @ v2)


def antisymmetry_residual(space: InnerProductSpace, e: np.ndarray) -> float:
    """Relative size of ``G E + E^T G``; zero for a gram-antisymmetric ``E``."""
    ge = space.gram @ e
    scale = np.linalg.norm(space.gram, 2) * max(np.linalg.norm(e, 2), np.finfo(float).tiny)
    return float(np.linalg.norm(ge + ge.T, 2) / scale)


@dataclass(frozen=True)
class PauliJordanOperator:
    """Gram-antisymmetric real operator ``E`` (``E* = -E``)."""

    space: InnerProductSpace
    matrix: np.ndarray
    antisymmetry_tol: float = DEFAULT_ANTISYMMETRY_TOL

    def __post_init__(self):
        e = np.asarray(self.matrix, dtype=float)
        if e.shape != (self.space.dim, self.space.dim):
            raise ShapeMismatch(f"E has shape {e.shape}, space has dim {self.space.dim}")
        if np.any(e) and antisymmetry_residual(self.space, e) > self.antisymmetry_tol:
            raise NotAntisymmetric("E is not antisymmetric with respect to the gram matrix")
        object.__setattr__(self, "matrix", _readonly(e))

    @classmethod
    def from_matrix(cls, e, gram=None) -> "PauliJordanOperator":
        e = np.asarray(e, dtype=float)
        space = InnerProductSpace(np.eye(e.shape[0]) if gram is None else gram)
        return cls(space, e)

    @property
    def dim(self) -> int:
        return self.space.dim

    @cached_property
    def euclidean(self) -> np.ndarray:
        """``L^T E L^{-T}``, an exactly antisymmetric matrix."""
        et = self.space.to_euclidean(self.matrix)
        return 0.5 * (et - et.T)

    @cached_property
    def singular_values(self) -> np.ndarray:
        return sla.svdvals(self.euclidean)

    @property
    def omega(self) -> np.ndarray:
        """Matrix of the symplectic form, ``G E^{-1}``."""
        return self.space.gram @ np.linalg.inv(self.matrix)

    @property
    def poisson(self) -> np.ndarray:
        """Poisson bivector acting on covectors, ``E G^{-1}`` (inverse of ``omega``)."""
        return np.linalg.solve(self.space.gram.T, self.matrix.T).T


class Restriction:
    """Result of :func:`restrict_to_image`; unpacks as ``(basis, operator)``."""

    def __init__(self, basis: np.ndarray, operator: PauliJordanOperator, singular_values: np.ndarray):
        self.basis = basis
        self.operator = operator
        self.singular_values = singular_values

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    def __iter__(self) -> Iterator:
        yield self.basis
        yield self.operator


def _ordered_basis(span: np.ndarray) -> np.ndarray:
    """Orthonormal basis of ``span`` that prefers ambient coordinate directions.

    Columns of the orthogonal projector are picked by pivoted QR, visited in
    ascending index order and Gram-Schmidt orthonormalised with positive
    diagonal.  For an image spanned by coordinate vectors this returns exactly
    those coordinate vectors.
    """
    r = span.shape[1]
    proj = span @ span.T
    _, _, piv = sla.qr(proj, pivoting=True, mode="economic")
    cols = np.sort(piv[:r])
    q, rr = np.linalg.qr(proj[:, cols])
    signs = np.sign(np.diag(rr))
    signs[signs == 0] = 1.0
    return q * signs


def restrict_to_image(e_off, gram_off=None, rank_tol: float = DEFAULT_RANK_TOL) -> Restriction:
    """Restrict an off-shell Pauli-Jordan operator to its image.

    Singular values (of the gram-symmetrised operator) above
    ``rank_tol * sigma_max`` are retained.  When ``e_off`` has full rank the
    basis is the identity and the operator is returned unchanged.
    """
    op = PauliJordanOperator.from_matrix(e_off, gram_off)
    space = op.space
    if not np.any(op.matrix):
        raise DegenerateInput("E_off vanishes identically")
    u, s, _ = np.linalg.svd(op.euclidean)
    if s[0] == 0:
        raise DegenerateInput("E_off vanishes identically")
    rank = int(np.sum(s > rank_tol * s[0]))
    if rank == 0:
        raise DegenerateInput("all singular values fall below the rank tolerance")
    if rank % 2:
        raise OddRank(f"numerical rank {rank} is odd (rank_tol={rank_tol:g})")
    if rank == op.dim:
        return Restriction(np.eye(op.dim), op, s)

    image = space.vectors_from_euclidean(u[:, :rank])
    basis = _ordered_basis(np.linalg.qr(image)[0])
    gram_r = basis.T @ space.gram @ basis
    e_r = np.linalg.solve(gram_r, basis.T @ space.gram @ op.matrix @ basis)
    gram_r = 0.5 * (gram_r + gram_r.T)
    sub = PauliJordanOperator(InnerProductSpace(gram_r), e_r)
    return Restriction(basis, sub, s)


@dataclass(frozen=True)
class KahlerDecomposition:
    """Polar decomposition ``E = |E| U*`` and the induced Kähler data.

    ``mode_basis`` has columns ``e_1, f_1, e_2, f_2, ...`` with ``f_i = J e_i``;
    the basis is gram-orthonormal and ``|E|^{-1} e_i = theta_i e_i``.
    """

    operator: PauliJordanOperator
    abs_e: np.ndarray
    u: np.ndarray
    j: np.ndarray
    eta: np.ndarray
    thetas: np.ndarray
    mode_basis: np.ndarray

    @property
    def modes(self) -> int:
        return len(self.thetas)

    @property
    def mode_re(self) -> np.ndarray:
        return self.mode_basis[:, 0::2]

    @property
    def mode_im(self) -> np.ndarray:
        return self.mode_basis[:, 1::2]

    @cached_property
    def abs_e_inv(self) -> np.ndarray:
        return np.linalg.inv(self.abs_e)

    def lambda_of(self, hbar: float) -> float:
        """Ground eigenvalue of the Laplacian, half the trace of ``|E|^{-1}`` over hbar."""
        if hbar <= 0:
            raise ValueError("hbar must be positive")
        return 0.5 * float(np.trace(self.abs_e_inv)) / hbar

    @cached_property
    def eta_inverse(self) -> np.ndarray:
        """Covariance on covectors, the inverse of ``eta`` (equals ``|E| G^{-1}``)."""
        m = self.abs_e @ np.linalg.inv(self.operator.space.gram)
        return 0.5 * (m + m.T)

    def omega(self, v1, v2) -> float:
        return float(v1 @ self.operator.omega @ v2)

    def eta_form(self, v1, v2) -> float:
        return float(v1 @ self.eta @ v2)

    def residuals(self, rng: np.random.Generator | None = None, pairs: int = 100) -> dict:
        """Relative residuals of all structural identities."""
        rng = np.random.default_rng(0) if rng is None else rng
        e = self.operator.matrix
        g = self.operator.space.gram
        n = self.operator.dim
        ne = np.linalg.norm(e, 2)
        na = np.linalg.norm(self.abs_e, 2)
        ustar = self.operator.space.adjoint(self.u)
        omega = self.operator.omega
        v1 = rng.standard_normal((n, pairs))
        v2 = rng.standard_normal((n, pairs))
        kahler = np.einsum("ip,ij,jp->p", v1, omega @ self.j, v2) - np.einsum("ip,ij,jp->p", v1, self.eta, v2)
        scale = np.linalg.norm(v1, axis=0) * np.linalg.norm(v2, axis=0) * np.linalg.norm(self.eta, 2)
        in_modes = self.mode_basis.T @ g @ self.abs_e_inv @ self.mode_basis
        return {
            "polar": float(np.linalg.norm(e - self.abs_e @ ustar, 2) / ne),
            "polar_adjoint": float(np.linalg.norm(self.operator.space.adjoint(e) - self.u @ self.abs_e, 2) / ne),
            "complex_structure": float(np.linalg.norm(self.j @ self.j + np.eye(n), 2)),
            "commutator": float(np.linalg.norm(e @ self.abs_e - self.abs_e @ e, 2) / (ne * na)),
            "kahler": float(np.max(np.abs(kahler) / scale)),
            "omega_j_invariance": float(np.linalg.norm(self.j.T @ omega @ self.j - omega, 2) / np.linalg.norm(omega, 2)),
            "eta_j_invariance": float(np.linalg.norm(self.j.T @ self.eta @ self.j - self.eta, 2) / np.linalg.norm(self.eta, 2)),
            "mode_orthonormality": float(np.abs(self.mode_basis.T @ g @ self.mode_basis - np.eye(n)).max()),
            "mode_diagonal": float(np.abs(in_modes - np.diag(np.repeat(self.thetas, 2))).max() / self.thetas.max()),
        }


def _sign_fix(v: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    idx = np.flatnonzero(np.abs(v) > tol * np.abs(v).max())
    return -v if v[idx[0]] < 0 else v


def polar_decompose(op: PauliJordanOperator, rank_tol: float = DEFAULT_RANK_TOL) -> KahlerDecomposition:
    """Polar decomposition of an invertible Pauli-Jordan operator.

    Uses the SVD-based polar factorisation of the Euclidean form of ``E``.
    Modes are extracted greedily: the top eigenvector ``e`` of ``|E|^{-1}`` on
    the remaining subspace is paired with ``J e`` and the pair is removed, so
    degenerate ``theta`` need no eigenvalue clustering.
    """
    s = op.singular_values
    if s.size == 0 or s[0] == 0 or s[-1] <= rank_tol * s[0]:
        raise SingularE("E is singular on the given space")
    if op.dim % 2:
        raise SingularE("odd-dimensional E cannot be invertible")
    space = op.space
    et = op.euclidean
    ustar_t, abs_t = sla.polar(et, side="left")
    abs_t = 0.5 * (abs_t + abs_t.T)
    j_t = -ustar_t.T
    m = np.linalg.inv(abs_t)
    m = 0.5 * (m + m.T)

    n = op.dim
    remaining = np.eye(n)
    cols, thetas = [], []
    for _ in range(n // 2):
        w, y = np.linalg.eigh(remaining.T @ m @ remaining)
        ev = _sign_fix(remaining @ y[:, -1])
        ev /= np.linalg.norm(ev)
        fv = j_t @ ev
        cols += [ev, fv]
        thetas.append(float(ev @ m @ ev))
        rest = remaining - np.outer(ev, ev @ remaining) - np.outer(fv, fv @ remaining)
        uu, ss, _ = np.linalg.svd(rest, full_matrices=False)
        remaining = uu[:, : remaining.shape[1] - 2]

    basis_t = np.column_stack(cols)
    abs_e = space.from_euclidean(abs_t)
    u = space.from_euclidean(ustar_t.T)
    j = space.from_euclidean(j_t)
    eta = space.gram @ np.linalg.inv(abs_e)
    eta = 0.5 * (eta + eta.T)
    return KahlerDecomposition(
        operator=op,
        abs_e=_readonly(abs_e),
        u=_readonly(u),
        j=_readonly(j),
        eta=_readonly(eta),
        thetas=_readonly(np.array(thetas)),
        mode_basis=_readonly(space.vectors_from_euclidean(basis_t)),
    )


@dataclass(frozen=True, order=True)
class SpectralLevel:
    value: Fraction
    multiplicity: int = field(compare=False)

    def __float__(self) -> float:
        return float(self.value)


def _exact(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def laplacian_spectrum(thetas: Sequence, hbar, count: int) -> list[SpectralLevel]:
    """Lowest ``count`` distinct levels ``(1/hbar) sum (2 n_i + 1) theta_i``.

    Arithmetic is exact: floats are converted to their binary-exact
    fractions.  Multi-indices are enumerated in ascending order with a heap in
    which every index has a unique parent (decrement of its last nonzero
    entry), so each index is produced once.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    th = [_exact(t) for t in thetas]
    if not th or any(t <= 0 for t in th):
        raise InvalidTheta("all theta must be positive")
    h = _exact(hbar)
    if h <= 0:
        raise ValueError("hbar must be positive")
    ground = sum(th) / h
    step = [2 * t / h for t in th]
    n_modes = len(th)

    heap = [(ground, (0,) * n_modes, 0)]
    levels: list[SpectralLevel] = []
    current, mult = None, 0
    while heap:
        value, idx, last = heapq.heappop(heap)
        if value != current:
            if current is not None:
                levels.append(SpectralLevel(current, mult))
                if len(levels) == count:
                    return levels
            current, mult = value, 0
        mult += 1
        for i in range(last, n_modes):
            nxt = list(idx)
            nxt[i] += 1
            heapq.heappush(heap, (value + step[i], tuple(nxt), i))
    raise AssertionError("unreachable: the spectrum is infinite")


def spectra_ab_ba_check(a, b, tol: float = 1e-8) -> bool:
    """True iff the nonzero eigenvalues of ``AB`` and ``BA`` agree as multisets."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0] or a.shape[0] != b.shape[1]:
        raise ShapeMismatch(f"incompatible shapes {a.shape} and {b.shape}")
    ev_ab = np.linalg.eigvals(a @ b)
    ev_ba = np.linalg.eigvals(b @ a)
    ev_ab = ev_ab[np.abs(ev_ab) > tol]
    ev_ba = ev_ba[np.abs(ev_ba) > tol]
    if ev_ab.size != ev_ba.size:
        return False
    if ev_ab.size == 0:
        return True
    cost = np.abs(ev_ab[:, None] - ev_ba[None, :])
    rows, cols = linear_sum_assignment(cost)
    return bool(np.all(cost[rows, cols] <= tol * max(1.0, np.abs(ev_ab).max())))
