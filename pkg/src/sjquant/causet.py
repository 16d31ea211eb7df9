"""Causal sets: parsing, sprinkling into a 2D diamond, and the discrete Pauli-Jordan operator."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import CycleDetected, MalformedInput, NotAntisymmetric, ShapeMismatch
from .kahler import InnerProductSpace, antisymmetry_residual

RNG_NAME = "numpy.random.Generator(PCG64)"


def transitive_closure(rel: np.ndarray) -> np.ndarray:
    """Boolean Warshall closure of a relation matrix."""
    c = np.array(rel, dtype=bool, copy=True)
    for k in range(c.shape[0]):
        c |= c[:, k : k + 1] & c[k : k + 1, :]
    return c


@dataclass(frozen=True)
class CausalSet:
    """``relation[x, y]`` is True iff ``x`` strictly precedes ``y``."""

    relation: np.ndarray = field(repr=False)
    coords: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        r = np.asarray(self.relation, dtype=bool)
        if r.ndim != 2 or r.shape[0] != r.shape[1]:
            raise ShapeMismatch(f"relation must be square, got {r.shape}")
        if np.any(np.diag(r)):
            raise CycleDetected("relation is not irreflexive")
        if np.any(r & r.T):
            raise CycleDetected("relation has a two-way pair")
        object.__setattr__(self, "relation", r)
        if self.coords is not None:
            c = np.asarray(self.coords, dtype=float).reshape(-1, 2)
            if c.shape[0] != r.shape[0]:
                raise ShapeMismatch("one (t, x) pair per element is required")
            object.__setattr__(self, "coords", c)

    @property
    def n(self) -> int:
        return self.relation.shape[0]

    @classmethod
    def from_relations(cls, n: int, pairs, coords=None) -> "CausalSet":
        """Close the given ``x < y`` pairs transitively and validate."""
        rel = np.zeros((n, n), dtype=bool)
        for x, y in pairs:
            if not (0 <= x < n and 0 <= y < n):
                raise MalformedInput(f"relation ({x}, {y}) references an element outside 0..{n - 1}")
            if x == y:
                raise CycleDetected(f"element {x} precedes itself")
            rel[x, y] = True
        closed = transitive_closure(rel)
        if np.any(np.diag(closed)):
            cyc = int(np.flatnonzero(np.diag(closed))[0])
            raise CycleDetected(f"relations contain a cycle through element {cyc}")
        return cls(closed, coords)

    def is_closed(self) -> bool:
        return bool(np.array_equal(transitive_closure(self.relation), self.relation))

    def links(self) -> np.ndarray:
        """Covering relations: ``x < y`` with nothing in between."""
        r = self.relation.astype(np.int64)
        between = (r @ r) > 0
        return self.relation & ~between

    def to_json(self) -> dict:
        out = {"n": self.n, "relations": [[int(x), int(y)] for x, y in zip(*np.nonzero(self.relation))]}
        if self.coords is not None:
            out["coords"] = self.coords.tolist()
        return out


_EDGE = re.compile(r"^\s*(\d+)\s*(?:<|\s|,)\s*(\d+)\s*$")


def parse_causal_set(text: str) -> CausalSet:
    """Parse JSON ``{n, relations, coords?}`` or an edge list (``"0<1"`` or ``"0 1"`` per line).

    In edge lists ``n`` defaults to one more than the largest index; a line
    ``n 5`` (or ``# n = 5``) sets it explicitly to allow isolated elements.
    """
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            data = json.loads(stripped)
            n = int(data["n"])
            pairs = [(int(a), int(b)) for a, b in data.get("relations", [])]
        except (ValueError, KeyError, TypeError) as exc:
            raise MalformedInput(f"bad causal-set JSON: {exc}") from exc
        if n < 0:
            raise MalformedInput("n must be nonnegative")
        return CausalSet.from_relations(n, pairs, data.get("coords"))

    pairs, n = [], None
    for raw in stripped.splitlines():
        line = raw.strip()
        head = re.match(r"^#?\s*n\s*=?\s*(\d+)\s*$", line)
        if head:
            n = int(head.group(1))
            continue
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        for chunk in re.split(r"[;]", line):
            if not chunk.strip():
                continue
            m = _EDGE.match(chunk)
            if not m:
                raise MalformedInput(f"cannot parse relation {chunk.strip()!r}")
            pairs.append((int(m.group(1)), int(m.group(2))))
    top = max((max(p) for p in pairs), default=-1) + 1
    if n is None:
        n = top
    elif n < top:
        raise MalformedInput(f"declared n={n} but indices reach {top - 1}")
    return CausalSet.from_relations(n, pairs)


def sprinkle_diamond_2d(density: float, seed: int) -> CausalSet:
    """Poisson sprinkling into the unit-volume causal diamond of 2D Minkowski space.

    Points are uniform in light-cone coordinates ``u, v`` in [0, 1]; the
    embedding coordinates are ``t = (u+v)/sqrt(2)``, ``x = (v-u)/sqrt(2)``.
    Elements are sorted by ``t`` so the relation is upper triangular.
    """
    if not density > 0:
        raise ValueError("density must be positive")
    rng = np.random.Generator(np.random.PCG64(seed))
    n = int(rng.poisson(density))
    uv = rng.random((n, 2))
    t = (uv[:, 0] + uv[:, 1]) / np.sqrt(2)
    x = (uv[:, 1] - uv[:, 0]) / np.sqrt(2)
    order = np.argsort(t, kind="stable")
    uv, t, x = uv[order], t[order], x[order]
    rel = (uv[:, None, 0] < uv[None, :, 0]) & (uv[:, None, 1] < uv[None, :, 1])
    return CausalSet(rel, np.column_stack([t, x]))


def causal_set_from_coords(coords) -> CausalSet:
    """Induced order of explicit 2D points: ``x < y`` iff ``|dx| < dt``."""
    c = np.asarray(coords, dtype=float).reshape(-1, 2)
    dt = c[None, :, 0] - c[:, None, 0]
    dx = np.abs(c[None, :, 1] - c[:, None, 1])
    return CausalSet(dx < dt, c)


@dataclass(frozen=True)
class GreensData:
    """Retarded operator ``K_R`` with ``K_R[x, y] != 0`` only if ``y`` precedes ``x``."""

    retarded: np.ndarray = field(repr=False)
    convention: dict = field(default_factory=dict)

    def support_ok(self, c: CausalSet) -> bool:
        return bool(np.all((self.retarded == 0) | c.relation.T))


def retarded_green_2d_massless(c: CausalSet, coupling: float = 0.5) -> GreensData:
    """``K_R = coupling * C^T``, i.e. ``K_R[x, y] = coupling`` when ``y < x``."""
    k = coupling * c.relation.T.astype(float)
    conv = {"kind": "2d-massless-causal-matrix", "coupling": float(coupling), "sign": "+", "mass": 0.0}
    return GreensData(k, conv)


def pauli_jordan_from_green(g: GreensData, space: InnerProductSpace | None = None, tol: float = 1e-8) -> np.ndarray:
    """``E_off = K_R - K_R^T`` (advanced operator as the transpose)."""
    k = np.asarray(g.retarded, dtype=float)
    if k.ndim != 2 or k.shape[0] != k.shape[1]:
        raise ShapeMismatch(f"retarded operator must be square, got {k.shape}")
    e = k - k.T
    if space is not None:
        if space.dim != k.shape[0]:
            raise ShapeMismatch(f"inner product has dimension {space.dim}, operator {k.shape[0]}")
        res = antisymmetry_residual(space, e)
        if res > tol:
            raise NotAntisymmetric(f"E_off is not antisymmetric for the given inner product (residual {res:.2e})")
    return e
