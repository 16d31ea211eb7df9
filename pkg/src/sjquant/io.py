"""File formats: matrices, causal sets, covector lists and reports."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .causet import CausalSet, parse_causal_set
from .errors import MalformedInput
from .kahler import KahlerDecomposition

SCHEMA_VERSION = 1


def read_matrix_csv(text: str) -> np.ndarray:
    rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].lstrip().startswith("#")]
    try:
        m = np.array([[float(x) for x in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise MalformedInput(f"non-numeric matrix entry: {exc}") from exc
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise MalformedInput(f"matrix must be square, got {m.shape}")
    return m


def write_matrix_csv(m: np.ndarray) -> str:
    return "".join(",".join(repr(float(x)) for x in row) + "\n" for row in np.asarray(m))


def read_matrix_json(data: dict) -> tuple[np.ndarray, np.ndarray | None]:
    """Envelope ``{dim, gram?, matrix}``; a missing gram means the identity."""
    try:
        m = np.asarray(data["matrix"], dtype=float)
        gram = None if data.get("gram") is None else np.asarray(data["gram"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedInput(f"bad matrix envelope: {exc}") from exc
    dim = int(data.get("dim", m.shape[0] if m.ndim else 0))
    if m.shape != (dim, dim):
        raise MalformedInput(f"matrix shape {m.shape} does not match dim {dim}")
    if gram is not None and gram.shape != (dim, dim):
        raise MalformedInput(f"gram shape {gram.shape} does not match dim {dim}")
    return m, gram


def matrix_envelope(m: np.ndarray, gram: np.ndarray | None = None) -> dict:
    out = {"dim": int(m.shape[0]), "matrix": np.asarray(m, dtype=float).tolist()}
    if gram is not None:
        out["gram"] = np.asarray(gram, dtype=float).tolist()
    return out


@dataclass
class LoadedInput:
    """Either a raw antisymmetric matrix (with optional gram) or a causal set."""

    kind: str
    matrix: np.ndarray | None = None
    gram: np.ndarray | None = None
    causet: CausalSet | None = None
    meta: dict = field(default_factory=dict)


def load_input(path: str | Path) -> LoadedInput:
    """Dispatch on content: matrix CSV/JSON envelope, causal-set JSON or edge list."""
    p = Path(path)
    text = p.read_text()
    if p.suffix.lower() == ".csv":
        return LoadedInput("matrix", matrix=read_matrix_csv(text), meta={"source": p.name, "format": "csv"})
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            data = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise MalformedInput(f"{p.name}: invalid JSON ({exc})") from exc
        if "matrix" in data:
            m, g = read_matrix_json(data)
            return LoadedInput("matrix", matrix=m, gram=g, meta={"source": p.name, "format": "json"})
        if "relations" in data or "n" in data:
            return LoadedInput("causet", causet=parse_causal_set(stripped), meta={"source": p.name, "format": "json"})
        raise MalformedInput(f"{p.name}: JSON has neither 'matrix' nor 'relations'")
    return LoadedInput("causet", causet=parse_causal_set(text), meta={"source": p.name, "format": "edges"})


def read_covectors(path: str | Path) -> list[np.ndarray]:
    """Real ambient covectors, one per CSV row or a JSON ``{"phis": [[...], ...]}``."""
    p = Path(path)
    text = p.read_text().strip()
    try:
        if text.startswith("{") or text.startswith("["):
            data = json.loads(text)
            rows = data["phis"] if isinstance(data, dict) else data
        else:
            rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].lstrip().startswith("#")]
        out = [np.asarray([float(x) for x in r], dtype=float) for r in rows]
    except (ValueError, KeyError, TypeError) as exc:
        raise MalformedInput(f"{p.name}: bad covector list ({exc})") from exc
    return out


def decomposition_report(k: KahlerDecomposition, hbars, residuals: dict | None = None) -> dict:
    """``{thetas, lambda, residuals}`` for a decomposition."""
    res = k.residuals() if residuals is None else residuals
    return {
        "thetas": [float(t) for t in k.thetas],
        "lambda": [{"hbar": float(h), "value": float(k.lambda_of(h))} for h in hbars if h > 0],
        "residuals": {key: float(v) for key, v in sorted(res.items())},
    }


def dumps(report: dict) -> str:
    """Canonical JSON text: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=True) + "\n"


def rows_to_csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for r in rows:
        buf.write(",".join(_cell(x) for x in r) + "\n")
    return buf.getvalue()


def _cell(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)
