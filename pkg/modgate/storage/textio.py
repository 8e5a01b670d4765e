"""Versioned plain-text formats for every persisted modgate object.

Each file starts with a header line naming the format and version, e.g.
``modgate-expert v1 V T alpha``. Floats are written with 17 significant
digits so that a save/load cycle reproduces every table exactly. Writes go
through a temporary file and an atomic rename.
"""

import csv
import logging
import math
from collections.abc import Callable, Iterable, Iterator, Sequence
from contextlib import contextmanager
from pathlib import Path
from typing import IO, TypeVar

import numpy as np

from modgate.constants import (
    CACHE_HEADER,
    CORPUS_HEADER,
    EXPERT_HEADER,
    FLOAT_FORMAT,
    GATE_FEAT_HEADER,
    GATE_TAB_HEADER,
    ROUTER_HEADER,
)
from modgate.core.distributions import SupportSet
from modgate.distill.routers import CausalRouter
from modgate.distill.structural import CachedTuple
from modgate.exceptions import PersistenceError, error_context
from modgate.experts.markov import MarkovExpert
from modgate.gates.base import Gate
from modgate.gates.featurized import FeatGate
from modgate.gates.tabular import TabularGate

logger = logging.getLogger(__name__)

R = TypeVar("R")

_IO_ERRORS = {OSError: PersistenceError, ValueError: PersistenceError}


def fmt(value: float) -> str:
    """Format a float with 17 significant digits."""
    return format(float(value), FLOAT_FORMAT)


def _row(values: Iterable[float]) -> str:
    return " ".join(fmt(v) for v in values)


def _ints(values: Iterable[int]) -> str:
    return " ".join(str(int(v)) for v in values)


@contextmanager
def atomic_writer(path: Path) -> Iterator[IO[str]]:
    """Write to ``<path>.tmp`` and rename over ``path`` on success."""
    path = Path(path)
    temp_path = path.with_name(f"{path.name}.tmp")
    details = {"path": str(path)}
    with error_context("write " + path.name, transform=_IO_ERRORS, details=details):
        path.parent.mkdir(parents=True, exist_ok=True)
        try:
            with temp_path.open("w", encoding="utf-8", newline="\n") as f:
                yield f
            temp_path.replace(path)
        except BaseException:
            if temp_path.exists():
                temp_path.unlink()
            raise
    logger.debug("wrote %s", path)


def _read_lines(path: Path) -> list[str]:
    details = {"path": str(path)}
    with error_context("read " + Path(path).name, transform=_IO_ERRORS, details=details):
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise PersistenceError("file is empty", path=str(path))
    return lines


def _header(path: Path, line: str, header: str, nfields: int) -> list[str]:
    parts = line.split()
    expected = header.split()
    if parts[: len(expected)] != expected or len(parts) != len(expected) + nfields:
        raise PersistenceError(
            f"bad header {line!r}, expected '{header}' with {nfields} fields", path=str(path)
        )
    return parts[len(expected) :]


def _parse(path: Path, what: str, fn: Callable[[], R]) -> R:
    with error_context(
        f"parse {what}",
        transform={ValueError: PersistenceError, IndexError: PersistenceError},
        details={"path": str(path)},
    ):
        return fn()


# -- experts ---------------------------------------------------------------


def save_expert(expert: MarkovExpert, path: Path) -> Path:
    with atomic_writer(path) as f:
        f.write(f"{EXPERT_HEADER} {expert.vocab_size} {expert.length} {fmt(expert.alpha)}\n")
        f.write(_row(expert.start) + "\n")
        for row in expert.trans:
            f.write(_row(row) + "\n")
    return Path(path)


def load_expert(path: Path) -> MarkovExpert:
    lines = _read_lines(path)
    V, T, alpha = _header(path, lines[0], EXPERT_HEADER, 3)

    def build() -> MarkovExpert:
        v = int(V)
        if len(lines) != v + 2:
            raise ValueError(f"expected {v + 1} table rows, found {len(lines) - 1}")
        start = np.array([float(s) for s in lines[1].split()])
        trans = np.array([[float(s) for s in line.split()] for line in lines[2:]])
        return MarkovExpert(v, int(T), start, trans, float(alpha))

    return _parse(path, "expert", build)


# -- gates -----------------------------------------------------------------


def save_gate(gate: Gate, path: Path) -> Path:
    """Tabular gates as ``tokens | weights`` rows; featurized gates as Θ rows."""
    with atomic_writer(path) as f:
        if isinstance(gate, TabularGate):
            support = gate.support
            f.write(
                f"{GATE_TAB_HEADER} {support.vocab_size} {support.length} "
                f"{len(support)} {gate.num_experts}\n"
            )
            for tokens, weights in zip(support.tokens, gate.W, strict=True):
                f.write(f"{_ints(tokens)} | {_row(weights)}\n")
        elif isinstance(gate, FeatGate):
            d, p = gate.theta.shape
            f.write(f"{GATE_FEAT_HEADER} {d} {p}\n")
            for row in gate.theta:
                f.write(_row(row) + "\n")
        else:
            raise PersistenceError(f"cannot persist {type(gate).__name__}", path=str(path))
    return Path(path)


def load_gate(path: Path) -> Gate:
    lines = _read_lines(path)
    if lines[0].startswith(GATE_TAB_HEADER):
        V, T, n, p = (int(x) for x in _header(path, lines[0], GATE_TAB_HEADER, 4))

        def build_tab() -> TabularGate:
            if len(lines) != n + 1:
                raise ValueError(f"expected {n} gate rows, found {len(lines) - 1}")
            tokens, W = [], []
            for line in lines[1:]:
                left, right = line.split("|")
                tokens.append([int(t) for t in left.split()])
                W.append([float(w) for w in right.split()])
            tokens_arr = np.array(tokens, dtype=np.int64).reshape(n, T)
            W_arr = np.array(W).reshape(n, p)
            return TabularGate(SupportSet(tokens_arr, V), W_arr)

        return _parse(path, "tabular gate", build_tab)
    if lines[0].startswith(GATE_FEAT_HEADER):
        d, p = (int(x) for x in _header(path, lines[0], GATE_FEAT_HEADER, 2))

        def build_feat() -> FeatGate:
            if (d - 1) % 2 or len(lines) != d + 1:
                raise ValueError(f"inconsistent featurized gate of dimension {d}")
            theta = np.array([[float(s) for s in line.split()] for line in lines[1:]])
            return FeatGate((d - 1) // 2, theta.reshape(d, p))

        return _parse(path, "featurized gate", build_feat)
    raise PersistenceError(f"unknown gate header {lines[0]!r}", path=str(path))


# -- routers and cached datasets -------------------------------------------


def save_router(router: CausalRouter, path: Path) -> Path:
    with atomic_writer(path) as f:
        f.write(f"{ROUTER_HEADER} {router.vocab_size} {router.length} {router.num_experts}\n")
        for row in router.phi:
            f.write(_row(row) + "\n")
    return Path(path)


def load_router(path: Path) -> CausalRouter:
    lines = _read_lines(path)
    V, T, p = (int(x) for x in _header(path, lines[0], ROUTER_HEADER, 3))

    def build() -> CausalRouter:
        phi = np.array([[float(s) for s in line.split()] for line in lines[1:]])
        return CausalRouter(V, T, phi.reshape(-1, p))

    return _parse(path, "router", build)


def save_cache(
    dataset: Sequence[CachedTuple], vocab_size: int, length: int, path: Path
) -> Path:
    p = dataset[0].probs.size if dataset else 0
    with atomic_writer(path) as f:
        f.write(f"{CACHE_HEADER} {p} {vocab_size} {length}\n")
        for item in dataset:
            f.write(f"{_ints(item.prefix)} | {item.target} | {_row(item.probs)}\n")
    return Path(path)


def load_cache(path: Path) -> tuple[list[CachedTuple], int, int]:
    """Cached tuples plus the vocabulary size and length from the header."""
    lines = _read_lines(path)
    p, V, T = (int(x) for x in _header(path, lines[0], CACHE_HEADER, 3))

    def build() -> list[CachedTuple]:
        out = []
        for line in lines[1:]:
            prefix, target, probs = line.split("|")
            values = [float(s) for s in probs.split()]
            if len(values) != p:
                raise ValueError(f"expected {p} probabilities, got {len(values)}")
            tokens = tuple(int(t) for t in prefix.split())
            out.append(CachedTuple(tokens, int(target), np.array(values)))
        return out

    return _parse(path, "cached dataset", build), V, T


# -- corpora ---------------------------------------------------------------


def save_corpus(tokens: np.ndarray, vocab_size: int, path: Path) -> Path:
    tokens = np.asarray(tokens, dtype=np.int64)
    n, T = tokens.shape
    with atomic_writer(path) as f:
        f.write(f"{CORPUS_HEADER} {vocab_size} {T} {n}\n")
        for row in tokens:
            f.write(_ints(row) + "\n")
    return Path(path)


def load_corpus(path: Path) -> tuple[np.ndarray, int]:
    """Token matrix and vocabulary size."""
    lines = _read_lines(path)
    V, T, n = (int(x) for x in _header(path, lines[0], CORPUS_HEADER, 3))

    def build() -> np.ndarray:
        rows = [[int(t) for t in line.split()] for line in lines[1:]]
        if len(rows) != n:
            raise ValueError(f"expected {n} sequences, found {len(rows)}")
        return np.array(rows, dtype=np.int64).reshape(n, T)

    return _parse(path, "corpus", build), V


# -- CSV -------------------------------------------------------------------


def _cell(value: object) -> str:
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return fmt(v)
    if isinstance(value, (np.integer,)):
        return str(int(value))
    return str(value)


def write_csv(
    path: Path,
    header: Sequence[str],
    rows: Iterable[Sequence[object]],
    provenance: str | None = None,
) -> Path:
    """CSV with ``\\n`` line endings and 17-digit floats."""
    with atomic_writer(path) as f:
        if provenance:
            f.write(f"# provenance: {provenance}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    return Path(path)


def read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    """Header and rows, skipping ``#`` comment lines."""
    lines = [line for line in _read_lines(path) if not line.startswith("#")]
    records = list(csv.reader(lines))
    return records[0], records[1:]
