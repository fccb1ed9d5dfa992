"""State families on truncated number bases, separable sampling, validation
and the qstate text format.

States carry their own :class:`~finent.linalg.CompositeIndexMap` so that every
downstream operation knows the mode structure.  A density operator may be
subnormalized (trace below one) only when it is explicitly flagged as a
truncation of a larger state.
"""

from __future__ import annotations

import math
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .linalg import CompositeIndexMap, as_complex_matrix, hermitian_deviation

TRACE_ATOL = 1e-10
PSD_ATOL = 1e-10

# Eigenvalues in [-PSD_ATOL, -CLAMP_FLOOR) are treated as roundoff from state
# assembly and clamped to zero; anything smaller in magnitude is left alone so
# that clean matrices pass through validation bit-for-bit.
_CLAMP_FLOOR = 1e-14
_RENORM_THRESHOLD = 1e-12


class StateValidationError(ValueError):
    """A density-operator contract was violated.

    ``magnitude`` holds the measured violation (worst Hermiticity deviation,
    most negative eigenvalue, or the trace), so callers can report how far off
    the input was.
    """

    def __init__(self, message: str, magnitude: float):
        super().__init__(message)
        self.magnitude = float(magnitude)


class HermiticityError(StateValidationError):
    pass


class PositivityError(StateValidationError):
    pass


class TraceError(StateValidationError):
    pass


class QStateParseError(ValueError):
    """Malformed qstate file; ``line_no`` is 1-based."""

    def __init__(self, path, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = str(path)
        self.line_no = int(line_no)


@dataclass(eq=False)
class DensityState:
    """Validated density operator on a composite index space."""

    index_map: CompositeIndexMap
    matrix: np.ndarray
    trace: float
    truncated: bool = False

    @property
    def dims(self) -> tuple[int, ...]:
        return self.index_map.dims


@dataclass(eq=False)
class PureStateVec:
    """State vector on a composite index space; may be subnormalized."""

    index_map: CompositeIndexMap
    amplitudes: np.ndarray
    norm: float

    @property
    def dims(self) -> tuple[int, ...]:
        return self.index_map.dims

    def to_density(self) -> DensityState:
        mat = np.outer(self.amplitudes, self.amplitudes.conj())
        tr = float(np.real(np.vdot(self.amplitudes, self.amplitudes)))
        return DensityState(self.index_map, mat, tr, truncated=tr < 1 - 1e-12)


@dataclass(eq=False)
class SeparableEnsemble:
    """Convex mixture of product vectors: weights plus per-mode unit vectors."""

    index_map: CompositeIndexMap
    weights: np.ndarray
    terms: list[tuple[np.ndarray, ...]]

    @property
    def dims(self) -> tuple[int, ...]:
        return self.index_map.dims

    def to_density(self) -> DensityState:
        total = np.zeros((self.index_map.total_dim,) * 2, dtype=complex)
        for weight, locals_ in zip(self.weights, self.terms):
            vec = locals_[0]
            for factor in locals_[1:]:
                vec = np.kron(vec, factor)
            total += weight * np.outer(vec, vec.conj())
        return validate_density(total, self.index_map)


def validate_density(matrix, index_map: CompositeIndexMap, truncated: bool = False) -> DensityState:
    """Check Hermiticity, positivity and trace; return a DensityState.

    Negative eigenvalues in [-1e-10, 0) are clamped to zero and the clamp's
    trace perturbation is renormalized away when it exceeds 1e-12.  Violations
    raise :class:`HermiticityError`, :class:`PositivityError` or
    :class:`TraceError`, each carrying the measured magnitude.
    """
    arr = as_complex_matrix(matrix, "density matrix")
    d = index_map.total_dim
    if arr.shape != (d, d):
        raise ValueError(f"density matrix shape {arr.shape} does not match composite dimension {d}")

    dev, (i, j) = hermitian_deviation(arr)
    if dev > TRACE_ATOL:
        raise HermiticityError(
            f"density matrix is not Hermitian: entries ({i},{j}) and ({j},{i}) "
            f"deviate by {dev:.3g}",
            dev,
        )
    herm = (arr + arr.conj().T) / 2

    eigenvalues, eigenvectors = np.linalg.eigh(herm)
    min_eig = float(eigenvalues[0])
    if min_eig < -PSD_ATOL:
        raise PositivityError(
            f"density matrix is not positive semidefinite: min eigenvalue {min_eig:.6g}",
            min_eig,
        )
    if min_eig < -_CLAMP_FLOOR:
        clamped = np.clip(eigenvalues, 0.0, None)
        perturbation = float(np.sum(clamped - eigenvalues))
        trace_before = float(np.sum(eigenvalues))
        herm = (eigenvectors * clamped) @ eigenvectors.conj().T
        herm = (herm + herm.conj().T) / 2
        if perturbation > _RENORM_THRESHOLD:
            herm *= trace_before / float(np.sum(clamped))

    trace = float(np.real(np.trace(herm)))
    if truncated:
        if not 0.0 < trace <= 1.0 + TRACE_ATOL:
            raise TraceError(
                f"truncated density trace {trace:.12g} outside (0, 1]", trace
            )
    else:
        if abs(trace - 1.0) > TRACE_ATOL:
            raise TraceError(
                f"density trace {trace:.12g} deviates from 1 by more than {TRACE_ATOL:g} "
                "(pass truncated=True for subnormalized truncations)",
                trace,
            )
    return DensityState(index_map, herm, trace, truncated=truncated)


def gen_chik(k: int, local_dim: int) -> PureStateVec:
    """Two-mode vector (|0,0> + |k,k>)/sqrt(2) on equal local dimensions.

    Requires local_dim > k so that both components are representable.
    """
    k = int(k)
    local_dim = int(local_dim)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if local_dim <= k:
        raise ValueError(
            f"local_dim must exceed k to represent the |{k},{k}> component, "
            f"got local_dim={local_dim}"
        )
    index_map = CompositeIndexMap((local_dim, local_dim))
    amplitudes = np.zeros(index_map.total_dim, dtype=complex)
    amplitudes[index_map.flat((0, 0))] = 1 / math.sqrt(2)
    amplitudes[index_map.flat((k, k))] = 1 / math.sqrt(2)
    return PureStateVec(index_map, amplitudes, 1.0)


def gen_tmsv(lam: float, local_dim: int) -> DensityState:
    """Truncated two-mode squeezed vacuum with squeezing parameter lam.

    Amplitudes sqrt(1 - lam^2) * lam^n on |n,n> for n < local_dim; the result
    is flagged as a truncation with trace 1 - lam^(2*local_dim).
    """
    lam = float(lam)
    local_dim = int(local_dim)
    if not 0.0 <= lam < 1.0:
        raise ValueError(f"squeezing parameter must lie in [0, 1), got {lam}")
    if local_dim < 1:
        raise ValueError(f"local_dim must be >= 1, got {local_dim}")
    index_map = CompositeIndexMap((local_dim, local_dim))
    amplitudes = np.zeros(index_map.total_dim, dtype=complex)
    scale = math.sqrt(1.0 - lam * lam)
    for n in range(local_dim):
        amplitudes[index_map.flat((n, n))] = scale * lam ** n
    matrix = np.outer(amplitudes, amplitudes.conj())
    trace = float(np.real(np.vdot(amplitudes, amplitudes)))
    return DensityState(index_map, matrix, trace, truncated=True)


def gen_isotropic(p: float, local_dim: int) -> DensityState:
    """Isotropic state p * |Phi_d><Phi_d| + (1 - p) * I / d^2 on d x d."""
    p = float(p)
    d = int(local_dim)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"mixing parameter must lie in [0, 1], got {p}")
    if d < 2:
        raise ValueError(f"local_dim must be >= 2, got {d}")
    index_map = CompositeIndexMap((d, d))
    phi = np.zeros(index_map.total_dim, dtype=complex)
    for n in range(d):
        phi[index_map.flat((n, n))] = 1 / math.sqrt(d)
    matrix = p * np.outer(phi, phi.conj()) + (1.0 - p) * np.eye(d * d, dtype=complex) / (d * d)
    return validate_density(matrix, index_map)


def gen_partial_ent(local_dim: int = 2) -> PureStateVec:
    """Three-mode vector |0> x (|0,0> + |1,1>)/sqrt(2): the first mode is a
    product factor while the last two share a maximally entangled pair."""
    d = int(local_dim)
    if d < 2:
        raise ValueError(f"local_dim must be >= 2, got {d}")
    index_map = CompositeIndexMap((d, d, d))
    amplitudes = np.zeros(index_map.total_dim, dtype=complex)
    amplitudes[index_map.flat((0, 0, 0))] = 1 / math.sqrt(2)
    amplitudes[index_map.flat((0, 1, 1))] = 1 / math.sqrt(2)
    return PureStateVec(index_map, amplitudes, 1.0)


def gen_separable_random(num_terms: int, dims, seed: int) -> SeparableEnsemble:
    """Random separable ensemble: Dirichlet weights over product vectors whose
    local factors are normalized complex Gaussian samples.

    Deterministic for a fixed seed.
    """
    num_terms = int(num_terms)
    if num_terms < 1:
        raise ValueError(f"num_terms must be >= 1, got {num_terms}")
    index_map = CompositeIndexMap(tuple(int(d) for d in dims))
    rng = np.random.default_rng(int(seed))
    weights = rng.dirichlet(np.ones(num_terms))
    terms = []
    for _ in range(num_terms):
        locals_ = []
        for d in index_map.dims:
            vec = rng.standard_normal(d) + 1j * rng.standard_normal(d)
            locals_.append(vec / np.linalg.norm(vec))
        terms.append(tuple(locals_))
    return SeparableEnsemble(index_map, weights, terms)


# ---------------------------------------------------------------------------
# qstate v1 file format
#
#   qstate v1
#   kind: density | pure
#   dims: d1 d2 ...
#   nnz: K
#   <K entry lines>
#
# Density entries are "row col re im", pure entries "index re im", with
# composite row-major indices and 17-significant-digit decimals.  Lines
# starting with '#' are comments.  For density payloads an entry implies its
# conjugate; writing both is allowed and checked for consistency.
# ---------------------------------------------------------------------------

QSTATE_MAGIC = "qstate v1"


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_qstate(state, path) -> None:
    """Serialize a DensityState or PureStateVec; the write is atomic."""
    lines = [QSTATE_MAGIC]
    if isinstance(state, PureStateVec):
        entries = [
            f"{i} {_fmt(a.real)} {_fmt(a.imag)}"
            for i, a in enumerate(state.amplitudes)
            if a != 0
        ]
        lines.append("kind: pure")
    elif isinstance(state, DensityState):
        entries = []
        for r in range(state.matrix.shape[0]):
            for c in range(state.matrix.shape[1]):
                v = state.matrix[r, c]
                if v != 0:
                    entries.append(f"{r} {c} {_fmt(v.real)} {_fmt(v.imag)}")
        lines.append("kind: density")
    else:
        raise TypeError(f"cannot serialize {type(state).__name__}")
    lines.append("dims: " + " ".join(str(d) for d in state.dims))
    lines.append(f"nnz: {len(entries)}")
    lines.extend(entries)

    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".qstate-")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write("\n".join(lines) + "\n")
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise


def _significant_lines(raw_lines):
    for line_no, line in enumerate(raw_lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        yield line_no, stripped


def read_qstate(path):
    """Parse a qstate file into a DensityState or PureStateVec.

    Malformed files raise :class:`QStateParseError` with the offending line
    number.  Density payloads are validated (Hermiticity, positivity, trace)
    and flagged as truncations when the trace is below one.
    """
    path = os.fspath(path)
    with open(path) as handle:
        raw_lines = handle.readlines()
    lines = list(_significant_lines(raw_lines))
    pos = 0

    def next_line(expect: str):
        nonlocal pos
        if pos >= len(lines):
            raise QStateParseError(path, len(raw_lines), f"file ended early, expected {expect}")
        line_no, text = lines[pos]
        pos += 1
        return line_no, text

    line_no, magic = next_line("magic line")
    if magic != QSTATE_MAGIC:
        raise QStateParseError(path, line_no, f"bad magic line {magic!r}, expected {QSTATE_MAGIC!r}")

    line_no, kind_line = next_line("kind header")
    if not kind_line.startswith("kind:"):
        raise QStateParseError(path, line_no, f"expected 'kind:' header, got {kind_line!r}")
    kind = kind_line[len("kind:"):].strip()
    if kind not in ("density", "pure"):
        raise QStateParseError(path, line_no, f"unknown kind {kind!r}")

    line_no, dims_line = next_line("dims header")
    if not dims_line.startswith("dims:"):
        raise QStateParseError(path, line_no, f"expected 'dims:' header, got {dims_line!r}")
    try:
        dims = tuple(int(tok) for tok in dims_line[len("dims:"):].split())
        index_map = CompositeIndexMap(dims)
    except ValueError as exc:
        raise QStateParseError(path, line_no, f"bad dims header: {exc}") from exc

    line_no, nnz_line = next_line("nnz header")
    if not nnz_line.startswith("nnz:"):
        raise QStateParseError(path, line_no, f"expected 'nnz:' header, got {nnz_line!r}")
    try:
        nnz = int(nnz_line[len("nnz:"):].strip())
    except ValueError as exc:
        raise QStateParseError(path, line_no, f"bad nnz header: {exc}") from exc
    if nnz < 0:
        raise QStateParseError(path, line_no, f"nnz must be nonnegative, got {nnz}")

    total = index_map.total_dim
    entry_lines = lines[pos:]
    if len(entry_lines) < nnz:
        raise QStateParseError(
            path, len(raw_lines),
            f"expected {nnz} entries, file ended after {len(entry_lines)}"
        )
    if len(entry_lines) > nnz:
        line_no, _ = entry_lines[nnz]
        raise QStateParseError(path, line_no, f"more entries than the declared nnz {nnz}")

    def parse_int(tok: str, line_no: int, what: str) -> int:
        try:
            return int(tok)
        except ValueError:
            raise QStateParseError(path, line_no, f"bad {what} {tok!r}") from None

    def parse_float(tok: str, line_no: int, what: str) -> float:
        try:
            return float(tok)
        except ValueError:
            raise QStateParseError(path, line_no, f"bad {what} {tok!r}") from None

    if kind == "pure":
        amplitudes = np.zeros(total, dtype=complex)
        seen: set[int] = set()
        for line_no, text in entry_lines:
            tokens = text.split()
            if len(tokens) != 3:
                raise QStateParseError(path, line_no, f"pure entry needs 3 fields, got {len(tokens)}")
            idx = parse_int(tokens[0], line_no, "index")
            if not 0 <= idx < total:
                raise QStateParseError(path, line_no, f"index {idx} out of range [0, {total})")
            if idx in seen:
                raise QStateParseError(path, line_no, f"duplicate entry for index {idx}")
            seen.add(idx)
            amplitudes[idx] = complex(
                parse_float(tokens[1], line_no, "real part"),
                parse_float(tokens[2], line_no, "imaginary part"),
            )
        norm = float(np.linalg.norm(amplitudes))
        if norm > 1.0 + 1e-12:
            raise QStateParseError(
                path, len(raw_lines), f"pure state norm {norm:.12g} exceeds 1"
            )
        return PureStateVec(index_map, amplitudes, norm)

    matrix = np.zeros((total, total), dtype=complex)
    explicit: set[tuple[int, int]] = set()
    last_entry_line = lines[pos - 1][0] if nnz == 0 else entry_lines[nnz - 1][0]
    for line_no, text in entry_lines:
        tokens = text.split()
        if len(tokens) != 4:
            raise QStateParseError(path, line_no, f"density entry needs 4 fields, got {len(tokens)}")
        row = parse_int(tokens[0], line_no, "row index")
        col = parse_int(tokens[1], line_no, "column index")
        for idx in (row, col):
            if not 0 <= idx < total:
                raise QStateParseError(path, line_no, f"index {idx} out of range [0, {total})")
        if (row, col) in explicit:
            raise QStateParseError(path, line_no, f"duplicate entry for ({row}, {col})")
        explicit.add((row, col))
        matrix[row, col] = complex(
            parse_float(tokens[2], line_no, "real part"),
            parse_float(tokens[3], line_no, "imaginary part"),
        )
    # Mirror entries whose conjugate partner was left implicit.
    for row, col in list(explicit):
        if (col, row) not in explicit:
            matrix[col, row] = matrix[row, col].conjugate()
    dev, (i, j) = hermitian_deviation(matrix)
    if dev > TRACE_ATOL:
        raise QStateParseError(
            path, last_entry_line,
            f"density payload is not Hermitian: entries ({i},{j}) and ({j},{i}) deviate by {dev:.3g}",
        )
    trace = float(np.real(np.trace(matrix)))
    return validate_density(matrix, index_map, truncated=trace < 1 - 1e-12)
