"""Dense complex matrix kernel for multimode operators.

Composite-index bookkeeping plus the handful of linear-algebra primitives the
rest of the package is built on: Hermitian eigendecomposition, singular
values, partial transpose, partial trace, realignment and Kronecker products.
Everything operates on plain ``numpy`` complex arrays.  The first tensor
factor is always the most significant index, which matches ``numpy.kron`` and
C-order reshapes, so Kronecker products and composite indexing agree by
construction.
"""

from __future__ import annotations

import math
import string
from dataclasses import dataclass

import numpy as np

HERMITICITY_ATOL = 1e-10


def as_complex_matrix(matrix, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-d complex array, rejecting NaN/Inf entries."""
    arr = np.asarray(matrix, dtype=complex)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def hermitian_deviation(matrix: np.ndarray) -> tuple[float, tuple[int, int]]:
    """Max |M_ij - conj(M_ji)| and the indices where it is attained."""
    dev = np.abs(matrix - matrix.conj().T)
    i, j = np.unravel_index(int(np.argmax(dev)), dev.shape)
    return float(dev[i, j]), (int(i), int(j))


def require_hermitian(matrix, atol: float = HERMITICITY_ATOL, name: str = "matrix") -> np.ndarray:
    """Check Hermiticity within ``atol`` and return the symmetrized (M + M†)/2.

    Raises ValueError naming the worst offending entry pair.
    """
    arr = as_complex_matrix(matrix, name)
    if arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be square, got shape {arr.shape}")
    dev, (i, j) = hermitian_deviation(arr)
    if dev > atol:
        raise ValueError(
            f"{name} is not Hermitian within {atol:g}: entry ({i},{j}) = {arr[i, j]:.6g} "
            f"vs entry ({j},{i}) = {arr[j, i]:.6g}, deviation {dev:.3g}"
        )
    return (arr + arr.conj().T) / 2


@dataclass(frozen=True)
class CompositeIndexMap:
    """Index map for a tensor-product basis, first mode most significant.

    The composite index of the tuple (n_1, ..., n_M) is sum_s n_s * stride_s
    with stride_M = 1 and stride_s = d_{s+1} * ... * d_M.  This is a bijection
    between mode tuples and the range [0, prod(dims)).
    """

    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if len(dims) == 0:
            raise ValueError("at least one mode is required")
        if any(d < 1 for d in dims):
            raise ValueError(f"mode dimensions must be >= 1, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def num_modes(self) -> int:
        return len(self.dims)

    @property
    def total_dim(self) -> int:
        return math.prod(self.dims)

    @property
    def strides(self) -> tuple[int, ...]:
        out = []
        s = 1
        for d in reversed(self.dims):
            out.append(s)
            s *= d
        return tuple(reversed(out))

    def flat(self, indices) -> int:
        """Composite index of a mode tuple."""
        if len(indices) != self.num_modes:
            raise ValueError(f"expected {self.num_modes} mode indices, got {len(indices)}")
        total = 0
        for n, d, s in zip(indices, self.dims, self.strides):
            if not 0 <= n < d:
                raise ValueError(f"mode index {n} out of range [0, {d})")
            total += int(n) * s
        return total

    def tuple_of(self, index: int) -> tuple[int, ...]:
        """Mode tuple of a composite index."""
        if not 0 <= index < self.total_dim:
            raise ValueError(f"composite index {index} out of range [0, {self.total_dim})")
        out = []
        for s in self.strides:
            out.append(index // s)
            index %= s
        return tuple(out)

    def validate_modes(self, modes) -> tuple[int, ...]:
        """Normalize a mode subset to a sorted tuple, rejecting bad indices."""
        modes = tuple(int(m) for m in modes)
        if len(set(modes)) != len(modes):
            raise ValueError(f"duplicate mode indices in {modes}")
        for m in modes:
            if not 0 <= m < self.num_modes:
                raise ValueError(f"mode index {m} out of range [0, {self.num_modes})")
        return tuple(sorted(modes))

    def complement(self, modes) -> tuple[int, ...]:
        modes = set(self.validate_modes(modes))
        return tuple(s for s in range(self.num_modes) if s not in modes)


@dataclass(frozen=True, eq=False)
class HermitianSpectrum:
    """Eigenvalues (real, ascending) and orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def eigh(matrix, atol: float = HERMITICITY_ATOL) -> HermitianSpectrum:
    """Eigendecomposition of a Hermitian matrix.

    The input is checked to be Hermitian within ``atol`` and symmetrized
    before the decomposition, which stabilizes downstream sign decisions.
    """
    sym = require_hermitian(matrix, atol)
    eigenvalues, eigenvectors = np.linalg.eigh(sym)
    return HermitianSpectrum(eigenvalues, eigenvectors)


def svd_values(matrix) -> np.ndarray:
    """Singular values, descending."""
    return np.linalg.svd(as_complex_matrix(matrix), compute_uv=False)


def kron(a, b) -> np.ndarray:
    """Kronecker product, first factor most significant."""
    return np.kron(as_complex_matrix(a, "first factor"), as_complex_matrix(b, "second factor"))


def _square_for(rho, index_map: CompositeIndexMap) -> np.ndarray:
    arr = as_complex_matrix(rho, "operator")
    d = index_map.total_dim
    if arr.shape != (d, d):
        raise ValueError(f"operator shape {arr.shape} does not match composite dimension {d}")
    return arr


def partial_transpose(rho, index_map: CompositeIndexMap, transposed_modes) -> np.ndarray:
    """Transpose the indices of a proper, nonempty subset of modes.

    Applying the same subset twice is the identity; Hermiticity and trace are
    preserved.
    """
    arr = _square_for(rho, index_map)
    modes = index_map.validate_modes(transposed_modes)
    if not modes:
        raise ValueError("transposed mode subset must be nonempty")
    if len(modes) == index_map.num_modes:
        raise ValueError("transposing every mode is a plain transpose; use .T instead")
    n = index_map.num_modes
    tensor = arr.reshape(index_map.dims * 2)
    axes = list(range(2 * n))
    for s in modes:
        axes[s], axes[n + s] = axes[n + s], axes[s]
    return tensor.transpose(axes).reshape(arr.shape)


def partial_trace(rho, index_map: CompositeIndexMap, keep_modes) -> np.ndarray:
    """Trace out all modes not in ``keep_modes``.

    The output is square with dimension prod of kept mode dimensions, kept
    modes retaining their original relative order.
    """
    arr = _square_for(rho, index_map)
    keep = index_map.validate_modes(keep_modes)
    if not keep:
        raise ValueError("keep mode subset must be nonempty")
    n = index_map.num_modes
    letters = string.ascii_letters
    if 2 * n > len(letters):
        raise ValueError(f"too many modes for einsum labels ({n})")
    row = list(letters[:n])
    col = list(letters[n:2 * n])
    for s in range(n):
        if s not in keep:
            col[s] = row[s]
    out_labels = "".join(row[s] for s in keep) + "".join(col[s] for s in keep)
    spec = "".join(row) + "".join(col) + "->" + out_labels
    kept_dim = math.prod(index_map.dims[s] for s in keep)
    return np.einsum(spec, arr.reshape(index_map.dims * 2)).reshape(kept_dim, kept_dim)


def realign(rho, index_map: CompositeIndexMap) -> np.ndarray:
    """Realignment of a bipartite operator.

    For mode dimensions (dA, dB) the output has shape (dA^2, dB^2) with entry
    at row i*dA + j, column k*dB + l equal to the input entry at row (i, k),
    column (j, l).  Any consistent convention yields the same singular values;
    this one sends product operators to outer products of their vectorized
    factors.
    """
    if index_map.num_modes != 2:
        raise ValueError(
            f"realignment needs exactly 2 modes, got {index_map.num_modes}; "
            "group a multipartite system into a bipartition first"
        )
    arr = _square_for(rho, index_map)
    da, db = index_map.dims
    return arr.reshape(da, db, da, db).transpose(0, 2, 1, 3).reshape(da * da, db * db)


def permute_modes(rho, index_map: CompositeIndexMap, order) -> np.ndarray:
    """Reorder the tensor factors of a square operator.

    ``order`` lists the source mode for each output slot; the result lives on
    the composite map with dims permuted accordingly.
    """
    arr = _square_for(rho, index_map)
    order = tuple(int(s) for s in order)
    if sorted(order) != list(range(index_map.num_modes)):
        raise ValueError(f"order {order} is not a permutation of all {index_map.num_modes} modes")
    n = index_map.num_modes
    axes = list(order) + [n + s for s in order]
    new_dim = index_map.total_dim
    return arr.reshape(index_map.dims * 2).transpose(axes).reshape(new_dim, new_dim)


def permute_vector_modes(amplitudes, index_map: CompositeIndexMap, order) -> np.ndarray:
    """Vector analogue of :func:`permute_modes`."""
    vec = np.asarray(amplitudes, dtype=complex)
    if vec.ndim != 1 or vec.size != index_map.total_dim:
        raise ValueError(f"amplitude vector size {vec.size} does not match composite dimension")
    order = tuple(int(s) for s in order)
    if sorted(order) != list(range(index_map.num_modes)):
        raise ValueError(f"order {order} is not a permutation of all {index_map.num_modes} modes")
    return vec.reshape(index_map.dims).transpose(order).reshape(vec.size)
