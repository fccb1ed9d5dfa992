"""Entanglement criteria on finite-dimensional states.

Spectral and Schmidt decompositions, the partial-transpose and realignment
tests, witness operators with separable bounds, a seesaw maximizer over
product vectors, and zero-padding of certificates into larger spaces.

A bipartition of an M-mode system is a pair of disjoint, covering, nonempty
mode-index tuples ``(side_a, side_b)``.  Criteria that are intrinsically
bipartite group the modes of each side into one composite factor first.

Witness separable bounds carry a ``bound_kind`` tag:

``analytic-exact``
    closed-form maximum of the expectation over product vectors; holds for
    pure projector witnesses, where the bound is the squared top Schmidt
    coefficient.
``seesaw-lower``
    numerical lower estimate from alternating maximization; useful as a
    diagnostic but never used to certify entanglement.
``nonneg-by-construction``
    the expectation on any product vector is nonpositive by construction
    (partial transposes of negated projectors), so the bound is zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from . import linalg
from .linalg import CompositeIndexMap
from .states import DensityState, PureStateVec

TOL_DETECT = 1e-9

BOUND_ANALYTIC = "analytic-exact"
BOUND_SEESAW = "seesaw-lower"
BOUND_NONNEG = "nonneg-by-construction"

CERTIFYING_BOUND_KINDS = (BOUND_ANALYTIC, BOUND_NONNEG)


def normalize_partition(partition, num_modes: int):
    """Validate a bipartition: disjoint, covering, both sides nonempty.

    Returns ``((side_a...), (side_b...))`` with each side sorted.
    """
    if len(partition) != 2:
        raise ValueError("partition must be a pair (side_a, side_b)")
    side_a = tuple(sorted(int(m) for m in partition[0]))
    side_b = tuple(sorted(int(m) for m in partition[1]))
    if not side_a or not side_b:
        raise ValueError("both sides of a partition must be nonempty")
    combined = side_a + side_b
    if sorted(combined) != list(range(num_modes)):
        raise ValueError(
            f"partition {partition} must split the modes 0..{num_modes - 1} "
            "into two disjoint covering sides"
        )
    return side_a, side_b


def default_partition(num_modes: int):
    """Mode 0 against everything else."""
    if num_modes < 2:
        raise ValueError(f"need at least 2 modes for a bipartition, got {num_modes}")
    return (0,), tuple(range(1, num_modes))


def _resolve_partition(partition, num_modes: int):
    if partition is None:
        return default_partition(num_modes)
    return normalize_partition(partition, num_modes)


def _grouped_matrix(matrix, index_map: CompositeIndexMap, partition):
    """Permute the modes of side_a before side_b and merge each side.

    Returns the grouped matrix and the 2-mode map (dim_a, dim_b).
    """
    side_a, side_b = partition
    order = side_a + side_b
    if order != tuple(range(index_map.num_modes)):
        matrix = linalg.permute_modes(matrix, index_map, order)
    dim_a = math.prod(index_map.dims[s] for s in side_a)
    dim_b = math.prod(index_map.dims[s] for s in side_b)
    return matrix, CompositeIndexMap((dim_a, dim_b))


def _grouped_vector(amplitudes, index_map: CompositeIndexMap, partition):
    side_a, side_b = partition
    order = side_a + side_b
    if order != tuple(range(index_map.num_modes)):
        amplitudes = linalg.permute_vector_modes(amplitudes, index_map, order)
    dim_a = math.prod(index_map.dims[s] for s in side_a)
    dim_b = math.prod(index_map.dims[s] for s in side_b)
    return amplitudes, dim_a, dim_b


@dataclass(eq=False)
class Witness:
    """Hermitian test operator with a separable bound of known provenance."""

    operator: np.ndarray
    sep_bound: float
    bound_kind: str
    index_map: CompositeIndexMap
    partition: tuple[tuple[int, ...], tuple[int, ...]]


@dataclass(eq=False)
class CriterionResult:
    """Outcome of one criterion evaluation.

    ``value`` is oriented so that value > threshold certifies entanglement;
    the verdict is only ever "entangled" or "inconclusive", never "separable".
    """

    criterion_name: str
    value: float
    threshold: float
    verdict: str
    detail: dict = field(default_factory=dict)


@dataclass(eq=False)
class Certificate:
    """A witness together with the measured expectation that certified."""

    witness: Witness
    measured_value: float
    margin: float
    subspace_dims: tuple[int, ...]
    lifted: bool = False


@dataclass(eq=False)
class SchmidtDecomposition:
    """Schmidt data of a bipartite vector: positive descending coefficients
    and orthonormal vector columns for each side."""

    coefficients: np.ndarray
    left_vectors: np.ndarray
    right_vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        """Rebuild the grouped amplitude vector sum_l c_l a_l x b_l."""
        dim_a = self.left_vectors.shape[0]
        dim_b = self.right_vectors.shape[0]
        out = np.zeros(dim_a * dim_b, dtype=complex)
        for l, c in enumerate(self.coefficients):
            out += c * np.kron(self.left_vectors[:, l], self.right_vectors[:, l])
        return out


@dataclass(eq=False)
class SeesawResult:
    """Best product-vector expectation found by alternating maximization."""

    value: float
    vec_a: np.ndarray
    vec_b: np.ndarray
    trajectories: list[list[float]]


def spectral_decompose(rho: DensityState, tol: float = 1e-12):
    """Eigen-decompose a density operator into (weight, PureStateVec) pairs.

    Weights are descending and only components above ``tol`` are kept, so the
    pairs reconstruct the matrix within diagonalization accuracy.
    """
    spectrum = linalg.eigh(rho.matrix)
    pairs = []
    for idx in range(len(spectrum.eigenvalues) - 1, -1, -1):
        weight = float(spectrum.eigenvalues[idx])
        if weight <= tol:
            break
        vec = spectrum.eigenvectors[:, idx]
        pairs.append((weight, PureStateVec(rho.index_map, vec, float(np.linalg.norm(vec)))))
    return pairs


def schmidt_decompose(psi: PureStateVec, partition=None) -> SchmidtDecomposition:
    """Schmidt decomposition of a bipartite (or grouped) vector via SVD."""
    partition = _resolve_partition(partition, psi.index_map.num_modes)
    grouped, dim_a, dim_b = _grouped_vector(psi.amplitudes, psi.index_map, partition)
    left, coefficients, right_h = np.linalg.svd(grouped.reshape(dim_a, dim_b), full_matrices=False)
    keep = coefficients > 1e-14
    # With M = U S Vh the vector is sum_l s_l U[:, l] x Vh[l, :], so the right
    # Schmidt vectors are the rows of Vh, not their conjugates.
    return SchmidtDecomposition(
        coefficients=coefficients[keep],
        left_vectors=left[:, keep],
        right_vectors=right_h[keep, :].T,
    )


def ppt_check(rho: DensityState, partition=None, tol_detect: float = TOL_DETECT) -> CriterionResult:
    """Partial-transpose criterion: a negative eigenvalue certifies
    entanglement across the partition.

    ``value`` is minus the smallest eigenvalue of the partial transpose;
    detail carries the eigenvalue and the negativity (sum of the magnitudes
    of all negative eigenvalues).
    """
    partition = _resolve_partition(partition, rho.index_map.num_modes)
    pt = linalg.partial_transpose(rho.matrix, rho.index_map, partition[1])
    eigenvalues = np.linalg.eigvalsh((pt + pt.conj().T) / 2)
    min_eig = float(eigenvalues[0])
    negativity = float(np.sum(np.abs(eigenvalues[eigenvalues < 0])))
    verdict = "entangled" if min_eig < -tol_detect else "inconclusive"
    return CriterionResult(
        criterion_name="ppt",
        value=-min_eig,
        threshold=tol_detect,
        verdict=verdict,
        detail={
            "min_eigenvalue": min_eig,
            "negativity": negativity,
            "partition": partition,
        },
    )


def realignment_check(rho: DensityState, partition=None, tol_detect: float = TOL_DETECT) -> CriterionResult:
    """Realignment criterion: trace-normalize, group the bipartition, realign
    and sum singular values; a sum above one certifies entanglement.

    ``value`` is the singular-value sum minus one.  The criterion can fire on
    states with positive partial transpose, in which case no product-bound
    witness is extracted here; callers needing a certificate must fall back
    to a witness-form construction.
    """
    partition = _resolve_partition(partition, rho.index_map.num_modes)
    if rho.trace <= 0:
        raise ValueError(f"cannot normalize state with trace {rho.trace:.6g}")
    grouped, pair_map = _grouped_matrix(rho.matrix, rho.index_map, partition)
    sigma_sum = float(np.sum(linalg.svd_values(linalg.realign(grouped / rho.trace, pair_map))))
    value = sigma_sum - 1.0
    verdict = "entangled" if value > tol_detect else "inconclusive"
    return CriterionResult(
        criterion_name="realign",
        value=value,
        threshold=tol_detect,
        verdict=verdict,
        detail={"sigma_sum": sigma_sum, "partition": partition},
    )


def pure_projector_bound(psi: PureStateVec, partition=None) -> float:
    """Exact separable bound of the projector onto a unit vector: the squared
    top Schmidt coefficient across the partition."""
    if abs(psi.norm - 1.0) > 1e-10:
        raise ValueError(f"projector bound needs a unit vector, got norm {psi.norm:.12g}")
    schmidt = schmidt_decompose(psi, partition)
    top = float(schmidt.coefficients[0])
    return top * top


def pure_projector_witness(psi: PureStateVec, partition=None) -> Witness:
    """Witness |psi><psi| with its analytic separable bound."""
    partition = _resolve_partition(partition, psi.index_map.num_modes)
    bound = pure_projector_bound(psi, partition)
    return Witness(
        operator=np.outer(psi.amplitudes, psi.amplitudes.conj()),
        sep_bound=bound,
        bound_kind=BOUND_ANALYTIC,
        index_map=psi.index_map,
        partition=partition,
    )


def witness_expectation(rho: DensityState, witness: Witness, tol_detect: float = TOL_DETECT) -> CriterionResult:
    """Evaluate tr(rho W) - sep_bound; certifies only for bound kinds whose
    separable bound is exact or valid by construction."""
    if rho.index_map.dims != witness.index_map.dims:
        raise ValueError(
            f"state dims {rho.index_map.dims} do not match witness dims {witness.index_map.dims}"
        )
    expectation = float(np.real(np.trace(rho.matrix @ witness.operator)))
    value = expectation - witness.sep_bound
    certifying = witness.bound_kind in CERTIFYING_BOUND_KINDS
    verdict = "entangled" if (certifying and value > tol_detect) else "inconclusive"
    return CriterionResult(
        criterion_name="witness",
        value=value,
        threshold=tol_detect,
        verdict=verdict,
        detail={
            "expectation": expectation,
            "sep_bound": witness.sep_bound,
            "bound_kind": witness.bound_kind,
            "partition": witness.partition,
        },
    )


def witness_check(rho: DensityState, partition=None, tol_detect: float = TOL_DETECT) -> CriterionResult:
    """Witness criterion: test against the pure projector witness built from
    the dominant eigenvector of the state itself.

    For nearly pure entangled states the dominant eigenvector has a squared
    top Schmidt coefficient strictly below its weight, so the expectation
    beats the analytic bound.  The constructed witness is returned under
    detail["witness"] so a certificate can be assembled without recomputing.
    """
    partition = _resolve_partition(partition, rho.index_map.num_modes)
    spectrum = linalg.eigh(rho.matrix)
    top_vec = spectrum.eigenvectors[:, -1]
    psi = PureStateVec(rho.index_map, top_vec, float(np.linalg.norm(top_vec)))
    witness = pure_projector_witness(psi, partition)
    result = witness_expectation(rho, witness, tol_detect)
    result.detail["witness"] = witness
    return result


def _top_eigvec(matrix: np.ndarray) -> tuple[float, np.ndarray]:
    """Deterministic top eigenvector of a Hermitian matrix.

    Near-degenerate top eigenvalues (within 1e-12) are tie-broken by the
    lexicographically largest absolute component sequence, and the global
    phase is fixed so the largest-magnitude component is real positive.
    """
    eigenvalues, eigenvectors = np.linalg.eigh((matrix + matrix.conj().T) / 2)
    top = eigenvalues[-1]
    candidates = [i for i in range(len(eigenvalues)) if eigenvalues[i] >= top - 1e-12]
    pick = max(candidates, key=lambda i: tuple(np.abs(eigenvectors[:, i])))
    vec = eigenvectors[:, pick]
    anchor = int(np.argmax(np.abs(vec)))
    phase = vec[anchor] / abs(vec[anchor])
    return float(top), vec * phase.conjugate()


def _random_unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    vec = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return vec / np.linalg.norm(vec)


def seesaw_separable_bound(
    operator,
    index_map: CompositeIndexMap,
    partition=None,
    restarts: int = 16,
    max_iters: int = 500,
    tol_conv: float = 1e-10,
    seed: int = 0,
) -> SeesawResult:
    """Alternating maximization of <a x b| A |a x b> over product vectors.

    Fixing one side reduces the objective to a Hermitian form on the other,
    whose maximizer is the top eigenvector, so each half-step is optimal and
    the objective never decreases.  Restart streams are spawned from a single
    seed sequence, making the whole run reproducible.  The result is a lower
    estimate of the separable bound; it certifies nothing by itself.
    """
    if restarts < 1:
        raise ValueError(f"restarts must be >= 1, got {restarts}")
    if max_iters < 1:
        raise ValueError(f"max_iters must be >= 1, got {max_iters}")
    partition = _resolve_partition(partition, index_map.num_modes)
    sym = linalg.require_hermitian(operator, name="witness operator")
    if sym.shape[0] != index_map.total_dim:
        raise ValueError(
            f"operator dimension {sym.shape[0]} does not match composite dimension {index_map.total_dim}"
        )
    grouped, pair_map = _grouped_matrix(sym, index_map, partition)
    dim_a, dim_b = pair_map.dims
    tensor = grouped.reshape(dim_a, dim_b, dim_a, dim_b)

    best_value = -math.inf
    best_a = None
    best_b = None
    trajectories = []
    for seq in np.random.SeedSequence(seed).spawn(restarts):
        rng = np.random.default_rng(seq)
        vec_b = _random_unit(rng, dim_b)
        vec_a = _random_unit(rng, dim_a)
        trajectory = []
        previous = -math.inf
        for _ in range(max_iters):
            side_a = np.einsum("ibjc,b,c->ij", tensor, vec_b.conj(), vec_b)
            obj_a, vec_a = _top_eigvec(side_a)
            trajectory.append(obj_a)
            side_b = np.einsum("ibjc,i,j->bc", tensor, vec_a.conj(), vec_a)
            obj_b, vec_b = _top_eigvec(side_b)
            trajectory.append(obj_b)
            if obj_b - previous < tol_conv:
                previous = obj_b
                break
            previous = obj_b
        trajectories.append(trajectory)
        if previous > best_value:
            best_value = previous
            best_a = vec_a
            best_b = vec_b
    return SeesawResult(float(best_value), best_a, best_b, trajectories)


def extract_pt_witness(rho: DensityState, partition=None, tol_detect: float = TOL_DETECT) -> Witness:
    """Build a witness from the most negative partial-transpose eigenvector.

    With eta that eigenvector, the witness is minus the partial transpose of
    |eta><eta|.  Its expectation on any product vector a x b equals
    -|<eta| a x conj(b)>|^2 <= 0, so the separable bound is zero by
    construction, while the expectation on the state itself is minus the
    negative eigenvalue, strictly positive.
    """
    partition = _resolve_partition(partition, rho.index_map.num_modes)
    pt = linalg.partial_transpose(rho.matrix, rho.index_map, partition[1])
    spectrum = linalg.eigh(pt)
    min_eig = float(spectrum.eigenvalues[0])
    if min_eig >= -tol_detect:
        raise ValueError(
            f"partial transpose has no negative eigenvalue below -{tol_detect:g} "
            f"(min eigenvalue {min_eig:.6g}); no witness to extract"
        )
    eta = spectrum.eigenvectors[:, 0]
    operator = -linalg.partial_transpose(
        np.outer(eta, eta.conj()), rho.index_map, partition[1]
    )
    return Witness(
        operator=operator,
        sep_bound=0.0,
        bound_kind=BOUND_NONNEG,
        index_map=rho.index_map,
        partition=partition,
    )


def _embedding_indices(sub_map: CompositeIndexMap, full_map: CompositeIndexMap) -> np.ndarray:
    """Composite indices of the leading sub-block inside the larger space,
    ordered exactly as the sub-map enumerates its own basis."""
    return np.array(
        [full_map.flat(t) for t in product(*(range(d) for d in sub_map.dims))],
        dtype=int,
    )


def lift_certificate(certificate: Certificate, full_dims) -> Certificate:
    """Zero-pad a certificate's witness into a larger space.

    Sound only when the padded witness cannot beat its separable bound on the
    enlarged product vectors, which holds for positive semidefinite operators
    with nonnegative bounds and for nonneg-by-construction witnesses.  The
    measured value is preserved exactly: the padded operator annihilates
    everything outside the original block, so its trace against any state
    truncating to the certified one is unchanged.
    """
    witness = certificate.witness
    full_dims = tuple(int(d) for d in full_dims)
    sub_dims = witness.index_map.dims
    if len(full_dims) != len(sub_dims):
        raise ValueError(f"target dims {full_dims} have wrong mode count, expected {len(sub_dims)}")
    if any(f < s for f, s in zip(full_dims, sub_dims)):
        raise ValueError(f"target dims {full_dims} must dominate witness dims {sub_dims}")

    if witness.bound_kind != BOUND_NONNEG:
        min_eig = float(np.linalg.eigvalsh(
            (witness.operator + witness.operator.conj().T) / 2
        )[0])
        if min_eig < -1e-10 or witness.sep_bound < 0:
            raise ValueError(
                "lifting an indefinite witness is unsound: zero-padding can only "
                f"be certified for PSD operators (min eigenvalue {min_eig:.6g})"
            )

    full_map = CompositeIndexMap(full_dims)
    padded = np.zeros((full_map.total_dim,) * 2, dtype=complex)
    block = _embedding_indices(witness.index_map, full_map)
    padded[np.ix_(block, block)] = witness.operator
    lifted = Witness(
        operator=padded,
        sep_bound=witness.sep_bound,
        bound_kind=witness.bound_kind,
        index_map=full_map,
        partition=witness.partition,
    )
    return Certificate(
        witness=lifted,
        measured_value=certificate.measured_value,
        margin=certificate.margin,
        subspace_dims=certificate.subspace_dims,
        lifted=True,
    )
