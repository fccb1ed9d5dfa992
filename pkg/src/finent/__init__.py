"""finent: entanglement verification in finite-dimensional truncations.

The package decides entanglement of bipartite and multipartite states,
including truncations of infinite-dimensional ones, by projecting onto
finite subspaces of escalating dimension and applying criteria with sound
detection directions: a firing criterion certifies entanglement, while an
exhausted dimension budget only reports "undecided", never separability.

Modules
-------
linalg
    composite-index bookkeeping and the dense matrix primitives.
states
    state families, separable sampling, validation and qstate file I/O.
criteria
    PPT, realignment and witness criteria, seesaw bounds, certificates.
escalate
    the dimension-escalation driver and multipartite bipartition scans.
cli
    the ``finent`` command line tool.
"""

__version__ = "0.1.0"

from .linalg import (
    CompositeIndexMap,
    HermitianSpectrum,
    eigh,
    kron,
    partial_trace,
    partial_transpose,
    permute_modes,
    permute_vector_modes,
    realign,
    require_hermitian,
    svd_values,
)
from .states import (
    DensityState,
    HermiticityError,
    PositivityError,
    PureStateVec,
    QStateParseError,
    SeparableEnsemble,
    StateValidationError,
    TraceError,
    gen_chik,
    gen_isotropic,
    gen_partial_ent,
    gen_separable_random,
    gen_tmsv,
    read_qstate,
    validate_density,
    write_qstate,
)
from .criteria import (
    BOUND_ANALYTIC,
    BOUND_NONNEG,
    BOUND_SEESAW,
    TOL_DETECT,
    Certificate,
    CriterionResult,
    SchmidtDecomposition,
    SeesawResult,
    Witness,
    default_partition,
    extract_pt_witness,
    lift_certificate,
    normalize_partition,
    ppt_check,
    pure_projector_bound,
    pure_projector_witness,
    realignment_check,
    schmidt_decompose,
    seesaw_separable_bound,
    spectral_decompose,
    witness_check,
    witness_expectation,
)
from .escalate import (
    AnalyticFamily,
    EscalationConfig,
    EscalationError,
    FiniteSource,
    ScanResult,
    StateProvider,
    StepRecord,
    TruncationResult,
    Verdict,
    bipartitions,
    multipartite_scan,
    truncate,
    verify_escalating,
)

__all__ = [name for name in dir() if not name.startswith("_")]
