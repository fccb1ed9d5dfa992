"""Dimension-escalating verification and multipartite bipartition scans.

A state source either owns a fixed matrix on known ambient dimensions
(:class:`FiniteSource`) or emits truncations of an analytic family at any
requested dimensions (:class:`AnalyticFamily`).  The driver walks a growing
sequence of uniform truncation dimensions, runs the configured criteria on
each reduced state and stops at the first certification, returning a witness
certificate lifted back to the ambient space when one is known.

A verdict of "undecided" never claims separability; it only means no
configured criterion fired within the dimension budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from itertools import combinations

import numpy as np

from . import criteria as _criteria
from .criteria import (
    Certificate,
    TOL_DETECT,
    extract_pt_witness,
    lift_certificate,
    ppt_check,
    realignment_check,
    witness_check,
)
from .linalg import CompositeIndexMap
from .states import DensityState

CRITERION_FUNCS = {
    "ppt": ppt_check,
    "realign": realignment_check,
    "witness": witness_check,
}

GROWTH_MODES = ("increment", "double")

# Below this captured trace the reduced state carries no usable signal and
# normalization blows up; the step is skipped with a diagnostic.
MIN_CAPTURED_TRACE = 1e-12


class EscalationError(RuntimeError):
    """A criterion or truncation failed mid-escalation; carries context."""

    def __init__(self, dims, criterion_name, original: Exception):
        super().__init__(
            f"escalation aborted at dims {dims}"
            + (f", criterion {criterion_name}" if criterion_name else "")
            + f": {original}"
        )
        self.dims = tuple(dims)
        self.criterion_name = criterion_name


@dataclass(eq=False)
class TruncationResult:
    reduced: DensityState
    captured_trace: float
    dims_used: tuple[int, ...]


class StateProvider:
    """Source of states at requested truncation dimensions."""

    num_modes: int
    ambient_dims: tuple[int, ...] | None

    def emit(self, dims) -> DensityState:
        raise NotImplementedError


class FiniteSource(StateProvider):
    """A fixed density operator; truncations are leading-index blocks."""

    def __init__(self, state: DensityState):
        self.state = state
        self.num_modes = state.index_map.num_modes
        self.ambient_dims = state.index_map.dims

    def emit(self, dims) -> DensityState:
        dims = tuple(int(d) for d in dims)
        if len(dims) != self.num_modes:
            raise ValueError(f"expected {self.num_modes} dims, got {len(dims)}")
        if any(d < 1 for d in dims):
            raise ValueError(f"dims must be >= 1, got {dims}")
        if any(d > a for d, a in zip(dims, self.ambient_dims)):
            raise ValueError(f"dims {dims} exceed ambient dims {self.ambient_dims}")
        if dims == self.ambient_dims:
            matrix = self.state.matrix.copy()
        else:
            tensor = self.state.matrix.reshape(self.ambient_dims * 2)
            window = tuple(slice(0, d) for d in dims) * 2
            total = math.prod(dims)
            matrix = np.ascontiguousarray(tensor[window]).reshape(total, total)
        index_map = CompositeIndexMap(dims)
        trace = float(np.real(np.trace(matrix)))
        return DensityState(index_map, matrix, trace, truncated=True)


class AnalyticFamily(StateProvider):
    """Closed-form family that can be emitted at any truncation dimensions.

    Registered families:

    ``tmsv`` (param ``lam``)
        two-mode squeezed vacuum; emission at (d1, d2) keeps the number
        components n < min(d1, d2).
    ``chik`` (param ``k``)
        the superposition (|0,0> + |k,k>)/sqrt(2); truncations below k + 1
        collapse to half a vacuum projector.

    Emissions are projection-compatible: truncating an emission reproduces
    the emission at the smaller dimensions.
    """

    def __init__(self, family: str, **params):
        if family not in ("tmsv", "chik"):
            raise ValueError(f"unknown analytic family {family!r}")
        self.family = family
        self.params = dict(params)
        self.num_modes = 2
        self.ambient_dims = None
        if family == "tmsv":
            lam = float(self.params.get("lam", 0.0))
            if not 0.0 <= lam < 1.0:
                raise ValueError(f"squeezing parameter must lie in [0, 1), got {lam}")
            self.params["lam"] = lam
        else:
            k = int(self.params.get("k", 1))
            if k < 1:
                raise ValueError(f"k must be >= 1, got {k}")
            self.params["k"] = k

    def emit(self, dims) -> DensityState:
        dims = tuple(int(d) for d in dims)
        if len(dims) != self.num_modes:
            raise ValueError(f"expected {self.num_modes} dims, got {len(dims)}")
        if any(d < 1 for d in dims):
            raise ValueError(f"dims must be >= 1, got {dims}")
        index_map = CompositeIndexMap(dims)
        amplitudes = np.zeros(index_map.total_dim, dtype=complex)
        if self.family == "tmsv":
            lam = self.params["lam"]
            scale = math.sqrt(1.0 - lam * lam)
            for n in range(min(dims)):
                amplitudes[index_map.flat((n, n))] = scale * lam ** n
        else:
            k = self.params["k"]
            amplitudes[index_map.flat((0, 0))] = 1 / math.sqrt(2)
            if min(dims) > k:
                amplitudes[index_map.flat((k, k))] = 1 / math.sqrt(2)
        matrix = np.outer(amplitudes, amplitudes.conj())
        trace = float(np.real(np.vdot(amplitudes, amplitudes)))
        return DensityState(index_map, matrix, trace, truncated=True)


def truncate(source: StateProvider, dims) -> TruncationResult:
    """Project a source onto the leading block with the given per-mode dims."""
    reduced = source.emit(dims)
    return TruncationResult(reduced, reduced.trace, reduced.index_map.dims)


@dataclass
class EscalationConfig:
    d_start: int = 2
    d_max: int = 8
    growth: str = "increment"
    criteria: tuple[str, ...] = ("ppt",)
    tol_detect: float = TOL_DETECT
    partition: tuple | None = None

    def __post_init__(self):
        self.d_start = int(self.d_start)
        self.d_max = int(self.d_max)
        if self.d_start < 1:
            raise ValueError(f"d_start must be >= 1, got {self.d_start}")
        if self.d_max < self.d_start:
            raise ValueError(f"d_max {self.d_max} must be >= d_start {self.d_start}")
        if self.growth not in GROWTH_MODES:
            raise ValueError(f"growth must be one of {GROWTH_MODES}, got {self.growth!r}")
        self.criteria = tuple(self.criteria)
        if not self.criteria:
            raise ValueError("at least one criterion is required")
        for name in self.criteria:
            if name not in CRITERION_FUNCS:
                raise ValueError(
                    f"unknown criterion {name!r}, expected one of {tuple(CRITERION_FUNCS)}"
                )


@dataclass(eq=False)
class StepRecord:
    dims: tuple[int, ...]
    criterion_name: str
    value: float
    verdict: str
    captured_trace: float
    detail: dict = field(default_factory=dict)


@dataclass(eq=False)
class Verdict:
    """Escalation outcome.

    ``outcome`` is "entangled" (with a certificate) or "undecided"; ``dims``
    are the detecting dimensions, or the largest examined when undecided.
    """

    outcome: str
    dims: tuple[int, ...]
    certificate: Certificate | None
    criterion_name: str | None
    trace_history: list[tuple[tuple[int, ...], float]]
    steps: list[StepRecord]
    diagnostics: list[str]


def _certificate_for(criterion_name, result, reduced, partition, dims, tol_detect):
    """Turn a firing criterion into a witness certificate, or None.

    The realignment value is not itself a product-bound witness; a firing
    realignment step falls back to the partial-transpose witness and then to
    the dominant-eigenvector witness.  Both can fail on states that are
    entangled but positive under partial transpose, in which case there is
    nothing sound to certify with here.
    """
    if criterion_name == "ppt":
        witness = extract_pt_witness(reduced, partition, tol_detect)
        measured = float(np.real(np.trace(reduced.matrix @ witness.operator)))
        return Certificate(witness, measured, measured - witness.sep_bound, dims)
    if criterion_name == "witness":
        witness = result.detail["witness"]
        measured = result.detail["expectation"]
        return Certificate(witness, measured, measured - witness.sep_bound, dims)
    try:
        return _certificate_for("ppt", result, reduced, partition, dims, tol_detect)
    except ValueError:
        pass
    fallback = witness_check(reduced, partition, tol_detect)
    if fallback.verdict == "entangled":
        return _certificate_for("witness", fallback, reduced, partition, dims, tol_detect)
    return None


def _dimension_schedule(config: EscalationConfig):
    d = config.d_start
    while d <= config.d_max:
        yield d
        d = d + 1 if config.growth == "increment" else d * 2


def verify_escalating(source: StateProvider, config: EscalationConfig) -> Verdict:
    """Escalate truncation dimensions until a criterion certifies or the
    budget runs out.

    For finite sources the per-mode dimensions are clamped to the ambient
    ones and the walk stops once they saturate.  A certificate found below
    the ambient dimensions is lifted back to them by zero padding.
    """
    partition = _criteria._resolve_partition(config.partition, source.num_modes)
    trace_history: list[tuple[tuple[int, ...], float]] = []
    steps: list[StepRecord] = []
    diagnostics: list[str] = []
    last_dims: tuple[int, ...] | None = None

    for d in _dimension_schedule(config):
        if source.ambient_dims is None:
            dims = (d,) * source.num_modes
        else:
            dims = tuple(min(d, a) for a in source.ambient_dims)
        if dims == last_dims:
            diagnostics.append(
                f"ambient dims {source.ambient_dims} saturated at {dims}; stopping early"
            )
            break
        last_dims = dims

        try:
            truncation = truncate(source, dims)
        except Exception as exc:
            raise EscalationError(dims, None, exc) from exc
        trace_history.append((dims, truncation.captured_trace))
        if truncation.captured_trace < MIN_CAPTURED_TRACE:
            diagnostics.append(
                f"captured trace {truncation.captured_trace:.3g} at dims {dims} "
                "is below the usable floor; skipping criteria"
            )
            continue

        for name in config.criteria:
            try:
                result = CRITERION_FUNCS[name](truncation.reduced, partition, config.tol_detect)
            except Exception as exc:
                raise EscalationError(dims, name, exc) from exc
            steps.append(StepRecord(
                dims=dims,
                criterion_name=name,
                value=result.value,
                verdict=result.verdict,
                captured_trace=truncation.captured_trace,
                detail=result.detail,
            ))
            if result.verdict != "entangled":
                continue
            try:
                certificate = _certificate_for(
                    name, result, truncation.reduced, partition, dims, config.tol_detect
                )
            except Exception as exc:
                raise EscalationError(dims, name, exc) from exc
            if certificate is None:
                diagnostics.append(
                    f"criterion {name} fired at dims {dims} but no product-bound witness "
                    "could be constructed (state may be entangled with positive partial "
                    "transpose); continuing without a certificate"
                )
                continue
            if source.ambient_dims is not None and dims != source.ambient_dims:
                certificate = lift_certificate(certificate, source.ambient_dims)
            return Verdict(
                outcome="entangled",
                dims=dims,
                certificate=certificate,
                criterion_name=name,
                trace_history=trace_history,
                steps=steps,
                diagnostics=diagnostics,
            )

    return Verdict(
        outcome="undecided",
        dims=last_dims if last_dims is not None else (),
        certificate=None,
        criterion_name=None,
        trace_history=trace_history,
        steps=steps,
        diagnostics=diagnostics,
    )


def bipartitions(num_modes: int):
    """Canonical bipartitions of M modes: every proper subset containing mode
    0 against its complement, ordered by side size then lexicographically.

    There are 2^(M-1) - 1 of them.
    """
    num_modes = int(num_modes)
    if num_modes < 2:
        raise ValueError(f"need at least 2 modes, got {num_modes}")
    rest = range(1, num_modes)
    out = []
    for size in range(num_modes - 1):
        for extra in combinations(rest, size):
            side_a = (0,) + extra
            side_b = tuple(m for m in rest if m not in extra)
            out.append((side_a, side_b))
    return out


@dataclass(eq=False)
class ScanResult:
    """Escalation verdicts per canonical bipartition.

    ``entangled`` is true when any bipartition certified; partitions left
    undecided are reported as such, never as separable.
    """

    verdicts: dict
    entangled: bool


def multipartite_scan(source: StateProvider, config: EscalationConfig) -> ScanResult:
    """Run the escalation over every canonical bipartition."""
    if config.partition is not None:
        raise ValueError("a scan enumerates partitions itself; leave config.partition unset")
    verdicts = {}
    for partition in bipartitions(source.num_modes):
        verdicts[partition] = verify_escalating(source, replace(config, partition=partition))
    return ScanResult(
        verdicts=verdicts,
        entangled=any(v.outcome == "entangled" for v in verdicts.values()),
    )
