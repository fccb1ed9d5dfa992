"""Tests for truncation sources, the dimension-escalation driver and the
multipartite bipartition scan."""

import numpy as np
import pytest

from finent.criteria import BOUND_ANALYTIC, BOUND_NONNEG, witness_expectation
from finent.escalate import (
    AnalyticFamily,
    EscalationConfig,
    FiniteSource,
    bipartitions,
    multipartite_scan,
    truncate,
    verify_escalating,
)
from finent.linalg import CompositeIndexMap
from finent.states import (
    gen_chik,
    gen_partial_ent,
    gen_separable_random,
    validate_density,
)


def _chik_source(k, ambient):
    return FiniteSource(gen_chik(k, ambient).to_density())


def test_truncate_chik_block():
    source = _chik_source(3, 4)
    below = truncate(source, (3, 3))
    assert below.dims_used == (3, 3)
    assert np.isclose(below.captured_trace, 0.5, atol=1e-12)
    expected = np.zeros((9, 9), dtype=complex)
    expected[0, 0] = 0.5
    assert np.allclose(below.reduced.matrix, expected, atol=1e-15)
    full = truncate(source, (4, 4))
    assert np.isclose(full.captured_trace, 1.0, atol=1e-12)
    assert np.array_equal(full.reduced.matrix, source.state.matrix)


def test_truncate_rejects_beyond_ambient():
    source = _chik_source(1, 2)
    with pytest.raises(ValueError):
        truncate(source, (3, 2))
    with pytest.raises(ValueError):
        truncate(source, (2,))


def test_truncate_is_idempotent():
    source = _chik_source(2, 5)
    once = truncate(source, (3, 3))
    twice = truncate(FiniteSource(once.reduced), (3, 3))
    assert np.array_equal(once.reduced.matrix, twice.reduced.matrix)


def test_analytic_chik_matches_finite_truncation():
    family = AnalyticFamily("chik", k=2)
    source = _chik_source(2, 6)
    for d in (1, 2, 3, 5):
        emitted = family.emit((d, d))
        cut = truncate(source, (d, d)).reduced
        assert np.max(np.abs(emitted.matrix - cut.matrix)) < 1e-12
        assert np.isclose(emitted.trace, cut.trace, atol=1e-12)


def test_analytic_tmsv_captured_traces():
    lam = 0.6
    family = AnalyticFamily("tmsv", lam=lam)
    for d in range(1, 8):
        result = truncate(family, (d, d))
        assert np.isclose(result.captured_trace, 1.0 - lam ** (2 * d), atol=1e-12)


def test_analytic_family_rejects_bad_params():
    with pytest.raises(ValueError):
        AnalyticFamily("tmsv", lam=1.0)
    with pytest.raises(ValueError):
        AnalyticFamily("chik", k=0)
    with pytest.raises(ValueError):
        AnalyticFamily("ghz")


def test_escalation_chik_detects_at_k_plus_one():
    verdict = verify_escalating(
        AnalyticFamily("chik", k=3),
        EscalationConfig(d_start=2, d_max=8, criteria=("ppt",)),
    )
    assert verdict.outcome == "entangled"
    assert verdict.dims == (4, 4)
    assert verdict.criterion_name == "ppt"
    for step in verdict.steps[:-1]:
        assert step.verdict == "inconclusive"
        assert step.detail["min_eigenvalue"] >= -1e-12
    final = verdict.steps[-1]
    assert np.isclose(final.detail["min_eigenvalue"], -0.5, atol=1e-10)
    assert np.isclose(final.captured_trace, 1.0, atol=1e-12)


def test_escalation_tmsv_detects_at_two():
    lam = 0.6
    verdict = verify_escalating(
        AnalyticFamily("tmsv", lam=lam),
        EscalationConfig(d_start=2, d_max=6, criteria=("ppt",)),
    )
    assert verdict.outcome == "entangled"
    assert verdict.dims == (2, 2)
    # For sqrt(1-l^2)(|00> + l|11>) the most negative PT eigenvalue is the
    # off-diagonal product -(1 - l^2) l.
    assert np.isclose(
        verdict.steps[-1].detail["min_eigenvalue"], -(1 - lam ** 2) * lam, atol=1e-12
    )


def test_escalation_undecided_on_separable():
    source = FiniteSource(gen_separable_random(5, (3, 3), seed=11).to_density())
    verdict = verify_escalating(
        source, EscalationConfig(d_start=2, d_max=8, criteria=("ppt", "realign", "witness"))
    )
    assert verdict.outcome == "undecided"
    assert verdict.certificate is None
    assert all(step.verdict == "inconclusive" for step in verdict.steps)


def test_escalation_clamps_to_ambient_and_stops():
    source = FiniteSource(gen_separable_random(4, (2, 2), seed=3).to_density())
    verdict = verify_escalating(source, EscalationConfig(d_start=2, d_max=8, criteria=("ppt",)))
    assert verdict.outcome == "undecided"
    assert verdict.dims == (2, 2)
    assert [dims for dims, _ in verdict.trace_history] == [(2, 2)]
    assert any("saturated" in note for note in verdict.diagnostics)


def test_escalation_skips_unusable_capture():
    # A state living entirely above the first truncation window.
    m = CompositeIndexMap((2, 2))
    excited = np.zeros((4, 4), dtype=complex)
    excited[3, 3] = 1.0
    source = FiniteSource(validate_density(excited, m))
    verdict = verify_escalating(source, EscalationConfig(d_start=1, d_max=4, criteria=("ppt",)))
    assert verdict.outcome == "undecided"
    assert verdict.trace_history[0] == ((1, 1), 0.0)
    assert any("usable floor" in note for note in verdict.diagnostics)


def test_escalation_double_growth_schedule():
    verdict = verify_escalating(
        AnalyticFamily("chik", k=3),
        EscalationConfig(d_start=2, d_max=16, growth="double", criteria=("ppt",)),
    )
    assert [dims for dims, _ in verdict.trace_history] == [(2, 2), (4, 4)]
    assert verdict.outcome == "entangled"


def test_escalation_lifts_certificate_to_ambient():
    source = _chik_source(2, 6)
    verdict = verify_escalating(source, EscalationConfig(d_start=2, d_max=6, criteria=("ppt",)))
    assert verdict.outcome == "entangled"
    assert verdict.dims == (3, 3)
    cert = verdict.certificate
    assert cert.lifted
    assert cert.witness.index_map.dims == (6, 6)
    assert cert.subspace_dims == (3, 3)
    measured = np.trace(source.state.matrix @ cert.witness.operator).real
    assert np.isclose(measured, cert.measured_value, atol=1e-12)


def test_escalation_certificate_margin_reproducible():
    verdict = verify_escalating(
        AnalyticFamily("chik", k=2),
        EscalationConfig(d_start=2, d_max=6, criteria=("ppt",)),
    )
    cert = verdict.certificate
    assert not cert.lifted
    reduced = truncate(AnalyticFamily("chik", k=2), verdict.dims).reduced
    replay = witness_expectation(reduced, cert.witness)
    assert np.isclose(replay.value, cert.margin, atol=1e-10)


def test_escalation_witness_criterion_certifies():
    verdict = verify_escalating(
        AnalyticFamily("chik", k=2),
        EscalationConfig(d_start=2, d_max=6, criteria=("witness",)),
    )
    assert verdict.outcome == "entangled"
    assert verdict.dims == (3, 3)
    assert verdict.criterion_name == "witness"
    assert verdict.certificate.witness.bound_kind == BOUND_ANALYTIC
    assert np.isclose(verdict.certificate.margin, 0.5, atol=1e-10)


def test_escalation_realign_criterion_with_pt_fallback_certificate():
    verdict = verify_escalating(
        AnalyticFamily("chik", k=2),
        EscalationConfig(d_start=2, d_max=6, criteria=("realign",)),
    )
    assert verdict.outcome == "entangled"
    assert verdict.criterion_name == "realign"
    assert verdict.certificate.witness.bound_kind == BOUND_NONNEG


def test_escalation_is_deterministic():
    config = EscalationConfig(d_start=2, d_max=8, criteria=("ppt", "realign", "witness"))
    source = FiniteSource(gen_separable_random(6, (3, 3), seed=21).to_density())
    first = verify_escalating(source, config)
    second = verify_escalating(source, config)
    assert first.outcome == second.outcome
    assert len(first.steps) == len(second.steps)
    for a, b in zip(first.steps, second.steps):
        assert (a.dims, a.criterion_name, a.value, a.verdict) == (
            b.dims, b.criterion_name, b.value, b.verdict
        )


def test_escalation_config_validation():
    with pytest.raises(ValueError):
        EscalationConfig(d_start=4, d_max=2)
    with pytest.raises(ValueError):
        EscalationConfig(growth="triple")
    with pytest.raises(ValueError):
        EscalationConfig(criteria=("ppt", "magic"))
    with pytest.raises(ValueError):
        EscalationConfig(criteria=())


def test_bipartitions_canonical_order():
    assert bipartitions(2) == [((0,), (1,))]
    assert bipartitions(3) == [
        ((0,), (1, 2)),
        ((0, 1), (2,)),
        ((0, 2), (1,)),
    ]
    four = bipartitions(4)
    assert len(four) == 7
    assert four[0] == ((0,), (1, 2, 3))
    assert ((0, 3), (1, 2)) in four
    with pytest.raises(ValueError):
        bipartitions(1)


def test_scan_partial_entanglement_pattern():
    source = FiniteSource(gen_partial_ent(2).to_density())
    scan = multipartite_scan(source, EscalationConfig(d_start=2, d_max=2, criteria=("ppt",)))
    assert scan.entangled
    by_partition = scan.verdicts
    assert by_partition[((0,), (1, 2))].outcome == "undecided"
    for partition in (((0, 1), (2,)), ((0, 2), (1,))):
        verdict = by_partition[partition]
        assert verdict.outcome == "entangled"
        assert np.isclose(verdict.steps[-1].detail["min_eigenvalue"], -0.5, atol=1e-10)


def test_scan_product_state_all_undecided():
    m = CompositeIndexMap((2, 2, 2))
    vacuum = np.zeros((8, 8), dtype=complex)
    vacuum[0, 0] = 1.0
    source = FiniteSource(validate_density(vacuum, m))
    scan = multipartite_scan(source, EscalationConfig(d_start=2, d_max=2, criteria=("ppt",)))
    assert not scan.entangled
    assert all(v.outcome == "undecided" for v in scan.verdicts.values())


def test_scan_ghz_every_bipartition_fires():
    m = CompositeIndexMap((2, 2, 2))
    amplitudes = np.zeros(8, dtype=complex)
    amplitudes[0] = amplitudes[7] = 1 / np.sqrt(2)
    ghz = validate_density(np.outer(amplitudes, amplitudes.conj()), m)
    scan = multipartite_scan(FiniteSource(ghz), EscalationConfig(d_start=2, d_max=2, criteria=("ppt",)))
    assert all(v.outcome == "entangled" for v in scan.verdicts.values())


def test_scan_rejects_explicit_partition():
    source = FiniteSource(gen_partial_ent(2).to_density())
    config = EscalationConfig(criteria=("ppt",), partition=((0,), (1, 2)))
    with pytest.raises(ValueError):
        multipartite_scan(source, config)
