"""Acceptance suite: end-to-end checks with hard numeric targets and runtime
budgets.  Each test prints one pass/fail line."""

import contextlib
import io
import math
import time

import numpy as np

from finent.cli import main
from finent.criteria import (
    Certificate,
    extract_pt_witness,
    lift_certificate,
    ppt_check,
    pure_projector_bound,
    realignment_check,
    schmidt_decompose,
    seesaw_separable_bound,
    witness_check,
)
from finent.escalate import (
    AnalyticFamily,
    EscalationConfig,
    FiniteSource,
    multipartite_scan,
    truncate,
    verify_escalating,
)
from finent.linalg import CompositeIndexMap, kron, partial_transpose
from finent.states import (
    PureStateVec,
    gen_chik,
    gen_partial_ent,
    gen_separable_random,
    gen_tmsv,
    read_qstate,
    validate_density,
    write_qstate,
)

BASE_SEED = 20260814


class _report(contextlib.AbstractContextManager):
    """Prints '[acceptance] <name>: PASS|FAIL (<elapsed>s)' on exit."""

    def __init__(self, name):
        self.name = name

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    @property
    def elapsed(self):
        return time.perf_counter() - self.start

    def __exit__(self, exc_type, exc, tb):
        status = "PASS" if exc_type is None else "FAIL"
        print(f"[acceptance] {self.name}: {status} ({self.elapsed:.2f}s)")
        return False


def _random_unit(rng, dim):
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def _haar_unitary(rng, dim):
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(g)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def _random_density(rng, index_map):
    d = index_map.total_dim
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    mat = g @ g.conj().T
    return validate_density(mat / np.trace(mat).real, index_map)


def test_acceptance_1_chik_escalation_ladder():
    with _report("chik escalation ladder") as rep:
        for k in range(1, 6):
            source = FiniteSource(gen_chik(k, 8).to_density())
            verdict = verify_escalating(
                source, EscalationConfig(d_start=2, d_max=8, criteria=("ppt",))
            )
            assert verdict.outcome == "entangled"
            assert verdict.dims == (k + 1, k + 1)
            for step in verdict.steps:
                if step.dims[0] <= k:
                    assert step.verdict == "inconclusive"
                    assert step.detail["min_eigenvalue"] >= -1e-12
            final = verdict.steps[-1]
            assert final.dims == (k + 1, k + 1)
            assert abs(final.detail["min_eigenvalue"] + 0.5) <= 1e-10
            assert abs(final.captured_trace - 1.0) <= 1e-12
            assert verdict.certificate is not None
        assert rep.elapsed < 1.0


def test_acceptance_2_tmsv_trace_and_ppt_ladder():
    with _report("tmsv truncation ladder") as rep:
        for lam in (0.3, 0.6, 0.9):
            traces = []
            negativities = []
            for d in range(1, 13):
                rho = gen_tmsv(lam, d)
                assert abs(rho.trace - (1.0 - lam ** (2 * d))) <= 1e-12
                traces.append(rho.trace)
                result = ppt_check(rho)
                if d >= 2:
                    assert result.verdict == "entangled"
                negativities.append(result.detail["negativity"])
            assert all(b > a for a, b in zip(traces, traces[1:]))
            assert all(b >= a - 1e-12 for a, b in zip(negativities, negativities[1:]))
        assert rep.elapsed < 2.0


def test_acceptance_3_seesaw_matches_analytic_bound():
    with _report("seesaw vs analytic projector bound") as rep:
        seed = BASE_SEED + 300
        print(f"[acceptance] seesaw sampling seed: {seed}")
        rng = np.random.default_rng(seed)
        worst = 0.0
        for local_dim in (3, 4):
            index_map = CompositeIndexMap((local_dim, local_dim))
            for i in range(100):
                psi = PureStateVec(index_map, _random_unit(rng, local_dim ** 2), 1.0)
                analytic = pure_projector_bound(psi)
                operator = np.outer(psi.amplitudes, psi.amplitudes.conj())
                numeric = seesaw_separable_bound(
                    operator, index_map, restarts=16, max_iters=500, seed=seed + i
                )
                worst = max(worst, abs(numeric.value - analytic))
                assert abs(numeric.value - analytic) <= 1e-6
        print(f"[acceptance] seesaw worst deviation: {worst:.3g}")
        assert rep.elapsed < 30.0


def test_acceptance_4_separable_soundness():
    with _report("separable soundness sweep") as rep:
        seed = BASE_SEED + 400
        print(f"[acceptance] separable ensemble seeds: {seed}..{seed + 999}")
        dims_cycle = ((2, 2), (2, 3), (3, 3))
        term_rng = np.random.default_rng(seed)
        false_positives = 0
        for i in range(1000):
            dims = dims_cycle[i % 3]
            num_terms = int(term_rng.integers(1, 21))
            rho = gen_separable_random(num_terms, dims, seed=seed + i).to_density()
            for check in (ppt_check, realignment_check, witness_check):
                if check(rho, tol_detect=1e-9).verdict == "entangled":
                    false_positives += 1
        assert false_positives == 0
        assert rep.elapsed < 60.0


def _enlarged_product_soundness(cert, rng, samples=500):
    dims = cert.witness.index_map.dims
    for _ in range(samples):
        vec = np.kron(_random_unit(rng, dims[0]), _random_unit(rng, dims[1]))
        expectation = np.vdot(vec, cert.witness.operator @ vec).real
        assert expectation <= cert.witness.sep_bound + 1e-10


def test_acceptance_5_certificate_lifting():
    with _report("certificate lifting identity") as rep:
        rng = np.random.default_rng(BASE_SEED + 500)
        certificates = []
        # Certificates from the chik escalations, kept at detection dims.
        for k in range(1, 6):
            family = AnalyticFamily("chik", k=k)
            verdict = verify_escalating(
                family, EscalationConfig(d_start=2, d_max=8, criteria=("ppt",))
            )
            assert verdict.outcome == "entangled" and not verdict.certificate.lifted
            certificates.append((family, verdict.certificate))
        # Certificates from the tmsv ladder at every certifying dimension.
        for lam in (0.3, 0.6, 0.9):
            family = AnalyticFamily("tmsv", lam=lam)
            for d in range(2, 13):
                reduced = family.emit((d, d))
                witness = extract_pt_witness(reduced)
                measured = np.trace(reduced.matrix @ witness.operator).real
                certificates.append(
                    (family, Certificate(witness, measured, measured, (d, d)))
                )
        assert len(certificates) == 5 + 3 * 11
        for family, cert in certificates:
            bigger = tuple(d + 2 for d in cert.subspace_dims)
            lifted = lift_certificate(cert, bigger)
            emission = family.emit(bigger)
            replay = np.trace(emission.matrix @ lifted.witness.operator).real
            assert abs(replay - cert.measured_value) <= 1e-12
            _enlarged_product_soundness(lifted, rng, samples=500)


def test_acceptance_6_tripartite_scan():
    with _report("tripartite bipartition scan") as rep:
        source = FiniteSource(gen_partial_ent(2).to_density())
        scan = multipartite_scan(
            source, EscalationConfig(d_start=2, d_max=4, criteria=("ppt",))
        )
        undecided = scan.verdicts[((0,), (1, 2))]
        assert undecided.outcome == "undecided"
        for partition in (((0, 1), (2,)), ((0, 2), (1,))):
            verdict = scan.verdicts[partition]
            assert verdict.outcome == "entangled"
            assert abs(verdict.steps[-1].detail["min_eigenvalue"] + 0.5) <= 1e-10
            assert verdict.certificate is not None
        assert scan.entangled
        assert rep.elapsed < 1.0


def _isotropic_pt_min_eig(p, d):
    """Oracle: assemble the partially transposed isotropic state from its
    closed-form entries and diagonalize."""
    pt = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for k in range(d):
            for j in range(d):
                for l in range(d):
                    val = 0.0
                    if i == l and j == k:
                        val += p / d
                    if i == j and k == l:
                        val += (1.0 - p) / (d * d)
                    pt[i * d + k, j * d + l] = val
    return float(np.linalg.eigvalsh(pt)[0])


def test_acceptance_7_isotropic_threshold_sweep(tmp_path):
    with _report("isotropic threshold sweep") as rep:
        out_csv = tmp_path / "iso.csv"
        with contextlib.redirect_stdout(io.StringIO()):
            code = main([
                "sweep", "--family", "isotropic", "--dim", "3", "--param", "p",
                "--range", "0:0.5:0.001", "--criteria", "ppt", "-o", str(out_csv),
            ])
        assert code == 0
        rows = [line.split(",") for line in out_csv.read_text().splitlines()[1:]]
        assert len(rows) == 501
        grid = [float(r[0]) for r in rows]
        flips = [
            i for i in range(1, len(rows)) if rows[i - 1][4] != rows[i][4]
        ]
        assert len(flips) == 1
        p_flip = grid[flips[0]]
        oracle = [i for i, p in enumerate(grid) if _isotropic_pt_min_eig(p, 3) < -1e-9]
        p_oracle = grid[oracle[0]]
        assert abs(p_flip - p_oracle) <= 0.001 + 1e-12
        assert abs(p_flip - 0.25) <= 0.001 + 1e-9
        assert rep.elapsed < 5.0


def test_acceptance_8_structural_invariants(tmp_path):
    with _report("structural invariants") as rep:
        base = BASE_SEED + 800
        print(f"[acceptance] structural invariant seeds: {base}..{base + 199}")
        for i in range(200):
            rng = np.random.default_rng(base + i)
            num_modes = int(rng.integers(2, 4))
            dims = tuple(int(rng.integers(2, 5)) for _ in range(num_modes))
            index_map = CompositeIndexMap(dims)
            rho = _random_density(rng, index_map)

            # Partial transpose is an involution.
            subset_size = int(rng.integers(1, num_modes))
            subset = tuple(sorted(rng.choice(num_modes, size=subset_size, replace=False)))
            pt = partial_transpose(rho.matrix, index_map, subset)
            assert np.array_equal(partial_transpose(pt, index_map, subset), rho.matrix)

            # The partial-transpose spectrum is local-unitary invariant.
            locals_ = [_haar_unitary(rng, d) for d in dims]
            unitary = locals_[0]
            for factor in locals_[1:]:
                unitary = kron(unitary, factor)
            rotated = unitary @ rho.matrix @ unitary.conj().T
            w0 = np.linalg.eigvalsh(pt)
            w1 = np.linalg.eigvalsh(partial_transpose(rotated, index_map, subset))
            assert np.max(np.abs(w0 - w1)) <= 1e-9

            # Truncation is idempotent.
            cut = tuple(int(rng.integers(1, d + 1)) for d in dims)
            once = truncate(FiniteSource(rho), cut).reduced
            twice = truncate(FiniteSource(once), cut).reduced
            assert np.max(np.abs(once.matrix - twice.matrix)) <= 1e-12

            # Schmidt reconstruction identity on the grouped vector.
            psi = PureStateVec(index_map, _random_unit(rng, index_map.total_dim), 1.0)
            side_a = (0,) if num_modes == 2 else (0, int(rng.integers(1, 3)))
            side_b = tuple(s for s in range(num_modes) if s not in side_a)
            schmidt = schmidt_decompose(psi, (side_a, side_b))
            order = side_a + side_b
            grouped = np.transpose(psi.amplitudes.reshape(dims), order).reshape(-1)
            assert np.max(np.abs(schmidt.reconstruct() - grouped)) <= 1e-10

            # File round trip is an identity.
            path = tmp_path / f"case-{i}.qs"
            write_qstate(rho, path)
            back = read_qstate(path)
            assert np.max(np.abs(back.matrix - rho.matrix)) <= 1e-15
        print("[acceptance] structural invariants: 200 instances checked")
