import io
import math

import numpy as np
import pytest

from qrproj import linalg, rqc
from qrproj.simulator import Circuit, Gate, circuit_unitary


def unit(N, seed=0):
    return linalg.gaussian_vector(N, seed)


def test_depth_zero_structure():
    c = rqc.build_rqc(rqc.AnsatzSpec(2, 0))
    assert [(g.kind, g.angle) for g in c.gates] == [("RY", math.pi / 4)] * 2


def test_same_seed_same_circuit():
    a = rqc.build_rqc(rqc.AnsatzSpec(4, 10, 3))
    b = rqc.build_rqc(rqc.AnsatzSpec(4, 10, 3))
    assert a.gates == b.gates
    assert a.gates != rqc.build_rqc(rqc.AnsatzSpec(4, 10, 4)).gates


def test_gate_count():
    spec = rqc.AnsatzSpec(10, 150, 1)
    assert len(rqc.build_rqc(spec)) == 2860 == rqc.gate_count(spec)
    assert rqc.gate_count(rqc.AnsatzSpec(3, 5, include_symmetrizing_layer=False)) == 25


def test_block_layout():
    c = rqc.build_rqc(rqc.AnsatzSpec(3, 2, 9))
    kinds = [g.kind for g in c.gates]
    assert kinds[:3] == ["RY"] * 3
    block = kinds[3:8]
    assert all(k in ("RX", "RY", "RZ") for k in block[:3]) and block[3:] == ["CPHASE"] * 2
    cz = [(g.control, g.target, g.angle) for g in c.gates if g.kind == "CPHASE"]
    assert cz[:2] == [(0, 1, math.pi), (1, 2, math.pi)]


def test_angle_and_axis_distribution():
    axes, angles = rqc.layer_parameters(rqc.AnsatzSpec(10, 3000, 0))
    counts = np.bincount(axes.ravel(), minlength=3) / axes.size
    np.testing.assert_allclose(counts, [1 / 3] * 3, atol=0.01)
    assert angles.min() >= 0 and angles.max() < 2 * math.pi
    assert abs(angles.mean() - math.pi) < 0.02


def test_spec_validation():
    with pytest.raises(ValueError):
        rqc.AnsatzSpec(1, 3)
    with pytest.raises(ValueError):
        rqc.AnsatzSpec(3, -1)


@pytest.mark.parametrize("layer", [True, False])
def test_fast_ansatz_matches_gate_by_gate_unitary(layer):
    spec = rqc.AnsatzSpec(5, 12, 21, include_symmetrizing_layer=layer)
    U = circuit_unitary(rqc.build_rqc(spec))
    psi = np.eye(32, dtype=complex)
    rqc.run_ansatz(psi, spec)
    np.testing.assert_allclose(psi.T, U, atol=1e-12)
    rqc.run_ansatz(psi, spec, inverse=True)
    np.testing.assert_allclose(psi, np.eye(32), atol=1e-12)


def test_batched_specs_use_their_own_circuit():
    specs = [rqc.AnsatzSpec(4, 6, s) for s in range(3)]
    v = unit(16)
    psi = np.tile(v, (3, 1)).astype(complex)
    rqc.run_ansatz(psi, specs)
    for s, row in zip(specs, psi):
        np.testing.assert_allclose(row, circuit_unitary(rqc.build_rqc(s)) @ v, atol=1e-12)
    with pytest.raises(ValueError):
        rqc.run_ansatz(psi, [rqc.AnsatzSpec(4, 6, 0), rqc.AnsatzSpec(4, 7, 0)], np.array([0, 1, 0]))


def test_qrp_rows_full_is_unitary():
    c = rqc.build_rqc(rqc.AnsatzSpec(3, 5, 2))
    Pi = rqc.qrp_rows(c, 8)
    np.testing.assert_allclose(Pi.conj().T @ Pi, np.eye(8), atol=1e-12)


def test_qrp_rows_identity_circuit():
    c = rqc.build_rqc(rqc.AnsatzSpec(2, 0, include_symmetrizing_layer=False))
    np.testing.assert_allclose(rqc.qrp_rows(c, 2, [0, 1]), math.sqrt(2) * np.eye(4)[:2])


@pytest.mark.parametrize("rows", [[0, 0], [0, 4], [-1, 2], [0, 1, 2]])
def test_qrp_rows_reject_bad_selection(rows):
    c = rqc.build_rqc(rqc.AnsatzSpec(2, 1))
    with pytest.raises(ValueError):
        rqc.qrp_rows(c, 2, rows)


def test_random_row_selection_is_seeded():
    a = rqc.select_rows(64, 8, "random", 5)
    assert np.array_equal(a, rqc.select_rows(64, 8, "random", 5))
    assert len(set(a)) == 8
    with pytest.raises(ValueError):
        rqc.select_rows(64, 8, "middle")


def test_projected_norm_unbiased_over_circuits():
    spec = rqc.AnsatzSpec(5, 150, 11)
    x = rqc.projected_norms_sq(spec, 16, unit(32, 1), 2000)
    assert abs(x.mean() - 1) <= 0.02


@pytest.mark.parametrize("N,k", [(4, 2), (16, 8)])
def test_haar_variance_matches_exact_value(N, k):
    spec = rqc.AnsatzSpec(N.bit_length() - 1, 0, 7)
    est = rqc.estimate_projected_norm_variance(spec, k, unit(N, 2), 40000, sampler="haar")
    exact = (N - k) / (k * (N + 1))
    assert abs(est.value - exact) <= 4 * est.standard_error
    assert rqc.haar_projected_variance(N, k) == pytest.approx(exact)


def test_exact_design_regime_against_haar_oracle():
    v = unit(16, 3)
    circ = rqc.estimate_projected_norm_variance(rqc.AnsatzSpec(4, 150, 1), 8, v, 6000)
    haar = rqc.estimate_projected_norm_variance(rqc.AnsatzSpec(4, 0, 2), 8, v, 6000, sampler="haar")
    assert circ.agrees_with(haar, 3.0)
    shallow = rqc.estimate_projected_norm_variance(rqc.AnsatzSpec(4, 2, 1), 8, v, 6000)
    assert not shallow.agrees_with(haar, 3.0)


def test_fourth_moment_haar_two_dims():
    est = rqc.estimate_fourth_moment(rqc.AnsatzSpec(2, 0, 3), np.array([1.0, 0, 0, 0]), 20000, sampler="haar")
    assert abs(est.value - 2 / 5) <= 4 * est.standard_error
    # N = 2 through the oracle directly (the ansatz needs >= 2 qubits)
    vals = [np.sum(np.abs(linalg.haar_unitary(2, s)[:, 0]) ** 4) for s in range(20000)]
    assert abs(np.mean(vals) - 2 / 3) <= 4 * np.std(vals) / math.sqrt(len(vals))


def test_fourth_moment_concentrated_state():
    spec = rqc.AnsatzSpec(3, 0, 0, include_symmetrizing_layer=False)
    est = rqc.estimate_fourth_moment(spec, np.eye(8)[5], 100)
    assert est.value == 1.0 and est.standard_error == 0.0


def test_chebyshev_bound_holds():
    N, k, eps = 32, 16, 0.5
    x = rqc.projected_norms_sq(rqc.AnsatzSpec(5, 150, 8), k, unit(N, 4), 3000)
    frac = np.mean(np.abs(np.sqrt(x) - 1) > eps)
    assert frac <= rqc.jl_failure_bound(N, k, eps) + 3 * math.sqrt(max(frac * (1 - frac), 1e-12) / x.size)
    assert rqc.jl_failure_bound(N, k, eps) == pytest.approx(16 / (4 * 16 * 32 * 0.25))
    assert rqc.jl_failure_bound(N, k, eps, alpha=0.1) > rqc.jl_failure_bound(N, k, eps)


def test_estimators_need_samples():
    with pytest.raises(ValueError):
        rqc.estimate_fourth_moment(rqc.AnsatzSpec(2, 1), np.eye(4)[0], 50)
    with pytest.raises(ValueError):
        rqc.estimate_projected_norm_variance(rqc.AnsatzSpec(2, 1), 2, np.eye(4)[0], 99)


def test_moment_estimate_validation():
    with pytest.raises(ValueError):
        rqc.MomentEstimate(1.0, -0.1, 10)
    with pytest.raises(ValueError):
        rqc.MomentEstimate(1.0, 0.1, 0)
    a, b = rqc.MomentEstimate(1.0, 0.1, 10), rqc.MomentEstimate(1.3, 0.1, 10)
    assert a.agrees_with(b, 3) and not a.agrees_with(b, 2)


def test_variance_estimate_standard_error_is_calibrated():
    # the SE formula should match the spread of repeated variance estimates
    rng = np.random.default_rng(0)
    ests = [rqc.variance_estimate(rng.exponential(size=400)) for _ in range(400)]
    spread = np.std([e.value for e in ests])
    assert np.mean([e.standard_error for e in ests]) == pytest.approx(spread, rel=0.15)


def test_circuit_text_roundtrip():
    spec = rqc.AnsatzSpec(4, 7, 99)
    c = rqc.build_rqc(spec)
    text = rqc.circuit_to_text(c, spec.depth, spec.seed)
    assert text.splitlines()[0] == "4 7 99"
    back, depth, seed = rqc.circuit_from_text(text)
    assert back.gates == c.gates and (depth, seed) == (7, 99)


@pytest.mark.parametrize("text", ["4 7\n", "2 1 0\nRX 0.5\n", "2 1 0\nRQ 0.5 0\n", "2 1 0\nRX 0.5 4\n"])
def test_circuit_text_rejects_malformed(text):
    with pytest.raises(ValueError):
        rqc.read_circuit(io.StringIO(text))


def test_circuit_text_preserves_angles_exactly():
    g = Gate("RZ", 0.1 + 1e-17, 0)
    back, _, _ = rqc.circuit_from_text(rqc.circuit_to_text(Circuit(2, [g])))
    assert back.gates[0].angle == g.angle
