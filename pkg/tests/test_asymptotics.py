import numpy as np
import pytest

from brownshift.asymptotics import (
    ADJOINT_LABELS,
    FORWARD,
    antisymmetric_witness,
    b_krylov_rank,
    c00_adjoint_decay,
    c00_forward_decay,
    case_vectors,
    krylov_noncyclicity,
    power_unbounded_certificate,
)
from brownshift.errors import TruncationError
from brownshift.hardy import HardyVec1, HardyVec2, StateVec, Truncation
from brownshift.operators import BrownianParams


def test_power_table_values():
    p = BrownianParams(1.0)
    tab = power_unbounded_certificate(p, 4)
    assert [r["norm_sq"] for r in tab.rows] == pytest.approx([1, 2, 4, 7, 11])
    assert tab.rows[0]["lower_bound"] == 1 and tab.rows[1]["lower_bound"] == 2
    assert tab.inequality_holds and tab.strictly_increasing


@pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0])
def test_power_excess(sigma):
    tab = power_unbounded_certificate(BrownianParams(sigma, 0.7), 20)
    for r in tab.rows:
        n = r["n"]
        assert abs(r["excess"] - sigma**4 * n * (n - 1) / 2) < 1e-10 * max(1, r["norm_sq"])


def test_power_table_overflow():
    with pytest.raises(TruncationError, match="max safe n is 3"):
        power_unbounded_certificate(BrownianParams(1.0), 6, Truncation.cube(2))


def test_adjoint_case1():
    p = BrownianParams(1.0, 0.3)
    c = c00_adjoint_decay(p, StateVec.e3(Truncation.cube(2)), 10)
    assert c.label == ADJOINT_LABELS[0]
    assert np.allclose(c.meta["raw_norms"], 1.0)
    assert np.allclose(c.norms, 2.0 ** (-np.arange(11) / 2))


def test_adjoint_case2_settles_after_k_plus_one_steps():
    p = BrownianParams(1.0)
    t = Truncation.cube(4)
    x = StateVec(HardyVec2.zeros(t), HardyVec1.monomial(3, 4), 0.0)
    c = c00_adjoint_decay(p, x, 12)
    assert c.label == ADJOINT_LABELS[1]
    assert np.allclose(c.meta["raw_norms"][4:], 1.0)


def test_adjoint_case3_reaches_scalar():
    p = BrownianParams(2.0)
    t = Truncation.cube(3)
    x = StateVec(HardyVec2.monomial(2, 1, t), HardyVec1.zeros(3), 0.0)
    c = c00_adjoint_decay(p, x, 15)
    assert c.label == ADJOINT_LABELS[2]
    raw = c.meta["raw_norms"]
    # z1^2 z2 -> z1 z2 -> z2 -> sigma z -> sigma -> sigma^2 e3 (then only phases change)
    assert np.allclose(raw[:5], [1, 1, 1, 2, 2])
    assert np.allclose(raw[5:], 2.0**2)


def test_adjoint_curves_within_envelope_and_decay():
    p = BrownianParams(1.0)
    for _, x in case_vectors(4, Truncation.cube(4)):
        c = c00_adjoint_decay(p, x, 60)
        assert c.within_envelope()
        assert np.isfinite(c.meta["C_x"]) and c.norms[40] < 1e-3


def test_forward_curve_for_e3():
    p = BrownianParams(1.0)
    c = c00_forward_decay(p, StateVec.e3(Truncation.cube(40)), 40)
    assert c.label == FORWARD
    assert np.isclose(c.norms[40], np.sqrt(821) / 2**20, rtol=1e-12)
    assert np.allclose(c.norms, c.envelope, rtol=1e-10)
    assert np.all(np.diff(c.norms[5:]) < 0)


def test_forward_disk_and_bidisk_parts():
    p = BrownianParams(1.0)
    t = Truncation.cube(12)
    f = StateVec(HardyVec2.zeros(t), HardyVec1.monomial(1, 12), 0.0)
    c = c00_forward_decay(p, f, 10)
    assert np.allclose(c.norms, np.sqrt(1 + np.arange(11)) / 2 ** (np.arange(11) / 2))
    F = StateVec(HardyVec2.monomial(1, 1, t) * 3.0, HardyVec1.zeros(12), 0.0)
    c = c00_forward_decay(p, F, 10)
    assert np.allclose(c.norms, 3.0 / 2 ** (np.arange(11) / 2))
    assert c.within_envelope()


def test_forward_cap():
    p = BrownianParams(1.0)
    x = StateVec.e3(Truncation.cube(5))
    with pytest.raises(TruncationError, match="max safe n is 6"):
        c00_forward_decay(p, x, 10)
    c = c00_forward_decay(p, x, 10, strict=False)
    assert c.meta["cap"] == 6 and c.meta["capped"] and len(c.norms) == 7


@pytest.mark.parametrize("theta", [0.0, np.pi / 3])
def test_krylov_noncyclicity(theta):
    r = krylov_noncyclicity(BrownianParams(1.0, theta), 20)
    assert all(r.checks().values()), r.checks()
    assert r.max_symmetry_residual == 0.0


def test_witness_is_unit_and_antisymmetric():
    w = antisymmetric_witness(Truncation.cube(2))
    assert np.isclose(w.norm(), 1) and np.allclose(w.F.coeffs, -w.F.coeffs.T)


@pytest.mark.parametrize("n", [1, 2, 5, 12])
def test_b_orbit_of_second_basis_vector_is_full_rank(n):
    assert b_krylov_rank(BrownianParams(1.0, 0.4), n) == n + 1
