import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from brownshift.errors import DimensionError, TruncationError, ValidationError
from brownshift.hardy import HardyVec1, HardyVec2, StateVec, Truncation, inner_state, pad_flat
from brownshift.inner import monomial_inner
from brownshift.operators import (
    BrownianParams,
    apply_B,
    apply_normalized_adjoint_power,
    apply_normalized_power,
    apply_T,
    apply_T_adjoint,
    apply_T_adjoint_power,
    apply_T_power,
    decompose_T,
    e3_orbit_norm_sq,
    numerical_rank,
    orbit_e3_closed_form,
    restricted_norm,
    t_adjoint_matrix,
    t_matrix,
)
from brownshift.subspaces import SubspaceBasis, build_typeI_B

seeds = st.integers(min_value=0, max_value=2**32 - 1)
sigmas = st.floats(0.1, 3.0)
thetas = st.floats(0, 2 * np.pi)


def random_state(rng, trunc, pad=1):
    """Random vector with top ``pad`` degrees empty so one application of T stays exact."""
    c = lambda *s: rng.standard_normal(s) + 1j * rng.standard_normal(s)
    F = c(*trunc.shape_F)
    F[trunc.deg_z1 + 1 - pad :, :] = 0
    f = c(trunc.n_f)
    f[trunc.deg_z + 1 - pad :] = 0
    return StateVec(HardyVec2(F), HardyVec1(f), complex(c(1)[0]))


def test_params_validation_and_norm():
    with pytest.raises(ValidationError):
        BrownianParams(0.0)
    p = BrownianParams(2.0, 7.0)
    assert np.isclose(p.theta, 7.0 - 2 * np.pi)
    assert np.isclose(p.norm, np.sqrt(5))


def test_B_on_basis_vectors():
    p = BrownianParams(2.0, np.pi / 2)
    f, a = apply_B(p, HardyVec1.zeros(3), 1.0)
    assert np.allclose(f.coeffs, [2, 0, 0, 0]) and np.isclose(a, 1j)
    f, a = apply_B(p, HardyVec1([0, 1, 0, 0]), 0.0)
    assert np.allclose(f.coeffs, [0, 0, 1, 0]) and a == 0


@settings(max_examples=40, deadline=None)
@given(seeds, sigmas, thetas)
def test_norm_identity(seed, sigma, theta):
    # ||T x||^2 = ||F||^2 + (1 + sigma^2)(||f||^2 + |alpha|^2)
    p = BrownianParams(sigma, theta)
    t = Truncation(4, 5, 5)
    x = random_state(np.random.default_rng(seed), t)
    y = apply_T(p, x)
    expect = x.F.norm() ** 2 + (1 + sigma**2) * (x.f.norm() ** 2 + abs(x.alpha) ** 2)
    assert np.isclose(y.norm() ** 2, expect)


@settings(max_examples=40, deadline=None)
@given(seeds, sigmas, thetas)
def test_adjoint_identity(seed, sigma, theta):
    p = BrownianParams(sigma, theta)
    t = Truncation(4, 5, 5)
    rng = np.random.default_rng(seed)
    x, y = random_state(rng, t), random_state(rng, t, pad=0)
    assert np.isclose(inner_state(apply_T(p, x), y), inner_state(x, apply_T_adjoint(p, y)))


@settings(max_examples=30, deadline=None)
@given(seeds, sigmas, thetas)
def test_matrix_matches_application(seed, sigma, theta):
    p = BrownianParams(sigma, theta)
    t = Truncation(3, 4, 4)
    x = random_state(np.random.default_rng(seed), t, pad=0)
    ext = t.raised(1)
    y = t_matrix(p, t, ext).entries @ x.to_array()
    z = apply_T(p, StateVec.from_array(pad_flat(x.to_array(), t, ext), ext))
    assert np.allclose(y, z.to_array())


def test_adjoint_matrix_is_conjugate_transpose():
    p = BrownianParams(1.3, 0.4)
    t = Truncation(3, 4, 4)
    A = t_matrix(p, t).toarray()
    assert np.allclose(t_adjoint_matrix(p, t).toarray(), A.conj().T)
    rng = np.random.default_rng(3)
    y = random_state(rng, t, pad=0)
    assert np.allclose(t_adjoint_matrix(p, t).entries @ y.to_array(), apply_T_adjoint(p, y).to_array())


def test_operator_matrix_labels_and_text():
    p = BrownianParams(1.0)
    t = Truncation(1, 1, 1)
    M = t_matrix(p, t)
    assert M.shape == (t.dim, t.dim) and M.rows[-1] == "alpha"
    lines = M.to_coo_text().splitlines()
    assert lines[0] == "0 4 1.0 0.0"  # F[0,0] <- sigma * f[0]
    assert "6 6 1.0 0.0" in lines  # e^{i theta} on the scalar


@pytest.mark.parametrize("theta", [0.0, np.pi / 3])
@pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0])
def test_orbit_closed_form(sigma, theta):
    p = BrownianParams(sigma, theta)
    t = Truncation.cube(12)
    x = StateVec.e3(t)
    for n in range(13):
        y = orbit_e3_closed_form(p, n, t)
        assert np.max(np.abs(x.to_array() - y.to_array())) < 1e-12
        assert np.isclose(x.norm() ** 2, e3_orbit_norm_sq(p, n))
        if n < 12:
            x = apply_T(p, x)


def test_e3_orbit_norm_values():
    p = BrownianParams(1.0)
    assert [e3_orbit_norm_sq(p, n) for n in range(5)] == [1, 2, 4, 7, 11]
    assert e3_orbit_norm_sq(p, 40) == 821


def test_power_overflow_reports_step():
    p = BrownianParams(1.0)
    with pytest.raises(TruncationError) as err:
        apply_T_power(p, StateVec.e3(Truncation.cube(3)), 10)
    assert err.value.step == 5
    with pytest.raises(TruncationError):
        orbit_e3_closed_form(p, 10, Truncation.cube(3))


def test_normalized_powers():
    p = BrownianParams(1.0)
    t = Truncation.cube(6)
    x = StateVec.e3(t)
    assert np.isclose(apply_normalized_power(p, x, 4).norm(), np.sqrt(11) / 4)
    assert np.isclose(apply_normalized_adjoint_power(p, x, 4).norm(), 0.25)


def test_adjoint_is_exact_at_any_truncation():
    p = BrownianParams(1.0, 0.5)
    x = StateVec(HardyVec2.monomial(2, 1, Truncation.cube(3)), HardyVec1.zeros(3), 0.0)
    small = [apply_T_adjoint_power(p, x, n).norm() for n in range(8)]
    big_t = Truncation.cube(9)
    xb = StateVec.from_array(pad_flat(x.to_array(), Truncation.cube(3), big_t), big_t)
    big = [apply_T_adjoint_power(p, xb, n).norm() for n in range(8)]
    assert np.allclose(small, big, atol=1e-14)


@pytest.mark.parametrize("theta", [0.0, 1.0])
def test_decomposition_rank(theta):
    p = BrownianParams(1.5, theta)
    t = Truncation(3, 4, 4)
    Ts, R = decompose_T(p, t)
    assert np.allclose(Ts.toarray() + R.toarray(), t_matrix(p, t).toarray())
    # sigma J has rank deg_z + 1 and the two scalar entries add one more
    assert numerical_rank(R) == t.deg_z + 2


@pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0])
def test_restricted_norm_on_lower_subspace(sigma):
    p = BrownianParams(sigma)
    t = Truncation(2, 8, 8)
    basis = build_typeI_B(monomial_inner(2), t)
    assert abs(restricted_norm(p, basis) - np.sqrt(1 + sigma**2)) < 1e-10


def test_restricted_norm_without_seed_vector():
    # first-coordinate subspace: T acts isometrically there
    t = Truncation(4, 2, 2)
    vecs = [StateVec(HardyVec2.monomial(m, 0, t), HardyVec1.zeros(2), 0.0) for m in range(5)]
    basis = SubspaceBasis.from_vectors(vecs, ["x"] * 5, t, safe=[True] * 4 + [False])
    assert abs(restricted_norm(BrownianParams(2.0), basis, seed=1) - 1.0) < 1e-10
    empty = SubspaceBasis.from_vectors(vecs[-1:], ["x"], t, safe=[False])
    with pytest.raises(DimensionError):
        restricted_norm(BrownianParams(2.0), empty)
