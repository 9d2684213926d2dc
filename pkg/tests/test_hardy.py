import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from brownshift.errors import DimensionError, TruncationError, ValidationError
from brownshift.hardy import (
    HardyVec1,
    HardyVec2,
    StateVec,
    Truncation,
    adjoint_J,
    backward_shift,
    block_masks,
    embed_i_z1,
    embed_J,
    fit_coeffs,
    flat_labels,
    hpoly,
    inner_state,
    mul_z,
    mul_z1,
    pad_flat,
    swap_symmetry_residual,
    tensor,
)

T4 = Truncation(3, 4, 5)


def random_state(rng, trunc):
    c = lambda *s: rng.standard_normal(s) + 1j * rng.standard_normal(s)
    return StateVec(HardyVec2(c(*trunc.shape_F)), HardyVec1(c(trunc.n_f)), complex(c(1)[0]))


seeds = st.integers(min_value=0, max_value=2**32 - 1)


def test_truncation_dimensions():
    assert T4.shape_F == (4, 5)
    assert T4.n_F == 20 and T4.n_f == 6 and T4.dim == 27
    assert T4.raised(2).degrees() == (5, 6, 7)
    assert Truncation.cube(3).degrees() == (3, 3, 3)


@pytest.mark.parametrize("bad", [dict(deg_z1=-1, deg_z2=1, deg_z=1), dict(deg_z1=1, deg_z2=1, deg_z=1, tol=0)])
def test_truncation_rejects_bad_values(bad):
    with pytest.raises(ValidationError):
        Truncation(**bad)


def test_flat_layout_round_trip():
    rng = np.random.default_rng(0)
    x = random_state(rng, T4)
    y = StateVec.from_array(x.to_array(), T4)
    assert np.array_equal(y.F.coeffs, x.F.coeffs)
    assert np.array_equal(y.f.coeffs, x.f.coeffs)
    assert y.alpha == x.alpha
    labels = flat_labels(T4)
    assert labels[0] == "F[0,0]" and labels[5] == "F[1,0]" and labels[20] == "f[0]" and labels[-1] == "alpha"
    with pytest.raises(DimensionError):
        StateVec.from_array(np.zeros(5), T4)


def test_block_masks_partition():
    masks = block_masks(T4)
    total = sum(m.astype(int) for m in masks)
    assert np.all(total == 1)
    assert masks[0].sum() == T4.n_F and masks[2][-1]


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_inner_product_is_sesquilinear(seed):
    rng = np.random.default_rng(seed)
    x, y = random_state(rng, T4), random_state(rng, T4)
    c = complex(*rng.standard_normal(2))
    assert np.isclose(inner_state(x * c, y), c * inner_state(x, y))
    assert np.isclose(inner_state(x, y * c), np.conj(c) * inner_state(x, y))
    assert np.isclose(inner_state(x, y), np.conj(inner_state(y, x)))
    assert np.isclose(inner_state(x, x).real, x.norm() ** 2)


def test_mixed_truncations_rejected():
    with pytest.raises(DimensionError):
        StateVec.zeros(T4) + StateVec.zeros(Truncation.cube(3))


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_J_adjointness(seed):
    t = Truncation(3, 5, 5)
    rng = np.random.default_rng(seed)
    x = random_state(rng, t)
    lhs = embed_J(x.f, t).inner(x.F)
    rhs = x.f.inner(adjoint_J(x.F))
    assert np.isclose(lhs, rhs)


def test_J_is_isometric_and_lands_in_row_zero():
    f = HardyVec1([1, 2j, -3, 0, 0, 0])
    F = embed_J(f, T4)
    assert np.isclose(F.norm(), f.norm())
    assert np.count_nonzero(F.coeffs[1:]) == 0
    # z2-degree 4 cannot hold a degree-5 coefficient
    with pytest.raises(TruncationError):
        embed_J(HardyVec1.monomial(5, 5), T4)


def test_i_z1_embedding_and_tensor():
    f = HardyVec1([1, 2, 3])
    assert np.array_equal(embed_i_z1(f, T4).coeffs[:3, 0], [1, 2, 3])
    F = tensor(HardyVec1([1, 1]), HardyVec1([0, 1]), T4)
    assert F.coeffs[0, 1] == 1 and F.coeffs[1, 1] == 1 and np.isclose(F.norm(), np.sqrt(2))


def test_hpoly():
    t = Truncation.cube(4)
    h2 = hpoly(2, t).coeffs
    assert h2[2, 0] == h2[1, 1] == h2[0, 2] == 1 and np.count_nonzero(h2) == 3
    assert np.count_nonzero(hpoly(-1, t).coeffs) == 0
    assert np.isclose(hpoly(3, t).norm() ** 2, 4)
    with pytest.raises(TruncationError):
        hpoly(5, t)


def test_swap_symmetry():
    t = Truncation.cube(3)
    assert swap_symmetry_residual(hpoly(3, t)) == 0.0
    F = HardyVec2.monomial(1, 0, t) - HardyVec2.monomial(0, 1, t)
    # F o swap = -F, so the residual is ||2F|| = 2 sqrt(2)
    assert np.isclose(swap_symmetry_residual(F), 2 * np.sqrt(2))
    with pytest.raises(DimensionError):
        swap_symmetry_residual(HardyVec2.zeros(T4))


def test_shifts_raise_on_overflow():
    f = HardyVec1.monomial(2, 3)
    assert np.array_equal(mul_z(f).coeffs, [0, 0, 0, 1])
    with pytest.raises(TruncationError) as err:
        mul_z(mul_z(f))
    assert err.value.lost_mass == 1.0
    assert np.array_equal(backward_shift(f).coeffs, [0, 1, 0, 0])
    with pytest.raises(TruncationError):
        mul_z1(HardyVec2.monomial(3, 0, T4))


def test_fit_coeffs_drops_only_tiny_mass():
    assert np.array_equal(fit_coeffs([1, 2, 1e-13], 2), [1, 2])
    with pytest.raises(TruncationError):
        fit_coeffs([1, 2, 1e-3], 2)
    assert np.array_equal(fit_coeffs([1], 3), [1, 0, 0])


def test_pad_flat_preserves_coordinates():
    rng = np.random.default_rng(1)
    x = random_state(rng, T4)
    big = T4.raised(2)
    y = StateVec.from_array(pad_flat(x.to_array(), T4, big), big)
    assert np.array_equal(y.F.coeffs[:4, :5], x.F.coeffs)
    assert np.isclose(y.norm(), x.norm())
    with pytest.raises(DimensionError):
        pad_flat(x.to_array(), big, T4)
