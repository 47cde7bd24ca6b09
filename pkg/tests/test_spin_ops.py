import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy import testing as npt

from chaoscorr.spin_ops import (OperatorMatrix, ProductBasis, SpinBasis, build_boson_ops, build_jx,
                                build_jy, build_jz, cross_block, dicke_even_dim, dicke_parity,
                                hermiticity_residual, kron_boson_spin, parity_sector, project)

half_integers = st.integers(min_value=0, max_value=40).map(lambda k: k / 2)


def test_jz_small():
    npt.assert_array_equal(build_jz(SpinBasis(1)).entries, np.diag([-1.0, 0.0, 1.0]))
    npt.assert_array_equal(build_jz(SpinBasis(0.5)).entries, np.diag([-0.5, 0.5]))


def test_jx_spin_half_is_pauli_over_two():
    npt.assert_allclose(build_jx(SpinBasis(0.5)).entries, [[0, 0.5], [0.5, 0]])


def test_spin_basis_rejects_non_half_integer():
    with pytest.raises(ValueError):
        SpinBasis(0.3)


@given(half_integers)
def test_basis_shape(j):
    b = SpinBasis(j)
    assert b.dim == round(2 * j) + 1
    assert np.all(np.diff(b.m) == 1)
    npt.assert_allclose(b.m, -b.m[::-1])
    assert abs(np.trace(build_jz(b).entries)) < 1e-12


@given(half_integers)
def test_casimir(j):
    b = SpinBasis(j)
    jx, jy, jz = (op(b).entries for op in (build_jx, build_jy, build_jz))
    c = jx @ jx + jy @ jy + jz @ jz
    assert np.abs(c - j * (j + 1) * np.eye(b.dim)).max() < 1e-10


@pytest.mark.parametrize("j", [0.5, 1, 2, 3.5, 7])
def test_commutators(j):
    b = SpinBasis(j)
    jx, jy, jz = (op(b).entries for op in (build_jx, build_jy, build_jz))
    assert np.abs(jx @ jy - jy @ jx - 1j * jz).max() < 1e-12
    assert np.abs(jy @ jz - jz @ jy - 1j * jx).max() < 1e-12
    assert np.abs(jz @ jx - jx @ jz - 1j * jy).max() < 1e-12


def test_jx_matrix_elements():
    j = 3
    b = SpinBasis(j)
    jx = build_jx(b).entries
    for k, m in enumerate(b.m[:-1]):
        assert jx[k + 1, k] == pytest.approx(0.5 * np.sqrt(j * (j + 1) - m * (m + 1)))


def test_hermitian_flag_enforced():
    with pytest.raises(ValueError):
        OperatorMatrix(np.array([[0.0, 1.0], [0.0, 0.0]]), hermitian=True)
    for op in (build_jx, build_jy, build_jz):
        assert hermiticity_residual(op(SpinBasis(5)).entries) < 1e-12


def test_operator_is_read_only():
    op = build_jz(SpinBasis(2))
    with pytest.raises(ValueError):
        op.entries[0, 0] = 3.0


def test_boson_ops():
    a, ad = build_boson_ops(1)
    npt.assert_array_equal(a.entries, [[0, 1], [0, 0]])
    a, ad = build_boson_ops(6)
    npt.assert_allclose(np.diag(ad.entries @ a.entries), np.arange(7))
    comm = a.entries @ ad.entries - ad.entries @ a.entries
    expected = np.eye(7)
    expected[6, 6] = -6
    npt.assert_allclose(comm, expected, atol=1e-12)


@pytest.mark.parametrize("j,even,odd", [(4, 5, 4), (10, 11, 10), (2, 3, 2)])
def test_kt_sector_sizes(j, even, odd):
    b = SpinBasis(j)
    e, o = parity_sector(b, "even"), parity_sector(b, "odd")
    assert e.dim == even and o.dim == odd
    assert sorted(np.concatenate([e.index_map, o.index_map]).tolist()) == list(range(b.dim))


def test_kt_even_sector_rejects_odd_j():
    with pytest.raises(ValueError):
        parity_sector(SpinBasis(3), "even")


def test_dicke_sector_sizes_small():
    b = ProductBasis(1, 2)
    e, o = parity_sector(b, "even"), parity_sector(b, "odd")
    assert e.dim == 5
    assert e.dim + o.dim == b.dim == 9
    assert not set(e.index_map) & set(o.index_map)


@given(st.integers(1, 10), st.integers(1, 20))
def test_dicke_even_dim_closed_form(half_n, half_tr):
    n_atoms, n_tr = 2 * half_n, 2 * half_tr
    assert parity_sector(ProductBasis(half_n, n_tr)).dim == dicke_even_dim(n_atoms, n_tr)


def test_project_identity_and_hermiticity():
    b = SpinBasis(4)
    sec = parity_sector(b)
    eye = project(OperatorMatrix(np.eye(b.dim), hermitian=True), sec)
    npt.assert_array_equal(eye.entries, np.eye(sec.dim))
    jx = build_jx(b).entries
    sub = project(OperatorMatrix(jx @ jx, hermitian=True), sec)
    assert hermiticity_residual(sub.entries) < 1e-12


def test_project_dimension_mismatch():
    with pytest.raises(ValueError):
        project(build_jz(SpinBasis(2)), parity_sector(SpinBasis(4)))


@pytest.mark.parametrize("j", [4, 8, 20])
def test_kt_operators_do_not_mix_sectors(j):
    b = SpinBasis(j)
    sec = parity_sector(b)
    jx = build_jx(b).entries
    assert np.abs(cross_block(OperatorMatrix(jx @ jx), sec)).max() < 1e-14
    assert np.abs(cross_block(build_jz(b), sec)).max() < 1e-14


def test_dicke_operators_do_not_mix_sectors():
    basis = ProductBasis(2, 6)
    sec = parity_sector(basis)
    a, ad = build_boson_ops(6)
    spin = SpinBasis(2)
    ops = [kron_boson_spin(a.entries + ad.entries, build_jx(spin).entries),
           kron_boson_spin(ad.entries @ a.entries, np.eye(spin.dim)),
           kron_boson_spin(np.eye(7), build_jz(spin).entries)]
    for op in ops:
        assert np.abs(cross_block(OperatorMatrix(op), sec)).max() < 1e-14


def test_product_labels_boson_major():
    n, m = ProductBasis(1, 2).labels()
    npt.assert_array_equal(n, [0, 0, 0, 1, 1, 1, 2, 2, 2])
    npt.assert_array_equal(m, [-1, 0, 1] * 3)
    npt.assert_array_equal(dicke_parity(ProductBasis(1, 2)), [1, -1, 1, -1, 1, -1, 1, -1, 1])
