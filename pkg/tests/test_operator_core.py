"""Operator algebra: apply, adjoint, compose, truncation assembly, folding."""

import numpy as np
import pytest

from interfacekit.errors import DimensionMismatchError, SizeCapError
from interfacekit.models import build
from interfacekit.operators import (
    Hopping,
    InterfaceOperator,
    Lattice,
    TruncationBox,
    fold_cocompact,
    identity_operator,
)
from interfacekit.profiles import (
    ConstantProfile,
    DomainWall1DProfile,
)

LAT1 = Lattice(1, 1)
ONE = ConstantProfile(np.eye(1), 1)


def shift_op(g):
    return InterfaceOperator(LAT1, [((g,), ONE)])


def test_apply_pure_shift():
    box = TruncationBox(3, 1)
    psi = box.basis_vector((0,), 0, 1)
    out = shift_op(1).apply(psi, box)
    assert np.allclose(out, box.basis_vector((1,), 0, 1))


def test_apply_identity_any_vector(rng):
    box = TruncationBox(4, 1)
    psi = rng.normal(size=box.n_sites) + 1j * rng.normal(size=box.n_sites)
    out = identity_operator(LAT1).apply(psi, box)
    assert np.allclose(out, psi)


def test_apply_hopping_sum_by_hand():
    # 5x5 truncation of S_1 + S_{-1} applied to the middle delta
    box = TruncationBox(2, 1)
    T = shift_op(1) + shift_op(-1)
    out = T.apply(box.basis_vector((0,), 0, 1), box)
    expect = box.basis_vector((-1,), 0, 1) + box.basis_vector((1,), 0, 1)
    assert np.allclose(out, expect)


def test_apply_dimension_mismatch():
    box = TruncationBox(2, 1)
    with pytest.raises(DimensionMismatchError):
        shift_op(1).apply(np.zeros(7), box)


def test_adjoint_constant_term():
    c = np.array([[1.0 + 2.0j]])
    T = InterfaceOperator(LAT1, [((1,), ConstantProfile(c, 1))])
    adj = T.adjoint()
    assert adj.shifts() == [(-1,)]
    assert np.allclose(adj.terms[(-1,)].evaluate((3,)), c.conj().T)


def test_adjoint_ssh_wall_is_itself(ssh_wall_05_2):
    H = ssh_wall_05_2.operator
    assert H.adjoint().equals(H)
    assert H.check_hermitian()


def test_adjoint_real_diagonal_multiplication():
    prof = DomainWall1DProfile(np.array([[0.2]]), np.array([[0.9]]))
    T = InterfaceOperator(LAT1, [((0,), prof)])
    assert T.adjoint().equals(T)


def test_adjoint_involutive(ssh_wall_05_2):
    H = ssh_wall_05_2.operator
    assert H.adjoint().adjoint().equals(H)


def test_compose_inverse_shifts():
    C = shift_op(1).compose(shift_op(-1))
    assert C.equals(identity_operator(LAT1))


def test_compose_translates_second_profile():
    f = DomainWall1DProfile(np.array([[2.0]]), np.array([[3.0]]))
    k = DomainWall1DProfile(np.array([[5.0]]), np.array([[7.0]]))
    T1 = InterfaceOperator(LAT1, [((1,), f)])
    T2 = InterfaceOperator(LAT1, [((0,), k)])
    prod = T1.compose(T2)
    assert prod.shifts() == [(1,)]
    for x in (-5, -1, 0, 1, 6):
        expect = f.evaluate((x,)) @ k.evaluate((x - 1,))
        assert np.allclose(prod.terms[(1,)].evaluate((x,)), expect)


def test_add_scale_cancels_to_zero(ssh_wall_05_2):
    H = ssh_wall_05_2.operator
    Z = H + H.scale(-1.0)
    assert Z.terms == {}


def test_assemble_tridiagonal():
    box = TruncationBox(1, 1)
    M = (shift_op(1) + shift_op(-1)).assemble(box).toarray()
    expect = np.diag(np.ones(2), 1) + np.diag(np.ones(2), -1)
    assert np.allclose(M, expect)


def test_assemble_identity():
    box = TruncationBox(2, 1)
    M = identity_operator(LAT1).assemble(box).toarray()
    assert np.allclose(M, np.eye(box.n_sites))


def test_assemble_matches_apply_columnwise(ssh_wall_05_2):
    H = ssh_wall_05_2.operator
    box = TruncationBox(2, 1)
    M = H.assemble(box).toarray()
    for j in range(box.n_sites * 2):
        e = np.zeros(box.n_sites * 2, dtype=complex)
        e[j] = 1.0
        assert np.array_equal(M[:, j], H.apply(e, box))


def test_assemble_size_cap():
    box = TruncationBox(3, 1, row_cap=5)
    with pytest.raises(SizeCapError):
        shift_op(1).assemble(box)


def test_algebra_homomorphism_interior_rows(ssh_wall_05_2):
    H = ssh_wall_05_2.operator
    box = TruncationBox(12, 1)
    prod = H.compose(H).assemble(box).toarray()
    sq = H.assemble(box).toarray()
    sq = sq @ sq
    interior = np.nonzero(box.boundary_distance() >= 2 * H.shift_radius)[0]
    rows = np.concatenate([2 * interior, 2 * interior + 1])
    assert np.allclose(prod[rows], sq[rows], atol=1e-13)


def test_adjointness_inner_product(rng):
    # <T phi, psi> = <phi, T* psi> for vectors supported away from the edge
    walk = build("split_step_walk_wall",
                 {"theta1_left": 0.3, "theta1_right": 1.1}).operator
    box = TruncationBox(20, 1)
    adj = walk.adjoint()
    interior = box.boundary_distance() >= 3 * walk.shift_radius
    mask = np.repeat(interior, 2)
    for _ in range(5):
        phi = (rng.normal(size=box.n_sites * 2)
               + 1j * rng.normal(size=box.n_sites * 2)) * mask
        psi = (rng.normal(size=box.n_sites * 2)
               + 1j * rng.normal(size=box.n_sites * 2)) * mask
        lhs = np.vdot(walk.apply(phi, box), psi)
        rhs = np.vdot(phi, adj.apply(psi, box))
        assert abs(lhs - rhs) < 1e-13 * max(abs(lhs), 1.0)


def test_walk_unitarity_certificate():
    walk = build("split_step_walk_wall",
                 {"theta1_left": 0.3, "theta1_right": 1.1}).operator
    assert walk.check_unitary(atol=1e-12)


def test_translate_moves_profiles(ssh_wall_05_2):
    H = ssh_wall_05_2.operator
    T = H.translate((5,))
    assert np.allclose(T.terms[(0,)].evaluate((5,)), H.terms[(0,)].evaluate((0,)))


def test_fold_ssh_from_two_site_cell():
    hops = [
        Hopping((0,), 1, 0, np.array([[0.5]])),
        Hopping((0,), 0, 1, np.array([[0.5]])),
        Hopping((1,), 0, 1, np.array([[1.0]])),
        Hopping((-1,), 1, 0, np.array([[1.0]])),
    ]
    folded = fold_cocompact(hops, 2, Lattice(1, 1), hermitian=True)
    assert folded.lattice.fiber_dim == 2
    L = 5
    ev_f = np.linalg.eigvalsh(folded.assemble(TruncationBox(L, 1)).toarray())
    n = 2 * (2 * L + 1)
    crystal = np.zeros((n, n))
    for i in range(n - 1):
        crystal[i, i + 1] = crystal[i + 1, i] = 0.5 if i % 2 == 0 else 1.0
    ev_c = np.linalg.eigvalsh(crystal)
    assert np.max(np.abs(ev_f - ev_c)) < 1e-12


def test_fold_trivial_cell_is_reindexing():
    hops = [Hopping((1,), 0, 0, np.array([[1.0]])),
            Hopping((-1,), 0, 0, np.array([[1.0]]))]
    folded = fold_cocompact(hops, 1, Lattice(1, 1), hermitian=True)
    direct = shift_op(1) + shift_op(-1)
    box = TruncationBox(6, 1)
    assert np.allclose(folded.assemble(box).toarray(),
                       direct.assemble(box).toarray())


def test_fold_two_site_cell_2d():
    # honeycomb-like: two sites per cell on Z^2, nearest-neighbour hoppings
    hops = [
        Hopping((0, 0), 1, 0, np.array([[1.0]])),
        Hopping((0, 0), 0, 1, np.array([[1.0]])),
        Hopping((1, 0), 0, 1, np.array([[0.7]])),
        Hopping((-1, 0), 1, 0, np.array([[0.7]])),
        Hopping((0, 1), 0, 1, np.array([[0.4]])),
        Hopping((0, -1), 1, 0, np.array([[0.4]])),
    ]
    folded = fold_cocompact(hops, 2, Lattice(2, 1), hermitian=True)
    assert folded.lattice.fiber_dim == 2
    assert folded.check_hermitian()
    L = 4
    ev_f = np.linalg.eigvalsh(folded.assemble(TruncationBox(L, 2)).toarray())
    # crystal oracle on (2L+1)^2 cells, two sites each, Dirichlet
    side = 2 * L + 1
    n = 2 * side * side
    idx = lambda x, y, a: 2 * ((x + L) * side + (y + L)) + a
    crystal = np.zeros((n, n))
    for x in range(-L, L + 1):
        for y in range(-L, L + 1):
            crystal[idx(x, y, 1), idx(x, y, 0)] = 1.0
            crystal[idx(x, y, 0), idx(x, y, 1)] = 1.0
            if x + 1 <= L:
                crystal[idx(x + 1, y, 0), idx(x, y, 1)] = 0.7
                crystal[idx(x, y, 1), idx(x + 1, y, 0)] = 0.7
            if y + 1 <= L:
                crystal[idx(x, y + 1, 0), idx(x, y, 1)] = 0.4
                crystal[idx(x, y, 1), idx(x, y + 1, 0)] = 0.4
    ev_c = np.linalg.eigvalsh(crystal)
    assert np.max(np.abs(ev_f - ev_c)) < 1e-12


def test_fold_rejects_out_of_cell_hopping():
    with pytest.raises(ValueError):
        fold_cocompact([Hopping((0,), 2, 0, np.array([[1.0]]))], 2,
                       Lattice(1, 1))
