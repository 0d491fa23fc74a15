"""Property-based checks of the operator-algebra invariants."""

import numpy as np
from hypothesis import given, settings, strategies as st

from interfacekit.index import winding_number
from interfacekit.operators import InterfaceOperator, Lattice, TruncationBox
from interfacekit.profiles import CompactProfile, ConstantProfile, \
    DomainWall1DProfile

LAT = Lattice(1, 2)


def complex_mat(draw, scale=1.0):
    entries = draw(st.lists(
        st.floats(-scale, scale, allow_nan=False, allow_infinity=False),
        min_size=8, max_size=8))
    m = np.array(entries[:4]).reshape(2, 2) + 1j * np.array(entries[4:]).reshape(2, 2)
    return m


@st.composite
def small_operator(draw):
    terms = []
    for g in (-1, 0, 1):
        kind = draw(st.sampled_from(["constant", "wall", "compact", "none"]))
        if kind == "constant":
            terms.append(((g,), ConstantProfile(complex_mat(draw), 1)))
        elif kind == "wall":
            terms.append(((g,), DomainWall1DProfile(
                complex_mat(draw), complex_mat(draw))))
        elif kind == "compact":
            sites = draw(st.lists(st.integers(-4, 4), min_size=1, max_size=3,
                                  unique=True))
            support = {(x,): complex_mat(draw) for x in sites}
            terms.append(((g,), CompactProfile(support, 1, 2)))
    if not terms:
        terms.append(((0,), ConstantProfile(complex_mat(draw), 1)))
    return InterfaceOperator(LAT, terms)


@settings(max_examples=25, deadline=None)
@given(small_operator())
def test_adjoint_is_involutive(T):
    assert T.adjoint().adjoint().equals(T, atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(small_operator())
def test_adjoint_matches_matrix_adjoint_in_the_interior(T):
    box = TruncationBox(12, 1)
    M = T.assemble(box).toarray()
    A = T.adjoint().assemble(box).toarray()
    r = 2 * max(T.shift_radius, 1)
    interior = np.nonzero(box.boundary_distance() >= r)[0]
    rows = np.concatenate([2 * interior, 2 * interior + 1])
    assert np.allclose(A[np.ix_(rows, rows)],
                       M.conj().T[np.ix_(rows, rows)], atol=1e-12)


@settings(max_examples=15, deadline=None)
@given(small_operator(), small_operator())
def test_compose_matches_matrix_product_in_the_interior(T1, T2):
    box = TruncationBox(12, 1)
    P = T1.compose(T2).assemble(box).toarray()
    M = T1.assemble(box).toarray() @ T2.assemble(box).toarray()
    r = 2 * (max(T1.shift_radius, 1) + max(T2.shift_radius, 1))
    interior = np.nonzero(box.boundary_distance() >= r)[0]
    rows = np.concatenate([2 * interior, 2 * interior + 1])
    assert np.allclose(P[rows], M[rows], atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(small_operator(), st.complex_numbers(max_magnitude=3.0,
                                            allow_nan=False,
                                            allow_infinity=False))
def test_scaling_is_linear_on_vectors(T, z):
    box = TruncationBox(8, 1)
    rng = np.random.default_rng(5)
    psi = rng.normal(size=box.n_sites * 2) + 0j
    assert np.allclose(T.scale(z).apply(psi, box), z * T.apply(psi, box),
                       atol=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 0.85), st.floats(1.2, 5.0),
       st.floats(0.0, 2 * np.pi))
def test_winding_step_function(m_topo, m_triv, phase):
    # winding of m + e^{i(theta + phase)} is 1 iff |m| < 1, for any offset
    assert winding_number(
        lambda t: np.array([[m_topo + np.exp(1j * (t + phase))]])) == 1
    assert winding_number(
        lambda t: np.array([[m_triv + np.exp(1j * (t + phase))]])) == 0
