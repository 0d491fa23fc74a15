"""Finite-volume eigenanalysis and convergence to the essential spectrum."""

import math

import numpy as np

from interfacekit.models import build
from interfacekit.operators import InterfaceOperator, Lattice, TruncationBox, \
    identity_operator, zero_operator
from interfacekit.profiles import ConstantProfile
from interfacekit.truncation import (
    convergence_study,
    in_gap_states,
    spectrum_truncated,
)

LAT1 = Lattice(1, 1)


def hopping_chain():
    one = ConstantProfile(np.eye(1), 1)
    return InterfaceOperator(LAT1, [((1,), one), ((-1,), one)], hermitian=True)


def test_truncated_hopping_l1_closed_form():
    rep = spectrum_truncated(hopping_chain(), TruncationBox(1, 1))
    expect = sorted(2.0 * math.cos(k * math.pi / 4.0) for k in (1, 2, 3))
    assert np.allclose(sorted(rep.eigenvalues.real), expect, atol=1e-12)


def test_truncated_identity_all_ones():
    rep = spectrum_truncated(identity_operator(LAT1), TruncationBox(5, 1))
    assert np.allclose(rep.eigenvalues.real, 1.0)


def test_truncated_zero_operator():
    rep = spectrum_truncated(zero_operator(LAT1), TruncationBox(4, 1))
    assert np.allclose(rep.eigenvalues, 0.0)


def test_truncated_closed_form_density():
    # eigenvalues 2 cos(k pi / (2L+2)) fill the band
    L = 25
    rep = spectrum_truncated(hopping_chain(), TruncationBox(L, 1))
    n = 2 * L + 1
    expect = sorted(2.0 * math.cos(k * math.pi / (n + 1))
                    for k in range(1, n + 1))
    assert np.allclose(sorted(rep.eigenvalues.real), expect, atol=1e-10)


def test_in_gap_wall_exactly_one_state(ssh_wall_05_2):
    rep = in_gap_states(ssh_wall_05_2.operator, TruncationBox(100, 1),
                        (-0.4, 0.4), locus="wall")
    kept = rep.kept()
    assert len(kept) == 1
    state = kept[0]
    assert abs(state.eigenvalue) < 1e-8
    assert state.decay_rate > 0.3  # exponentially localized
    assert state.boundary_mass < 0.1


def test_in_gap_pure_bulk_zero_states_after_filter():
    bulk = build("ssh_bulk", {"m": 0.5}).operator
    rep = in_gap_states(bulk, TruncationBox(100, 1), (-0.4, 0.4), locus="wall")
    assert len(rep.kept()) == 0
    assert len(rep.artifacts()) == 2  # two Dirichlet edge modes
    for s in rep.artifacts():
        assert s.boundary_mass >= 0.9


def test_in_gap_window_inside_band_warns(ssh_wall_05_2):
    rep = in_gap_states(ssh_wall_05_2.operator, TruncationBox(60, 1),
                        (0.8, 1.2), locus="wall")
    assert rep.warning is not None
    assert len(rep.states) > 5  # dense band cluster


def test_convergence_hopping_chain():
    rep = convergence_study(hopping_chain(), [25, 50, 100])
    ds = rep.distances()
    assert ds[0] >= ds[1] >= ds[2]
    assert ds[-1] <= 0.05
    assert rep.converged


def test_convergence_identity_zero_distance():
    rep = convergence_study(identity_operator(LAT1), [5, 8, 12])
    assert max(rep.distances()) <= 1e-9


def test_convergence_wall(ssh_wall_05_2):
    rep = convergence_study(ssh_wall_05_2.operator, [25, 50, 100],
                            locus="wall")
    assert rep.distances()[-1] <= 0.05
    assert rep.converged


def test_chiral_pairing_of_truncated_eigenvalues(ssh_wall_05_2):
    rep = spectrum_truncated(ssh_wall_05_2.operator, TruncationBox(40, 1))
    evs = np.sort(rep.eigenvalues.real)
    assert np.allclose(evs, -evs[::-1], atol=1e-10)


def test_boundary_filter_correctness():
    # every filtered edge state carries >= 90% of its mass within
    # 5 * shift_radius sites of the box boundary
    bulk = build("ssh_bulk", {"m": 0.25}).operator
    rep = in_gap_states(bulk, TruncationBox(80, 1), (-0.5, 0.5), locus="wall")
    assert rep.artifacts(), "expected edge artifacts for a topological bulk"
    for s in rep.artifacts():
        assert s.boundary_mass >= 0.9
