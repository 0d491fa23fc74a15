"""Profiles, certificates, and the bulk systems at infinity."""

import math

import numpy as np
import pytest

from interfacekit.errors import CertificationError, VariantMixError
from interfacekit.models import build
from interfacekit.operators import InterfaceOperator, Lattice
from interfacekit.profiles import (
    Cap,
    CartesianProfile,
    CompactProfile,
    ConeProfile,
    ConstantProfile,
    DomainWall1DProfile,
    FaceFiberedSystem,
    RadialProfile,
    TranslationInvariantSystem,
    VanishingOscillationProfile,
    directional_limit,
    face_limit,
    quasi_orbits,
)


def tanh_wall(left, right, width=2.0):
    def trans(x):
        return np.array([[left + (right - left) * 0.5
                          * (1.0 + math.tanh(x / width))]])
    env = lambda r: abs(right - left) * math.exp(-2.0 * r / width) + 1e-12
    return DomainWall1DProfile(np.array([[left]]), np.array([[right]]),
                               trans, env)


def test_evaluate_tanh_wall_midpoint():
    prof = tanh_wall(0.0, 1.0)
    v = prof.evaluate((0,))[0, 0].real
    assert 0.0 < v < 1.0


def test_evaluate_empty_compact_is_zero():
    prof = CompactProfile({}, 1, 2)
    assert np.allclose(prof.evaluate((7,)), np.zeros((2, 2)))


def test_evaluate_constant_radial():
    c = np.array([[2.0, 0.0], [0.0, -1.0]])
    prof = RadialProfile(2, 2, lambda w: c, modulus=0.0,
                         envelope=lambda r: 1e-12)
    assert np.allclose(prof.evaluate((5, -3)), c)


def test_domain_wall_certificate_violation():
    bad_trans = lambda x: np.array([[math.sin(0.1 * x)]])  # no limits
    with pytest.raises(CertificationError):
        DomainWall1DProfile(np.array([[0.0]]), np.array([[0.0]]),
                            bad_trans, lambda r: 1e-9)


def test_vo_certificate_violation():
    # oscillation does not vanish: f(x) = sin(x)
    with pytest.raises(CertificationError):
        VanishingOscillationProfile(
            1, 1, lambda x: np.array([[math.sin(x[0])]]),
            [np.array([[0.0]])], lambda r: 1e-6)


def test_cone_caps_must_be_disjoint():
    with pytest.raises(Exception):
        ConeProfile(2, 1, [Cap((1.0, 0.0), 1.5), Cap((-1.0, 0.0), 1.8)],
                    [np.eye(1), np.eye(1)], lambda r: 0.0)


def test_quasi_orbits_wall_two_systems(ssh_wall_05_2):
    systems = quasi_orbits(ssh_wall_05_2.operator)
    assert sorted(s.label for s in systems) == ["left", "right"]
    left = next(s for s in systems if s.label == "left")
    assert np.allclose(left.symbol[(0,)], 0.5 * np.array([[0, 1], [1, 0]]))


def test_quasi_orbits_pure_bulk_single_system():
    lap = build("laplacian", {"dimension": 1}).operator
    systems = quasi_orbits(lap)
    assert len(systems) == 1
    assert isinstance(systems[0], TranslationInvariantSystem)
    assert np.allclose(systems[0].symbol[(1,)], np.eye(1))


def test_quasi_orbits_cartesian_2d_four_faces():
    wall = build("cartesian_2d_wall", {"v_left": 0.0, "v_right": 3.0}).operator
    systems = quasi_orbits(wall)
    faces = [s for s in systems if isinstance(s, FaceFiberedSystem)]
    assert len(faces) == 4
    assert sorted(s.label for s in faces) == [
        "face_1+", "face_1-", "face_2+", "face_2-"]


def test_quasi_orbits_compact_only_gives_zero_system():
    prof = CompactProfile({(0,): np.array([[1.0]])}, 1, 1)
    T = InterfaceOperator(Lattice(1, 1), [((0,), prof)])
    systems = quasi_orbits(T)
    assert len(systems) == 1 and systems[0].symbol == {}


def test_quasi_orbits_empty_operator_raises():
    T = InterfaceOperator(Lattice(1, 1), [])
    with pytest.raises(VariantMixError):
        quasi_orbits(T)


def test_quasi_orbits_rejects_mixed_variants():
    wall = tanh_wall(0.0, 1.0)
    vo = VanishingOscillationProfile(
        1, 1, lambda x: np.array([[1.0]]), [np.array([[1.0]])],
        lambda r: 1e-9)
    T = InterfaceOperator(Lattice(1, 1), [((0,), wall), ((1,), vo)])
    with pytest.raises(VariantMixError):
        quasi_orbits(T)


def test_vo_quasi_orbits_one_per_sampler():
    vo = build("vo_1d", {"sampler_size": 5}).operator
    systems = quasi_orbits(vo)
    assert len(systems) == 5
    mids = sorted(float(s.symbol[(1,)][0, 0].real) for s in systems)
    assert np.allclose(mids, np.linspace(0.7, 1.3, 5))


def test_directional_limit_radial():
    model = build("radial_2d", {"base": 0.5, "amplitude": 1.0})
    w = np.array([0.0, 1.0])
    sys_ = directional_limit(model.operator, w)
    assert np.allclose(sys_.symbol[(0, 0)], np.array([[0.5]]))
    assert np.allclose(sys_.symbol[(1, 0)], np.eye(1))


def test_directional_limit_cone_outside_flagged():
    model = build("cone_2d", {})
    sys_ = directional_limit(model.operator, np.array([0.0, 1.0]))
    assert sys_.zero_limit_flag and sys_.symbol == {}


def test_directional_limit_cone_center():
    model = build("cone_2d", {"mass_1": 1.5, "mass_2": 0.8})
    sys_ = directional_limit(model.operator, np.array([-1.0, 0.0]))
    assert not sys_.zero_limit_flag
    assert np.allclose(sys_.symbol[(0, 0)],
                       1.5 * np.array([[0, 1], [1, 0]]))


def test_face_limit_wall_profile_phase():
    # 2D operator S_{e_1} f with f a wall in x_1: face (1, +) gives the
    # constant limit times the fiber phase
    wall = tanh_wall(0.0, 3.0)
    faces = {
        (1, -1): ConstantProfile(np.array([[0.0]]), 1),
        (1, +1): ConstantProfile(np.array([[3.0]]), 1),
        (2, -1): wall, (2, +1): wall,
    }
    prof = CartesianProfile(
        2, 1, lambda x: wall.evaluate((x[0],)), faces,
        envelope=lambda r: 3.0 * math.exp(-r) + 1e-9)
    T = InterfaceOperator(Lattice(2, 1), [((1, 0), prof)])
    ff = face_limit(T, 1, +1)
    theta = 0.9
    child = ff.at(theta)
    assert child.shifts() == [(0,)]
    assert np.allclose(child.terms[(0,)].evaluate((4,)),
                       3.0 * np.exp(1j * theta))


def test_face_limit_no_dependence_constant_in_theta():
    lap = build("laplacian", {"dimension": 2}).operator
    ff = face_limit(lap, 2, -1)
    a = ff.at(0.3).terms[(1,)].evaluate((0,))
    b = ff.at(2.1).terms[(1,)].evaluate((0,))
    assert np.allclose(a, b)  # x_1 hoppings carry no x_2 shift component


def test_face_limit_2d_laplacian():
    lap = build("laplacian", {"dimension": 2}).operator
    ff = face_limit(lap, 1, +1)
    theta = 1.1
    child = ff.at(theta)
    onsite = child.terms[(0,)].evaluate((2,))
    assert np.allclose(onsite, 2.0 * math.cos(theta))
    assert np.allclose(child.terms[(1,)].evaluate((0,)), 1.0)
    assert np.allclose(child.terms[(-1,)].evaluate((0,)), 1.0)


def test_translation_covariance_of_quasi_orbits(ssh_wall_05_2):
    H = ssh_wall_05_2.operator
    a = quasi_orbits(H)
    b = quasi_orbits(H.translate((9,)))
    assert [s.label for s in a] == [s.label for s in b]
    for sa, sb in zip(a, b):
        assert sa.same_symbol(sb)


def test_compact_absorption_exact(ssh_wall_05_2):
    H = ssh_wall_05_2.operator
    pert = CompactProfile({(2,): np.array([[0, 0.4], [0.4, 0]])}, 1, 2)
    H2 = H + InterfaceOperator(H.lattice, [((0,), pert)])
    a, b = quasi_orbits(H), quasi_orbits(H2)
    assert len(a) == len(b)
    for sa, sb in zip(a, b):
        assert sa.same_symbol(sb)


def test_constant_pocket_survives_merging():
    # regression: a constant profile that already carries a compact pocket
    # must keep it when a further compact profile is merged in
    c = np.array([[0, 0], [0, 1j]])
    base = ConstantProfile(c, 1).add(
        CompactProfile({(0,): c}, 1, 2)).add(
        CompactProfile({(-1,): 2 * c}, 1, 2))
    assert np.allclose(base.evaluate((0,)), 2 * c)
    assert np.allclose(base.evaluate((-1,)), 3 * c)
    assert np.allclose(base.evaluate((5,)), c)


def test_compose_with_pockets_matches_matrix_product():
    # the hypothesis-found case: constants and compacts on both factors
    c = np.array([[0, 0], [0, 1j]])
    lat = Lattice(1, 2)

    def mk():
        return InterfaceOperator(lat, [
            ((-1,), ConstantProfile(c, 1)),
            ((0,), ConstantProfile(c, 1)),
            ((1,), CompactProfile({(0,): c}, 1, 2)),
        ])

    from interfacekit.operators import TruncationBox

    T1, T2 = mk(), mk()
    box = TruncationBox(4, 1)
    P = T1.compose(T2).assemble(box).toarray()
    M = T1.assemble(box).toarray() @ T2.assemble(box).toarray()
    interior = np.nonzero(box.boundary_distance() >= 4)[0]
    rows = np.concatenate([2 * interior, 2 * interior + 1])
    assert np.allclose(P[rows], M[rows], atol=1e-13)


def test_cartesian_corner_consistency_sampled():
    # faces of faces agree at far corners for the catalog wall
    wall = build("cartesian_2d_wall", {"v_left": 0.0, "v_right": 3.0}).operator
    pot = wall.terms[(0, 0)]
    f1p = pot.face_profile(1, +1)   # constant 3
    f2p = pot.face_profile(2, +1)   # 1D wall in x_1
    for r in (10, 50, 100):
        assert np.allclose(f2p.evaluate((r,)), f1p.evaluate((0,)), atol=1e-9)
