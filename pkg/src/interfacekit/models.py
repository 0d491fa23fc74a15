"""Catalog of concrete interface models, one per asymptotics family.

Every builder verifies its claimed flags (hermitian / unitary / chiral) on
the constructed operator before returning; the asymptotics certificates run
inside the profile constructors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CertificationError
from .index import ChiralSymmetry
from .operators import InterfaceOperator, Lattice
from .profiles import (
    Cap,
    CartesianProfile,
    ConeProfile,
    ConstantProfile,
    DomainWall1DProfile,
    RadialProfile,
    VanishingOscillationProfile,
)

SSH_UP = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)
SSH_DOWN = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
PAULI_Z = np.diag([1.0, -1.0]).astype(complex)


@dataclass
class ModelDescriptor:
    name: str
    lattice: Lattice
    params: dict
    hermitian: bool = False
    unitary: bool = False
    chiral: bool = False


@dataclass
class Model:
    operator: InterfaceOperator
    descriptor: ModelDescriptor
    chiral: ChiralSymmetry | None = None


def _wall_scalar(left: float, right: float, width: float):
    """Scalar wall ``m(x)``: sharp step for width 0, tanh profile otherwise.

    Returns (callable or None, envelope)."""
    if width == 0.0:
        return None, (lambda r: 0.0)
    amp = abs(right - left)

    def m(x):
        return left + (right - left) * 0.5 * (1.0 + math.tanh(x / width))

    # |m(R) - limit| = amp * (1 - tanh(R/width)) / 2 <= amp e^{-2R/width}
    env = lambda r: amp * math.exp(-2.0 * r / width) + 1e-12
    return m, env


def _gap_guard(*masses):
    for m in masses:
        if abs(abs(m) - 1.0) < 1e-9:
            raise CertificationError(
                f"|m| = 1 closes the bulk gap; the model asserts gapped bulks"
            )


def ssh_wall(m_left: float, m_right: float, width: float = 0.0) -> Model:
    """Chiral 1D chain with a mass wall: bands ``+-[|1-|m||, 1+|m|]`` per side."""
    _gap_guard(m_left, m_right)
    scalar, env = _wall_scalar(m_left, m_right, width)
    trans = None
    if scalar is not None:
        trans = lambda x: scalar(x) * np.array([[0, 1], [1, 0]], dtype=complex)
    mass = DomainWall1DProfile(
        m_left * np.array([[0, 1], [1, 0]]), m_right * np.array([[0, 1], [1, 0]]),
        trans, env,
    )
    lat = Lattice(1, 2)
    op = InterfaceOperator(
        lat,
        [((0,), mass), ((1,), ConstantProfile(SSH_UP, 1)),
         ((-1,), ConstantProfile(SSH_DOWN, 1))],
        hermitian=True,
    )
    desc = ModelDescriptor("ssh_wall", lat,
                           {"m_left": m_left, "m_right": m_right,
                            "width": width},
                           hermitian=True, chiral=True)
    return _verified(Model(op, desc, ChiralSymmetry(PAULI_Z)))


def ssh_bulk(m: float) -> Model:
    """Translation-invariant chiral chain (a wall with equal limits)."""
    _gap_guard(m)
    model = ssh_wall(m, m, width=0.0)
    model.descriptor.name = "ssh_bulk"
    model.descriptor.params = {"m": m}
    return model


def _rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=complex)


def split_step_walk_wall(theta1_left: float, theta1_right: float,
                         theta2: float = math.pi / 8,
                         width: float = 0.0) -> Model:
    """Split-step coin walk whose first coin angle crosses a domain wall.

    ``U = T_down R(theta2) T_up R(theta1(x))`` with spin-selective shifts;
    unitary to 1e-12 on box interiors.
    """
    lat = Lattice(1, 2)
    scalar, env = _wall_scalar(theta1_left, theta1_right, width)
    trans = None if scalar is None else (lambda x: _rotation(scalar(x)))
    coin1 = InterfaceOperator(lat, [((0,), DomainWall1DProfile(
        _rotation(theta1_left), _rotation(theta1_right), trans, env))])
    coin2 = InterfaceOperator(lat, [((0,), ConstantProfile(_rotation(theta2), 1))])
    shift_up = InterfaceOperator(lat, [
        ((1,), ConstantProfile(np.diag([1.0, 0.0]), 1)),
        ((0,), ConstantProfile(np.diag([0.0, 1.0]), 1)),
    ])
    shift_down = InterfaceOperator(lat, [
        ((-1,), ConstantProfile(np.diag([0.0, 1.0]), 1)),
        ((0,), ConstantProfile(np.diag([1.0, 0.0]), 1)),
    ])
    walk = shift_down.compose(coin2).compose(shift_up).compose(coin1)
    walk.unitary = True
    desc = ModelDescriptor("split_step_walk_wall", lat,
                           {"theta1_left": theta1_left,
                            "theta1_right": theta1_right,
                            "theta2": theta2, "width": width},
                           unitary=True)
    return _verified(Model(walk, desc))


def laplacian(dimension: int = 1) -> Model:
    """Nearest-neighbour hopping sum; essential spectrum ``[-2l, 2l]``."""
    lat = Lattice(dimension, 1)
    one = ConstantProfile(np.eye(1), dimension)
    terms = []
    for j in range(dimension):
        for s in (-1, 1):
            g = [0] * dimension
            g[j] = s
            terms.append((tuple(g), one))
    op = InterfaceOperator(lat, terms, hermitian=True)
    desc = ModelDescriptor("laplacian", lat, {"dimension": dimension},
                           hermitian=True)
    return _verified(Model(op, desc))


def cartesian_2d_wall(v_left: float, v_right: float, width: float = 0.0,
                      hopping: float = 1.0) -> Model:
    """2D Laplacian plus a potential wall across the first coordinate."""
    lat = Lattice(2, 1)
    scalar, env = _wall_scalar(v_left, v_right, width)
    wall_1d = DomainWall1DProfile(
        np.array([[v_left]]), np.array([[v_right]]),
        None if scalar is None else (lambda x: np.array([[scalar(x)]])), env,
    )

    def bulk(x):
        v = (v_left if x[0] < 0 else v_right) if scalar is None else scalar(x[0])
        return np.array([[v]])

    faces = {
        (1, -1): ConstantProfile(np.array([[v_left]]), 1),
        (1, +1): ConstantProfile(np.array([[v_right]]), 1),
        (2, -1): wall_1d,
        (2, +1): wall_1d,
    }
    pot = CartesianProfile(2, 1, bulk, faces, env)
    hop = ConstantProfile(hopping * np.eye(1), 2)
    terms = [((0, 0), pot)]
    for g in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        terms.append((g, hop))
    op = InterfaceOperator(lat, terms, hermitian=True)
    desc = ModelDescriptor("cartesian_2d_wall", lat,
                           {"v_left": v_left, "v_right": v_right,
                            "width": width, "hopping": hopping},
                           hermitian=True)
    return _verified(Model(op, desc))


def radial_2d(base: float = 0.0, amplitude: float = 1.0,
              hopping: float = 1.0) -> Model:
    """2D Laplacian plus a potential converging to ``base + amp * omega_1``
    along rays."""
    lat = Lattice(2, 1)
    sphere = lambda w: np.array([[base + amplitude * w[0]]])
    pot = RadialProfile(2, 1, sphere, modulus=abs(amplitude),
                        envelope=lambda r: 1e-12)
    hop = ConstantProfile(hopping * np.eye(1), 2)
    terms = [((0, 0), pot)]
    for g in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        terms.append((g, hop))
    op = InterfaceOperator(lat, terms, hermitian=True)
    desc = ModelDescriptor("radial_2d", lat,
                           {"base": base, "amplitude": amplitude,
                            "hopping": hopping}, hermitian=True)
    return _verified(Model(op, desc))


def cone_2d(mass_1: float = 1.0, mass_2: float = 2.0,
            aperture_deg: float = 40.0) -> Model:
    """Chiral mass supported on two antipodal cones; trivial gapped caps.

    Off the cones the operator decays to zero, so the essential spectrum
    contains 0 from the complement quasi-orbit; only the cap systems are
    gapped.
    """
    lat = Lattice(2, 2)
    aperture = math.radians(aperture_deg)
    caps = [Cap((-1.0, 0.0), aperture), Cap((1.0, 0.0), aperture)]
    off = np.array([[0, 1], [1, 0]], dtype=complex)
    prof = ConeProfile(2, 2, caps, [mass_1 * off, mass_2 * off],
                       envelope=lambda r: 1e-12)
    op = InterfaceOperator(lat, [((0, 0), prof)], hermitian=True)
    desc = ModelDescriptor("cone_2d", lat,
                           {"mass_1": mass_1, "mass_2": mass_2,
                            "aperture_deg": aperture_deg},
                           hermitian=True, chiral=True)
    return _verified(Model(op, desc, ChiralSymmetry(PAULI_Z)))


def vo_1d(base: float = 1.0, amplitude: float = 0.3,
          sampler_size: int = 21) -> Model:
    """Hopping chain with slowly varying amplitude ``base + amp sin(sqrt|x|)``.

    The oscillation vanishes at infinity; the asymptotic range is declared
    through a finite sampler covering ``[base - amp, base + amp]``.
    """
    if abs(amplitude) >= abs(base):
        raise CertificationError("need |amplitude| < |base| for a usable model")

    def a(x):
        return base + amplitude * math.sin(math.sqrt(abs(x)))

    env = lambda r: abs(amplitude) * 0.75 / math.sqrt(max(r - 1, 1.0))
    sampler = [np.array([[base + amplitude * u]])
               for u in np.linspace(-1.0, 1.0, sampler_size)]
    fwd = VanishingOscillationProfile(
        1, 1, lambda x: np.array([[a(x[0])]]), sampler, env)
    bwd = VanishingOscillationProfile(
        1, 1, lambda x: np.array([[a(x[0] + 1)]]), sampler, env)
    lat = Lattice(1, 1)
    op = InterfaceOperator(lat, [((1,), fwd), ((-1,), bwd)], hermitian=True)
    desc = ModelDescriptor("vo_1d", lat,
                           {"base": base, "amplitude": amplitude,
                            "sampler_size": sampler_size}, hermitian=True)
    return _verified(Model(op, desc))


CATALOG = {
    "ssh_wall": ssh_wall,
    "ssh_bulk": ssh_bulk,
    "split_step_walk_wall": split_step_walk_wall,
    "laplacian": laplacian,
    "cartesian_2d_wall": cartesian_2d_wall,
    "radial_2d": radial_2d,
    "cone_2d": cone_2d,
    "vo_1d": vo_1d,
}


def _verified(model: Model) -> Model:
    """Check the claimed flags on the constructed operator."""
    desc = model.descriptor
    if desc.hermitian:
        model.operator.hermitian = True
        if not model.operator.check_hermitian():
            raise CertificationError(f"{desc.name}: hermitian claim failed")
    if desc.unitary:
        model.operator.unitary = True
        if not model.operator.check_unitary():
            raise CertificationError(f"{desc.name}: unitarity claim failed")
    if desc.chiral and model.chiral is not None:
        if not model.chiral.anticommutes_with(model.operator):
            raise CertificationError(f"{desc.name}: chiral claim failed")
    return model


def build(name: str, params: dict | None = None) -> Model:
    """Construct a catalog model by name; unknown names and bad parameters
    raise immediately."""
    if name not in CATALOG:
        raise KeyError(
            f"unknown model '{name}'; catalog: {sorted(CATALOG)}"
        )
    return CATALOG[name](**(params or {}))


def list_models() -> list:
    return sorted(CATALOG)
