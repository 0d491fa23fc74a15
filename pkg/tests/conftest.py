"""Shared fixtures and independent oracles.

The oracles here deliberately avoid the library code paths they check:
periodic truncations are assembled by hand with modular index arithmetic,
Bessel values come from the power series, and the secondary winding oracle
counts signed crossings of the positive real axis instead of accumulating
phases.
"""

import math

import numpy as np
import pytest

from interfacekit.models import build


@pytest.fixture
def ssh_wall_05_2():
    return build("ssh_wall", {"m_left": 0.5, "m_right": 2.0})


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def periodic_matrix(symbol: dict, n_sites: int, fiber_dim: int) -> np.ndarray:
    """Dense circulant-block matrix of a constant symbol with wraparound."""
    dim = n_sites * fiber_dim
    mat = np.zeros((dim, dim), dtype=complex)
    for g, b in symbol.items():
        shift = g[0] if isinstance(g, tuple) else int(g)
        b = np.atleast_2d(np.asarray(b, dtype=complex))
        for x in range(n_sites):
            src = (x - shift) % n_sites
            mat[x * fiber_dim:(x + 1) * fiber_dim,
                src * fiber_dim:(src + 1) * fiber_dim] += b
    return mat


def periodic_operator_matrix(op, n_sites: int) -> np.ndarray:
    """Periodic truncation of a 1D operator with constant profiles,
    evaluated independently of the library's Dirichlet assembler."""
    N = op.lattice.fiber_dim
    dim = n_sites * N
    mat = np.zeros((dim, dim), dtype=complex)
    offset = -(n_sites // 2)
    for g, prof in op.terms.items():
        shift = g[0]
        for x in range(n_sites):
            src = (x - shift) % n_sites
            val = prof.evaluate((x + offset,))
            mat[x * N:(x + 1) * N, src * N:(src + 1) * N] += val
    return mat


def bessel_series(order: int, x: float, terms: int = 60) -> float:
    """J_order(x) by its power series."""
    total = 0.0
    for m in range(terms):
        num = (-1) ** m * (x / 2.0) ** (2 * m + order)
        total += num / (math.factorial(m) * math.factorial(m + order))
    return total


def winding_crossing_oracle(symbol, n_points: int = 4096) -> int:
    """Independent winding count: signed crossings of the positive real axis
    by the determinant curve (half-step sampling, interpolated crossings)."""
    thetas = 2.0 * math.pi * (np.arange(n_points) + 0.5) / n_points
    dets = np.array([np.linalg.det(np.atleast_2d(symbol(t))) for t in thetas])
    count = 0
    for z1, z2 in zip(dets, np.roll(dets, -1)):
        if z1.imag == 0.0 or z1.imag * z2.imag >= 0:
            continue
        t = z1.imag / (z1.imag - z2.imag)
        re_cross = z1.real + t * (z2.real - z1.real)
        if re_cross > 0:
            count += 1 if z1.imag < 0 else -1
    return count


def random_bulk_1d(rng, fiber_dim: int, radius: int):
    """Random hermitian translation-invariant operator on Z."""
    from interfacekit.operators import InterfaceOperator, Lattice
    from interfacekit.profiles import ConstantProfile

    def rand_mat():
        m = rng.normal(size=(fiber_dim, fiber_dim)) \
            + 1j * rng.normal(size=(fiber_dim, fiber_dim))
        return 0.5 * m

    b0 = rand_mat()
    b0 = 0.5 * (b0 + b0.conj().T)
    terms = [((0,), ConstantProfile(b0, 1))]
    for g in range(1, radius + 1):
        bg = rand_mat()
        terms.append(((g,), ConstantProfile(bg, 1)))
        terms.append(((-g,), ConstantProfile(bg.conj().T, 1)))
    return InterfaceOperator(Lattice(1, fiber_dim), terms, hermitian=True)
