"""Interface operators on ``l^2(Z^l, C^N)`` built from finitely many lattice shifts.

An operator is stored as a finite map ``shift -> coefficient profile``; the
term at shift ``g`` with profile ``f`` acts as ``(T psi)(x) = f(x) psi(x - g)``.
Products, adjoints and sums stay inside this class of finite shift sums, which
realises the *-algebra generated by shifts and multiplication operators.

Coefficient profiles are duck-typed here; see :mod:`interfacekit.profiles`
for the concrete asymptotics variants.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import (
    DimensionMismatchError,
    LatticeMismatchError,
    SizeCapError,
)

PRUNE_TOL = 1e-15
DEFAULT_ROW_CAP = 200_000

Shift = tuple


def as_shift(g, dimension: int) -> tuple:
    """Normalize ``g`` (int or sequence) to a length-``dimension`` int tuple."""
    if np.isscalar(g):
        g = (g,)
    g = tuple(int(c) for c in g)
    if len(g) != dimension:
        raise DimensionMismatchError(
            f"shift {g} has {len(g)} components, lattice dimension is {dimension}"
        )
    return g


@dataclass(frozen=True)
class Lattice:
    """Interface lattice ``Z^l`` with matrix fiber ``C^N``."""

    dimension: int
    fiber_dim: int = 1

    def __post_init__(self):
        if not 1 <= int(self.dimension) <= 3:
            raise ValueError("lattice dimension must be 1, 2 or 3 (desk-scale bound)")
        if int(self.fiber_dim) < 1:
            raise ValueError("fiber dimension must be >= 1")

    def compatible(self, other: "Lattice") -> bool:
        return (
            self.dimension == other.dimension and self.fiber_dim == other.fiber_dim
        )


@dataclass(frozen=True)
class TruncationBox:
    """Finite cube ``[-L, L]^l`` with Dirichlet (zero-padding) boundary."""

    half_width: int
    dimension: int = 1
    boundary: str = "dirichlet"
    row_cap: int = DEFAULT_ROW_CAP

    def __post_init__(self):
        if self.half_width < 1:
            raise ValueError("half_width must be positive")
        if self.boundary != "dirichlet":
            raise ValueError("only dirichlet truncation is supported")

    @property
    def side(self) -> int:
        return 2 * self.half_width + 1

    @property
    def n_sites(self) -> int:
        return self.side**self.dimension

    def matrix_dim(self, fiber_dim: int) -> int:
        return self.n_sites * fiber_dim

    def sites(self) -> np.ndarray:
        """All lattice points of the box, lexicographic, shape (n_sites, l)."""
        rng = np.arange(-self.half_width, self.half_width + 1)
        grids = np.meshgrid(*([rng] * self.dimension), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def index_of(self, points: np.ndarray) -> np.ndarray:
        """Lexicographic indices of ``points``; -1 for points outside the box."""
        points = np.atleast_2d(points)
        shifted = points + self.half_width
        inside = np.all((shifted >= 0) & (shifted < self.side), axis=1)
        idx = np.zeros(len(points), dtype=np.int64)
        for k in range(self.dimension):
            idx = idx * self.side + np.clip(shifted[:, k], 0, self.side - 1)
        idx[~inside] = -1
        return idx

    def basis_vector(self, site, component: int, fiber_dim: int) -> np.ndarray:
        """Flat delta vector at ``site`` with the given fiber component."""
        site = as_shift(site, self.dimension)
        idx = self.index_of(np.array([site]))[0]
        if idx < 0:
            raise DimensionMismatchError(f"site {site} outside the box")
        vec = np.zeros(self.n_sites * fiber_dim, dtype=complex)
        vec[idx * fiber_dim + component] = 1.0
        return vec

    def boundary_distance(self) -> np.ndarray:
        """Chebyshev distance of each site to the box boundary."""
        s = self.sites()
        return self.half_width - np.max(np.abs(s), axis=1)


def _probe_sites(dimension: int) -> np.ndarray:
    """Standard probe set: a small cube around the origin plus far ray points."""
    near = np.array(
        list(itertools.product(range(-3, 4), repeat=dimension)), dtype=np.int64
    )
    rays = []
    for r in (10, 50, 100):
        for direction in itertools.product((-1, 0, 1), repeat=dimension):
            if any(direction):
                rays.append([r * c for c in direction])
    return np.vstack([near, np.array(rays, dtype=np.int64)])


_PROBE_CACHE: dict = {}


def probe_sites(dimension: int) -> np.ndarray:
    if dimension not in _PROBE_CACHE:
        _PROBE_CACHE[dimension] = _probe_sites(dimension)
    return _PROBE_CACHE[dimension]


class InterfaceOperator:
    """Finite sum ``T = sum_g f_g S_g`` acting on ``l^2(Z^l, C^N)``.

    Parameters
    ----------
    lattice : Lattice
    terms : iterable of (shift, profile)
        Profiles at equal shifts are merged additively; profiles whose
        measured sup-norm is below ``PRUNE_TOL`` are pruned.
    hermitian : bool
        Claim checked on demand via :meth:`check_hermitian`.
    unitary : bool
        Claim checked on demand via :meth:`check_unitary`.
    """

    def __init__(self, lattice: Lattice, terms, hermitian: bool = False,
                 unitary: bool = False):
        self.lattice = lattice
        self.hermitian = bool(hermitian)
        self.unitary = bool(unitary)
        merged: dict = {}
        for g, prof in terms:
            g = as_shift(g, lattice.dimension)
            if prof.fiber_dim != lattice.fiber_dim:
                raise LatticeMismatchError(
                    f"profile fiber {prof.fiber_dim} != lattice fiber {lattice.fiber_dim}"
                )
            if prof.dimension != lattice.dimension:
                raise LatticeMismatchError(
                    f"profile dimension {prof.dimension} != lattice dimension "
                    f"{lattice.dimension}"
                )
            merged[g] = prof if g not in merged else merged[g].add(prof)
        probes = probe_sites(lattice.dimension)
        self.terms = {
            g: p for g, p in merged.items() if p.measured_sup(probes) > PRUNE_TOL
        }

    # -- structure ---------------------------------------------------------

    @property
    def shift_radius(self) -> int:
        """Maximal Chebyshev norm of a shift in the term support."""
        if not self.terms:
            return 0
        return max(max(abs(c) for c in g) for g in self.terms)

    def sup_norm_bound(self) -> float:
        """Triangle bound ``sum_g ||f_g||_sup`` on the operator norm."""
        probes = probe_sites(self.lattice.dimension)
        return float(sum(p.measured_sup(probes) for p in self.terms.values()))

    def shifts(self):
        return sorted(self.terms)

    # -- algebra -----------------------------------------------------------

    def adjoint(self) -> "InterfaceOperator":
        """Formal adjoint: term at ``-g`` becomes ``x -> f_g(x + g)^dagger``."""
        terms = [
            (tuple(-c for c in g), prof.translate(tuple(-c for c in g)).htranspose())
            for g, prof in self.terms.items()
        ]
        return InterfaceOperator(
            self.lattice, terms, hermitian=self.hermitian, unitary=self.unitary
        )

    def compose(self, other: "InterfaceOperator") -> "InterfaceOperator":
        """Operator product; the term supports combine as a sumset.

        A product of unitary claims stays a unitary claim; hermiticity does
        not survive composition in general and is dropped.
        """
        if not self.lattice.compatible(other.lattice):
            raise LatticeMismatchError("compose: lattice mismatch")
        terms = []
        for g, f in self.terms.items():
            for h, k in other.terms.items():
                gh = tuple(a + b for a, b in zip(g, h))
                terms.append((gh, f.product(k, g)))
        return InterfaceOperator(self.lattice, terms,
                                 unitary=self.unitary and other.unitary)

    def add(self, other: "InterfaceOperator") -> "InterfaceOperator":
        if not self.lattice.compatible(other.lattice):
            raise LatticeMismatchError("add: lattice mismatch")
        terms = list(self.terms.items()) + list(other.terms.items())
        return InterfaceOperator(self.lattice, terms,
                                 hermitian=self.hermitian and other.hermitian)

    def scale(self, z: complex) -> "InterfaceOperator":
        z = complex(z)
        return InterfaceOperator(
            self.lattice, [(g, p.scale(z)) for g, p in self.terms.items()],
            hermitian=self.hermitian and z.imag == 0.0,
            unitary=self.unitary and abs(abs(z) - 1.0) < 1e-15,
        )

    def translate(self, g) -> "InterfaceOperator":
        """Conjugation by the shift ``S_g``: every profile translates by ``g``."""
        g = as_shift(g, self.lattice.dimension)
        return InterfaceOperator(
            self.lattice,
            [(h, p.translate(g)) for h, p in self.terms.items()],
            hermitian=self.hermitian,
            unitary=self.unitary,
        )

    def __add__(self, other):
        return self.add(other)

    def __sub__(self, other):
        return self.add(other.scale(-1.0))

    def __matmul__(self, other):
        return self.compose(other)

    def __mul__(self, z):
        return self.scale(z)

    __rmul__ = __mul__

    # -- action ------------------------------------------------------------

    def apply(self, psi: np.ndarray, box: TruncationBox) -> np.ndarray:
        """Apply ``T`` to a flat vector on the box, Dirichlet outside.

        ``psi`` must have length ``box.n_sites * N`` (or shape
        ``(n_sites, N)``); the result has the same shape as the input.
        """
        if box.dimension != self.lattice.dimension:
            raise DimensionMismatchError("box dimension mismatch")
        N = self.lattice.fiber_dim
        flat_in = psi.ndim == 1
        if psi.size != box.n_sites * N:
            raise DimensionMismatchError(
                f"vector length {psi.size} != {box.n_sites * N}"
            )
        psi2 = psi.reshape(box.n_sites, N)
        sites = box.sites()
        out = np.zeros_like(psi2, dtype=complex)
        for g, prof in self.terms.items():
            src = sites - np.asarray(g, dtype=np.int64)
            src_idx = box.index_of(src)
            valid = src_idx >= 0
            tgt = np.nonzero(valid)[0]
            blocks = prof.evaluate_many(sites[tgt])
            out[tgt] += np.einsum("kij,kj->ki", blocks, psi2[src_idx[tgt]])
        return out.ravel() if flat_in else out

    def assemble(self, box: TruncationBox) -> sp.csr_matrix:
        """Sparse matrix of the Dirichlet truncation on ``box``.

        Column ``j`` equals ``apply`` on the ``j``-th basis vector.
        """
        if box.dimension != self.lattice.dimension:
            raise DimensionMismatchError("box dimension mismatch")
        N = self.lattice.fiber_dim
        dim = box.matrix_dim(N)
        if dim > box.row_cap:
            raise SizeCapError(f"truncation dimension {dim} exceeds cap {box.row_cap}")
        sites = box.sites()
        rows, cols, vals = [], [], []
        fi = np.arange(N)
        ri, ci = np.meshgrid(fi, fi, indexing="ij")
        for g, prof in self.terms.items():
            src = sites - np.asarray(g, dtype=np.int64)
            src_idx = box.index_of(src)
            valid = src_idx >= 0
            tgt = np.nonzero(valid)[0]
            if len(tgt) == 0:
                continue
            blocks = prof.evaluate_many(sites[tgt])
            rows.append((tgt[:, None, None] * N + ri[None]).ravel())
            cols.append((src_idx[tgt][:, None, None] * N + ci[None]).ravel())
            vals.append(blocks.ravel())
        if not rows:
            return sp.csr_matrix((dim, dim), dtype=complex)
        mat = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(dim, dim),
        )
        return mat.tocsr()

    # -- verification ------------------------------------------------------

    def equals(self, other: "InterfaceOperator", atol: float = 1e-12) -> bool:
        """Termwise equality after canonicalization, sampled on probe sites."""
        if not self.lattice.compatible(other.lattice):
            return False
        if set(self.terms) != set(other.terms):
            return False
        probes = probe_sites(self.lattice.dimension)
        for g, p in self.terms.items():
            q = other.terms[g]
            dp = p.evaluate_many(probes) - q.evaluate_many(probes)
            if np.max(np.abs(dp)) > atol:
                return False
        return True

    def check_hermitian(self, atol: float = 1e-12) -> bool:
        return self.equals(self.adjoint(), atol=atol)

    def check_unitary(self, atol: float = 1e-12, box: TruncationBox | None = None) -> bool:
        """Verify ``U*U = 1`` on interior basis vectors of a test box."""
        r = max(self.shift_radius, 1)
        if box is None:
            box = TruncationBox(4 * r + 8, self.lattice.dimension)
        mat = self.assemble(box)
        gram = (mat.conj().T @ mat).tocsr()
        N = self.lattice.fiber_dim
        interior = np.nonzero(box.boundary_distance() >= 2 * r)[0]
        take = interior[:: max(1, len(interior) // 64)]
        for s in take:
            for c in range(N):
                e = np.zeros(box.n_sites * N, dtype=complex)
                e[s * N + c] = 1.0
                if np.linalg.norm(gram @ e - e) > atol:
                    return False
        return True

    def __repr__(self):
        return (
            f"InterfaceOperator(dim={self.lattice.dimension}, "
            f"N={self.lattice.fiber_dim}, shifts={self.shifts()})"
        )


@dataclass(frozen=True)
class Hopping:
    """One crystal hopping: from cell site ``cell_from`` to ``cell_to`` in the
    unit cell translated by ``offset``."""

    offset: tuple
    cell_to: int
    cell_from: int
    amplitude: object  # N x N array or coefficient profile


def fold_cocompact(hoppings, unit_cell_size: int, lattice: Lattice,
                   hermitian: bool = False, unitary: bool = False) -> InterfaceOperator:
    """Reindex a crystal with a finite unit cell as an interface operator.

    The crystal ``X = Z^l x {0..|X0|-1}`` folds to the lattice ``Z^l`` with
    fiber dimension ``N * |X0|``; the returned operator is unitarily
    equivalent to the crystal operator under the canonical reindexing.
    """
    from .profiles import ConstantProfile  # local import; profiles layer on top

    if unit_cell_size < 1:
        raise ValueError("unit cell must be non-empty")
    N = lattice.fiber_dim
    big = Lattice(lattice.dimension, N * unit_cell_size)
    terms = []
    for hop in hoppings:
        if not (0 <= hop.cell_to < unit_cell_size and 0 <= hop.cell_from < unit_cell_size):
            raise ValueError(
                f"hopping {hop} leaves the declared unit cell of size {unit_cell_size}"
            )
        offset = as_shift(hop.offset, lattice.dimension)
        amp = hop.amplitude
        if isinstance(amp, np.ndarray) or np.isscalar(amp):
            amp = ConstantProfile(np.atleast_2d(np.asarray(amp, dtype=complex)),
                                  lattice.dimension)
        if amp.fiber_dim != N:
            raise LatticeMismatchError("hopping amplitude fiber mismatch")
        r0, c0 = hop.cell_to * N, hop.cell_from * N

        def embed(m, r0=r0, c0=c0):
            out = np.zeros((big.fiber_dim, big.fiber_dim), dtype=complex)
            out[r0:r0 + N, c0:c0 + N] = m
            return out

        terms.append((offset, amp.map_values(embed, big.fiber_dim)))
    return InterfaceOperator(big, terms, hermitian=hermitian, unitary=unitary)


def identity_operator(lattice: Lattice) -> InterfaceOperator:
    from .profiles import ConstantProfile

    eye = ConstantProfile(np.eye(lattice.fiber_dim, dtype=complex), lattice.dimension)
    zero = as_shift((0,) * lattice.dimension, lattice.dimension)
    return InterfaceOperator(lattice, [(zero, eye)], hermitian=True, unitary=True)


def zero_operator(lattice: Lattice) -> InterfaceOperator:
    return InterfaceOperator(lattice, [], hermitian=True)
