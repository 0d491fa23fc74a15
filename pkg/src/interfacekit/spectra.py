"""Bulk spectra via Bloch symbols and the essential spectrum of interface
operators as the closed union over their quasi-orbit bulk systems.

A translation-invariant bulk system has the matrix symbol
``H(theta) = sum_g e^{i theta.g} b_g`` whose eigenvalue sweep over the torus
fills its spectrum.  A finite computation certifies the union only up to the
sampling pitch, so every spectrum carries a resolution and its hull merges
points closer than that resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, SpectralGapError
from .operators import InterfaceOperator, TruncationBox
from .profiles import (
    FaceFiberedSystem,
    TranslationInvariantSystem,
    quasi_orbits,
)

REAL_LINE_IMAG_TOL = 1e-10
DEFAULT_LEVEL0_COUNTS = {1: 1024, 2: 256, 3: 64}
DEFAULT_LEVEL1_COUNTS = {1: 256, 2: 64, 3: 32}
DEFAULT_FIBER_COUNT = 128


@dataclass(frozen=True)
class BlochGrid:
    """Uniform sampling of the torus: ``counts[k]`` angles in dimension k."""

    counts: tuple

    def __post_init__(self):
        counts = tuple(int(c) for c in np.atleast_1d(self.counts))
        object.__setattr__(self, "counts", counts)
        if any(c < 8 for c in counts):
            raise ValueError("BlochGrid needs at least 8 points per dimension")

    @property
    def dimension(self) -> int:
        return len(self.counts)

    @property
    def max_step(self) -> float:
        return 2.0 * math.pi / min(self.counts)

    def angles(self) -> np.ndarray:
        """All grid angles, shape (prod(counts), dimension)."""
        axes = [2.0 * math.pi * np.arange(c) / c for c in self.counts]
        grids = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    @staticmethod
    def default(dimension: int, level: int = 0) -> "BlochGrid":
        table = DEFAULT_LEVEL0_COUNTS if level == 0 else DEFAULT_LEVEL1_COUNTS
        return BlochGrid((table[dimension],) * dimension)


def bloch_symbol(bulk: TranslationInvariantSystem, theta) -> np.ndarray:
    """Symbol matrix ``H(theta) = sum_g e^{i theta.g} b_g``."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if len(theta) != bulk.dimension:
        raise DimensionMismatchError(
            f"angle has {len(theta)} components, bulk dimension {bulk.dimension}"
        )
    H = np.zeros((bulk.fiber_dim, bulk.fiber_dim), dtype=complex)
    for g, b in bulk.symbol.items():
        H += np.exp(1j * float(np.dot(theta, g))) * b
    return H


def bloch_symbols(bulk: TranslationInvariantSystem, angles: np.ndarray) -> np.ndarray:
    """Stacked symbols over a batch of angles, shape (M, N, N)."""
    angles = np.atleast_2d(np.asarray(angles, dtype=float))
    out = np.zeros((len(angles), bulk.fiber_dim, bulk.fiber_dim), dtype=complex)
    for g, b in bulk.symbol.items():
        phase = np.exp(1j * (angles @ np.asarray(g, dtype=float)))
        out += phase[:, None, None] * b
    return out


@dataclass
class SpectrumSet:
    """Closed subset of C as a resolution-tagged point cloud with hulls.

    ``kind`` is ``real_line`` (self-adjoint), ``unit_circle`` (unitary) or
    ``generic``.  The hull is a list of real intervals or circular arcs
    (angle pairs, possibly wrapping once past 2*pi) covering the points.
    """

    points: np.ndarray
    resolution: float
    kind: str
    hull: list = field(default_factory=list)
    approximate: bool = False

    @classmethod
    def from_points(cls, points, resolution: float, kind: str,
                    approximate: bool = False) -> "SpectrumSet":
        pts = np.asarray(points, dtype=complex).ravel()
        if not np.all(np.isfinite(pts)):
            raise ValueError("non-finite eigenvalue output")
        if resolution <= 0:
            raise ValueError("resolution must be positive")
        if kind == "real_line":
            if len(pts) and np.max(np.abs(pts.imag)) > REAL_LINE_IMAG_TOL:
                raise ValueError(
                    "real_line spectrum has imaginary parts above 1e-10"
                )
            pts = pts.real.astype(complex)
        if kind == "unit_circle":
            if len(pts) and np.max(np.abs(np.abs(pts) - 1.0)) > REAL_LINE_IMAG_TOL:
                raise ValueError("unit_circle spectrum leaves the circle")
        order = np.lexsort((pts.imag, pts.real))
        out = cls(points=pts[order], resolution=float(resolution), kind=kind,
                  approximate=approximate)
        out.hull = out._build_hull()
        return out

    # -- hulls -----------------------------------------------------------

    def _merge_tol(self) -> float:
        return self.resolution * (1.0 + 1e-6) + 1e-12

    def _build_hull(self) -> list:
        if len(self.points) == 0:
            return []
        if self.kind == "real_line":
            xs = np.sort(self.points.real)
            tol = self._merge_tol()
            cuts = np.nonzero(np.diff(xs) > tol)[0]
            starts = np.concatenate(([0], cuts + 1))
            ends = np.concatenate((cuts, [len(xs) - 1]))
            return [(float(xs[a]), float(xs[b])) for a, b in zip(starts, ends)]
        if self.kind == "unit_circle":
            ang = np.sort(np.mod(np.angle(self.points), 2.0 * math.pi))
            tol = self._merge_tol()
            cuts = np.nonzero(np.diff(ang) > tol)[0]
            if len(cuts) == 0:
                wrap_gap = ang[0] + 2.0 * math.pi - ang[-1]
                if wrap_gap <= tol or len(ang) == 1:
                    return [(0.0, 2.0 * math.pi)]
                return [(float(ang[0]), float(ang[-1]))]
            starts = np.concatenate(([0], cuts + 1))
            ends = np.concatenate((cuts, [len(ang) - 1]))
            arcs = [[float(ang[a]), float(ang[b])] for a, b in zip(starts, ends)]
            # merge across the 0/2pi seam
            if ang[0] + 2.0 * math.pi - ang[-1] <= tol and len(arcs) > 1:
                first = arcs.pop(0)
                arcs[-1][1] = first[1] + 2.0 * math.pi
            return [tuple(a) for a in arcs]
        return []

    # -- set operations ----------------------------------------------------

    def union(self, other: "SpectrumSet") -> "SpectrumSet":
        kind = self.kind if self.kind == other.kind else "generic"
        return SpectrumSet.from_points(
            np.concatenate([self.points, other.points]),
            max(self.resolution, other.resolution), kind,
            approximate=self.approximate or other.approximate,
        )

    def distance_to(self, z: complex) -> float:
        """Distance from ``z`` to the hull (falls back to the point cloud)."""
        if self.kind == "real_line" and self.hull:
            x = float(np.real(z))
            return min(
                0.0 if a <= x <= b else min(abs(x - a), abs(x - b))
                for a, b in self.hull
            )
        if self.kind == "unit_circle" and self.hull:
            phi = float(np.mod(np.angle(z), 2.0 * math.pi))
            best = math.inf
            for a, b in self.hull:
                for off in (-2.0 * math.pi, 0.0, 2.0 * math.pi):
                    p = phi + off
                    d = 0.0 if a <= p <= b else min(abs(p - a), abs(p - b))
                    best = min(best, d)
            return best
        if len(self.points) == 0:
            return math.inf
        return float(np.min(np.abs(self.points - z)))

    def covers(self, z: complex, slack: float = 0.0) -> bool:
        return self.distance_to(z) <= slack

    def dense_sample(self, step: float | None = None) -> np.ndarray:
        """Hull discretized to at most ``step`` spacing (real values or angles)."""
        if step is None:
            step = max(self.resolution / 4.0, 1e-9)
        if self.kind == "real_line":
            segs = [np.arange(a, b + step, step) for a, b in self.hull] or [
                self.points.real
            ]
            return np.unique(np.concatenate(segs + [self.points.real]))
        if self.kind == "unit_circle":
            segs = [np.arange(a, b + step, step) for a, b in self.hull]
            ang = np.mod(np.angle(self.points), 2.0 * math.pi)
            return np.unique(np.mod(np.concatenate(segs + [ang]), 2.0 * math.pi))
        raise ValueError("dense_sample needs a real_line or unit_circle spectrum")


@dataclass(frozen=True)
class SpectralGap:
    """Maximal open interval (or arc, in angles) around a point, disjoint
    from the essential-spectrum hull."""

    kind: str
    lower: float
    upper: float
    center: float
    radius: float


def spectral_gap(S: SpectrumSet, E) -> SpectralGap:
    """Maximal gap of ``S`` containing ``E``; raises if ``E`` is in the hull."""
    if S.kind == "real_line":
        x = float(np.real(E))
        for a, b in S.hull:
            if a <= x <= b:
                raise SpectralGapError(
                    f"E={x:.6g} lies inside the essential spectrum [{a:.6g}, {b:.6g}]"
                )
        lows = [b for _, b in S.hull if b < x]
        highs = [a for a, _ in S.hull if a > x]
        lo = max(lows) if lows else -math.inf
        hi = min(highs) if highs else math.inf
        return SpectralGap("real_line", lo, hi, x, min(x - lo, hi - x))
    if S.kind == "unit_circle":
        phi = float(np.mod(np.angle(E), 2.0 * math.pi))
        for a, b in S.hull:
            for off in (-2.0 * math.pi, 0.0, 2.0 * math.pi):
                if a <= phi + off <= b:
                    raise SpectralGapError(
                        f"angle {phi:.6g} lies inside the spectral arc "
                        f"[{a:.6g}, {b:.6g}]"
                    )
        if not S.hull:
            return SpectralGap("unit_circle", phi - math.pi, phi + math.pi,
                               phi, math.pi)
        # distance to nearest arc endpoint in both directions
        ends = []
        for a, b in S.hull:
            for off in (-2.0 * math.pi, 0.0, 2.0 * math.pi):
                ends.extend([a + off, b + off])
        ends = np.asarray(ends)
        below = ends[ends <= phi]
        above = ends[ends >= phi]
        lo = float(np.max(below)) if len(below) else phi - 2.0 * math.pi
        hi = float(np.min(above)) if len(above) else phi + 2.0 * math.pi
        return SpectralGap("unit_circle", lo, hi, phi, min(phi - lo, hi - phi))
    raise SpectralGapError("gap queries need a real_line or unit_circle spectrum")


def hausdorff_distance(A: SpectrumSet, B: SpectrumSet,
                       step: float | None = None) -> float:
    """Symmetric Hausdorff distance between two spectra (hull-aware).

    Real-line and unit-circle spectra are compared through densely sampled
    hulls; generic spectra through their point clouds.
    """
    if A.kind == "real_line" and B.kind == "real_line":
        xa, xb = A.dense_sample(step), B.dense_sample(step)
        return max(_directed_1d(xa, xb), _directed_1d(xb, xa))
    if A.kind == "unit_circle" and B.kind == "unit_circle":
        xa, xb = A.dense_sample(step), B.dense_sample(step)
        xb_ext = np.sort(np.concatenate([xb - 2 * math.pi, xb, xb + 2 * math.pi]))
        xa_ext = np.sort(np.concatenate([xa - 2 * math.pi, xa, xa + 2 * math.pi]))
        return max(_directed_1d(xa, xb_ext), _directed_1d(xb, xa_ext))
    pa, pb = A.points, B.points
    if len(pa) == 0 or len(pb) == 0:
        return math.inf if len(pa) != len(pb) else 0.0
    d = np.abs(pa[:, None] - pb[None, :])
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def _directed_1d(xs: np.ndarray, targets: np.ndarray) -> float:
    targets = np.sort(targets)
    idx = np.searchsorted(targets, xs)
    idx = np.clip(idx, 1, len(targets) - 1)
    left = np.abs(xs - targets[idx - 1])
    right = np.abs(xs - targets[idx])
    return float(np.max(np.minimum(left, right))) if len(xs) else 0.0


def _spectrum_kind(hermitian: bool, unitary: bool) -> str:
    if hermitian:
        return "real_line"
    if unitary:
        return "unit_circle"
    return "generic"


def bulk_spectrum(bulk, grid: BlochGrid | None = None, level: int = 0,
                  fiber_count: int = DEFAULT_FIBER_COUNT,
                  trunc_estimate: bool = True,
                  trunc_half_width: int = 40) -> SpectrumSet:
    """Spectrum of one bulk system.

    Translation-invariant systems sweep their Bloch symbol over the torus
    grid.  Face-fibered systems sweep the fiber circle; each fiber is a
    lower-dimensional interface operator whose essential spectrum recurses
    through its own quasi-orbits, plus a truncation-based estimate of
    possible discrete spectrum (flagged approximate).
    """
    if isinstance(bulk, TranslationInvariantSystem):
        if not bulk.symbol:
            kind = _spectrum_kind(bulk.hermitian, bulk.unitary)
            if kind == "unit_circle":
                kind = "generic"  # the zero symbol is not unitary
            return SpectrumSet.from_points(
                np.zeros(1, dtype=complex), 1e-12, kind)
        if grid is None:
            grid = BlochGrid.default(bulk.dimension, level)
        if grid.dimension != bulk.dimension:
            raise DimensionMismatchError("grid dimension mismatch")
        symbols = bloch_symbols(bulk, grid.angles())
        if bulk.hermitian:
            dev = np.max(np.abs(symbols - symbols.conj().transpose(0, 2, 1)))
            if dev > 1e-10:
                raise ValueError(
                    f"hermitian claim violated by Bloch symbol (dev {dev:.2e})"
                )
            evals = np.linalg.eigvalsh(symbols).ravel().astype(complex)
        else:
            evals = np.linalg.eigvals(symbols).ravel()
        pitch = max(bulk.lipschitz_bound() * grid.max_step, 1e-12)
        return SpectrumSet.from_points(
            evals, pitch, _spectrum_kind(bulk.hermitian, bulk.unitary))

    if isinstance(bulk, FaceFiberedSystem):
        if bulk.dimension - 1 < 1:
            raise DimensionMismatchError("face fiber needs parent dimension >= 2")
        thetas = 2.0 * math.pi * np.arange(fiber_count) / fiber_count
        parts = []
        for th in thetas:
            child = bulk.at(th)
            sp = essential_spectrum(child, level=max(level + 1, 1),
                                    trunc_estimate=False)
            if trunc_estimate:
                extra = _fiber_discrete_estimate(child, sp, trunc_half_width)
                if extra is not None:
                    sp = sp.union(extra)
            parts.append(sp)
        out = merge_spectra(parts)
        # account for the fiber-angle sampling in the resolution
        fiber_pitch = _fiber_lipschitz(bulk) * (2.0 * math.pi / fiber_count)
        return SpectrumSet.from_points(
            out.points, max(out.resolution, fiber_pitch, 1e-12), out.kind,
            approximate=out.approximate)

    raise TypeError(f"unknown bulk system {type(bulk).__name__}")


def _fiber_lipschitz(bulk: FaceFiberedSystem) -> float:
    """Bound on the fiber operators' norm derivative in the fiber angle."""
    from .operators import probe_sites

    child = bulk.at(0.0)
    probes = probe_sites(child.lattice.dimension)
    return float(sum(p.measured_sup(probes) for p in child.terms.values()))


def _fiber_discrete_estimate(child: InterfaceOperator, ess: SpectrumSet,
                             half_width: int) -> SpectrumSet | None:
    """Truncation eigenvalues of a fiber operator away from its essential
    hull and away from the box boundary: candidate discrete spectrum."""
    box = TruncationBox(half_width, child.lattice.dimension)
    mat = child.assemble(box).toarray()
    hermitian = child.hermitian
    if hermitian:
        evals, vecs = np.linalg.eigh(mat)
        evals = evals.astype(complex)
    else:
        evals, vecs = np.linalg.eig(mat)
    N = child.lattice.fiber_dim
    margin = 5 * max(child.shift_radius, 1)
    near_edge = box.boundary_distance() < margin
    keep = []
    for k in range(len(evals)):
        if ess.distance_to(evals[k]) <= 2.0 * ess.resolution:
            continue
        site_mass = np.abs(vecs[:, k].reshape(box.n_sites, N)) ** 2
        frac_edge = site_mass[near_edge].sum() / site_mass.sum()
        if frac_edge >= 0.9:
            continue  # Dirichlet boundary artifact
        keep.append(evals[k])
    if not keep:
        return None
    return SpectrumSet.from_points(np.asarray(keep), ess.resolution, ess.kind,
                                   approximate=True)


def essential_spectrum(T: InterfaceOperator, grid: BlochGrid | None = None,
                       sphere_count: int = 360,
                       fiber_count: int = DEFAULT_FIBER_COUNT,
                       level: int = 0,
                       trunc_estimate: bool = True) -> SpectrumSet:
    """Essential spectrum of ``T``: closed union of its bulk spectra.

    Deterministic for a fixed grid: quasi-orbits are processed in sorted
    label order and the union is a hull merge at the combined resolution.
    """
    systems = sorted(quasi_orbits(T, sphere_count=sphere_count),
                     key=lambda s: s.label)
    parts = [
        bulk_spectrum(s, grid=grid if isinstance(s, TranslationInvariantSystem)
                      else None,
                      level=level, fiber_count=fiber_count,
                      trunc_estimate=trunc_estimate)
        for s in systems
    ]
    return merge_spectra(parts)


def merge_spectra(parts) -> SpectrumSet:
    """Single-pass union of several spectra (one final sort and hull merge)."""
    parts = list(parts)
    if not parts:
        raise ValueError("nothing to merge")
    kinds = {p.kind for p in parts}
    kind = kinds.pop() if len(kinds) == 1 else "generic"
    return SpectrumSet.from_points(
        np.concatenate([p.points for p in parts]),
        max(p.resolution for p in parts), kind,
        approximate=any(p.approximate for p in parts),
    )


def grid_refinement_report(T: InterfaceOperator, counts=(128, 256, 512, 1024),
                           sphere_count: int = 60) -> list:
    """Hausdorff distances between successive grid refinements.

    Returns ``[(count, distance_to_previous), ...]``; refining the grid never
    shrinks the point set, and the distances decay at the pitch rate.
    """
    dim = T.lattice.dimension
    report = []
    prev = None
    for c in counts:
        sp = essential_spectrum(T, grid=BlochGrid((c,) * dim),
                                sphere_count=sphere_count)
        if prev is not None:
            report.append((c, hausdorff_distance(prev, sp)))
        prev = sp
    return report
