"""Functional calculus and time evolution for non-propagation experiments.

Self-adjoint operators use Chebyshev polynomial calculus on a rescaled
spectral hull; unitary (quantum walk) operators use trigonometric
polynomials in ``U`` and ``U*``.  The time evolution ``e^{-itH}`` expands in
Chebyshev polynomials with Bessel-function coefficients; ``U^n`` is applied
step by step.

The non-propagation bound states that a state spectrally filtered away from
the spectrum of one bulk system cannot travel toward that bulk's region at
infinity.  The bound is existential in the region size; the experiment scans
a nested family of regions and reports the smallest radius achieving the
requested mass bound, turning the existence statement into a measured
quantity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from numpy.polynomial import chebyshev as npcheb
from scipy.special import jv

from .errors import (
    FilterBudgetError,
    HypothesisViolationError,
    PropagationDomainError,
)
from .operators import InterfaceOperator, TruncationBox
from .profiles import Cap, TranslationInvariantSystem, quasi_orbits
from .spectra import SpectrumSet, bulk_spectrum

DEFAULT_BUDGET = 1e-6
MAX_FILTER_DEGREE = 2000
EVOLVE_DEGREE_SLOPE = 1.2
EVOLVE_DEGREE_OFFSET = 40
BOUNDARY_MARGIN = 10
BOUNDARY_LEAK_TOL = 1e-8
HERMITIAN_SAMPLES_PER_UNIT = 64


def smooth_bump(a: float, b: float):
    """C-infinity bump supported exactly on the open interval (a, b)."""
    if not a < b:
        raise ValueError("need a < b")
    mid, half = 0.5 * (a + b), 0.5 * (b - a)

    def bump(x):
        u = (np.asarray(x, dtype=float) - mid) / half
        out = np.zeros_like(u)
        inside = np.abs(u) < 1.0
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2))
        return out

    return bump


def operator_hull_bounds(T: InterfaceOperator, box: TruncationBox,
                         pad: float = 0.02) -> tuple:
    """Estimated (center, radius) covering the truncated spectrum."""
    mat = T.assemble(box)
    dim = mat.shape[0]
    if dim <= 600:
        evals = np.linalg.eigvalsh(mat.toarray())
        lo, hi = float(evals[0]), float(evals[-1])
    else:
        v0 = np.ones(dim) / math.sqrt(dim)  # deterministic Lanczos start
        hi = float(spla.eigsh(mat, k=1, which="LA", v0=v0,
                              return_eigenvectors=False)[0])
        lo = float(spla.eigsh(mat, k=1, which="SA", v0=v0,
                              return_eigenvectors=False)[0])
    center = 0.5 * (lo + hi)
    radius = 0.5 * (hi - lo) * (1.0 + pad) + 1e-12
    return center, radius


@dataclass
class SpectralFilter:
    """Polynomial realisation of a spectral window function.

    ``chebyshev`` filters expand a real function on the rescaled hull
    ``[center - radius, center + radius]``; ``trigonometric`` filters expand
    a function of the angle on the unit circle in powers of ``U`` and
    ``U*``.  ``approximation_error`` is the measured sup-norm deviation over
    the hull; construction fails if the declared budget is unreachable at
    the maximal degree.
    """

    kind: str
    coefficients: np.ndarray
    support: tuple
    approximation_error: float
    budget: float
    center: float = 0.0
    radius: float = 1.0

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @classmethod
    def chebyshev(cls, func, support: tuple, hull: tuple,
                  budget: float = DEFAULT_BUDGET,
                  max_degree: int = MAX_FILTER_DEGREE) -> "SpectralFilter":
        center, radius = float(hull[0]), float(hull[1])
        scaled = lambda u: func(center + radius * u)
        xs = np.cos(np.pi * (np.arange(4096) + 0.5) / 4096)  # dense hull grid
        target = scaled(xs)
        deg = 32
        while True:
            coef = npcheb.chebinterpolate(scaled, deg)
            err = float(np.max(np.abs(npcheb.chebval(xs, coef) - target)))
            if err <= budget:
                break
            if deg >= max_degree:
                raise FilterBudgetError(
                    f"chebyshev degree {deg} reaches error {err:.2e} > "
                    f"budget {budget:.0e}"
                )
            deg = min(2 * deg, max_degree)
        return cls(kind="chebyshev", coefficients=coef, support=tuple(support),
                   approximation_error=err, budget=budget, center=center,
                   radius=radius)

    @classmethod
    def trigonometric(cls, func, support: tuple,
                      budget: float = DEFAULT_BUDGET,
                      max_degree: int = MAX_FILTER_DEGREE) -> "SpectralFilter":
        """Filter for unitary operators; ``func`` takes angles in [0, 2 pi)."""
        dense = 2.0 * math.pi * np.arange(8192) / 8192
        target = func(dense)
        K = 16
        while True:
            M = max(8 * K, 256)
            ang = 2.0 * math.pi * np.arange(M) / M
            c = np.fft.fft(func(ang)) / M  # c[k] multiplies e^{i k theta}
            ks = np.fft.fftfreq(M, d=1.0 / M).astype(int)
            keep = np.abs(ks) <= K
            coef_pairs = {int(k): c[i] for i, k in enumerate(ks) if keep[i]}
            approx = np.zeros_like(dense, dtype=complex)
            for k, ck in coef_pairs.items():
                approx += ck * np.exp(1j * k * dense)
            err = float(np.max(np.abs(approx - target)))
            if err <= budget:
                break
            if K >= max_degree:
                raise FilterBudgetError(
                    f"trigonometric degree {K} reaches error {err:.2e} > "
                    f"budget {budget:.0e}"
                )
            K = min(2 * K, max_degree)
        coefs = np.array([coef_pairs.get(k, 0.0)
                          for k in range(-K, K + 1)], dtype=complex)
        return cls(kind="trigonometric", coefficients=coefs,
                   support=tuple(support), approximation_error=err,
                   budget=budget)

    def window_values(self, x: np.ndarray) -> np.ndarray:
        """Evaluate the polynomial filter at spectral points (diagnostics)."""
        if self.kind == "chebyshev":
            u = (np.asarray(x, dtype=float) - self.center) / self.radius
            return npcheb.chebval(u, self.coefficients)
        K = (len(self.coefficients) - 1) // 2
        ang = np.asarray(x, dtype=float)
        out = np.zeros_like(ang, dtype=complex)
        for i, k in enumerate(range(-K, K + 1)):
            out += self.coefficients[i] * np.exp(1j * k * ang)
        return out


def _chebyshev_apply(mat: sp.spmatrix, coef: np.ndarray, psi: np.ndarray,
                     center: float, radius: float) -> np.ndarray:
    """Clenshaw-free forward recursion ``sum_k c_k T_k(Hs) psi``."""
    hs = lambda v: (mat @ v - center * v) / radius
    t_prev = psi.astype(complex)
    out = coef[0] * t_prev
    if len(coef) == 1:
        return out
    t_cur = hs(t_prev)
    out = out + coef[1] * t_cur
    for k in range(2, len(coef)):
        t_next = 2.0 * hs(t_cur) - t_prev
        t_prev, t_cur = t_cur, t_next
        out = out + coef[k] * t_cur
    return out


def apply_filter(T: InterfaceOperator, filt: SpectralFilter, psi: np.ndarray,
                 box: TruncationBox, op: sp.spmatrix | None = None) -> np.ndarray:
    """Apply ``eta(T)`` to a box vector through the polynomial filter."""
    mat = op if op is not None else T.assemble(box)
    if filt.kind == "chebyshev":
        return _chebyshev_apply(mat, filt.coefficients, psi,
                                filt.center, filt.radius)
    K = (len(filt.coefficients) - 1) // 2
    out = filt.coefficients[K] * psi.astype(complex)
    fwd = psi.astype(complex)
    bwd = psi.astype(complex)
    adj = mat.conj().T.tocsr()
    for k in range(1, K + 1):
        fwd = mat @ fwd
        bwd = adj @ bwd
        out = out + filt.coefficients[K + k] * fwd
        out = out + filt.coefficients[K - k] * bwd
    return out


def support_radius(psi: np.ndarray, box: TruncationBox, fiber_dim: int,
                   tol: float = 1e-14) -> int:
    amp = np.sqrt((np.abs(psi.reshape(box.n_sites, fiber_dim)) ** 2).sum(axis=1))
    if amp.max() == 0:
        return 0
    live = amp > tol * amp.max()
    sites = box.sites()[live]
    return int(np.max(np.abs(sites)))


def effective_support_radius(psi: np.ndarray, box: TruncationBox,
                             fiber_dim: int, mass_tol: float) -> int:
    """Smallest radius outside of which the state carries at most
    ``mass_tol`` of its norm (dust below the measurement floor does not
    count as support)."""
    mass = (np.abs(psi.reshape(box.n_sites, fiber_dim)) ** 2).sum(axis=1)
    radii = np.max(np.abs(box.sites()), axis=1)
    order = np.argsort(radii)
    tail = np.sqrt(np.cumsum(mass[order][::-1])[::-1])
    beyond = tail <= mass_tol * math.sqrt(float(mass.sum()))
    if not np.any(beyond):
        return int(radii.max())
    return int(radii[order][np.argmax(beyond)])


def _boundary_band_mass(psi: np.ndarray, box: TruncationBox,
                        fiber_dim: int) -> float:
    mass = (np.abs(psi.reshape(box.n_sites, fiber_dim)) ** 2).sum(axis=1)
    band = box.boundary_distance() < BOUNDARY_MARGIN
    return math.sqrt(float(mass[band].sum()))


def _check_boundary_leak(psi_out: np.ndarray, box: TruncationBox,
                         fiber_dim: int, ref_norm: float,
                         input_leak: float = 0.0,
                         tol: float = BOUNDARY_LEAK_TOL) -> None:
    """The evolution must not grow the mass near the boundary: what the
    input already carried there is the caller's responsibility, and ambient
    dust may evolve proportionally without signalling a wavefront."""
    leak = _boundary_band_mass(psi_out, box, fiber_dim)
    if leak > 2.0 * input_leak + tol * ref_norm:
        raise PropagationDomainError(
            f"evolved state grew its mass within {BOUNDARY_MARGIN} sites of "
            f"the box boundary to {leak:.2e} (input: {input_leak:.2e}); "
            "enlarge the box"
        )


def evolve(T: InterfaceOperator, psi: np.ndarray, time, box: TruncationBox,
           op: sp.spmatrix | None = None,
           hull: tuple | None = None) -> np.ndarray:
    """Time evolution on the box: ``U^n psi`` or ``e^{-itH} psi``.

    Unitary path: ``time`` is an integer; the support (shift radius times
    steps) must stay ``BOUNDARY_MARGIN`` sites away from the boundary.
    Hermitian path: Chebyshev expansion of ``e^{-itx}`` at degree
    ``1.2 * |t| * hull_radius + 40``; the effective support is checked by
    measuring the mass in the boundary band afterwards.
    """
    mat = op if op is not None else T.assemble(box)
    if T.unitary:
        n = int(time)
        if n != time:
            raise ValueError("unitary evolution needs integer time")
        r = max(T.shift_radius, 1)
        if support_radius(psi, box, T.lattice.fiber_dim) + abs(n) * r \
                > box.half_width - BOUNDARY_MARGIN:
            raise PropagationDomainError(
                f"support would reach within {BOUNDARY_MARGIN} sites of the "
                f"boundary after {n} steps"
            )
        out = psi.astype(complex)
        step = mat if n >= 0 else mat.conj().T.tocsr()
        for _ in range(abs(n)):
            out = step @ out
        drift = abs(np.linalg.norm(out) - np.linalg.norm(psi))
        if drift > 1e-10 * max(np.linalg.norm(psi), 1e-300):
            raise PropagationDomainError(
                f"unitary evolution norm drift {drift:.2e} exceeds 1e-10"
            )
        return out
    if not T.hermitian:
        raise ValueError("evolve needs a hermitian or unitary operator")
    t = float(time)
    if hull is None:
        hull = operator_hull_bounds(T, box)
    center, radius = hull
    tau = t * radius
    deg = int(math.ceil(EVOLVE_DEGREE_SLOPE * abs(tau))) + EVOLVE_DEGREE_OFFSET
    k = np.arange(deg + 1)
    coef = ((2.0 - (k == 0)) * (-1j) ** k) * jv(k, tau)
    in_leak = _boundary_band_mass(psi, box, T.lattice.fiber_dim)
    out = np.exp(-1j * t * center) * _chebyshev_apply(mat, coef, psi,
                                                      center, radius)
    _check_boundary_leak(out, box, T.lattice.fiber_dim, np.linalg.norm(psi),
                         input_leak=in_leak)
    return out


@dataclass
class Region:
    """Nested neighbourhoods of one quasi-orbit at infinity, indexed by a
    radius: half-lines for wall orbits, truncated cones for sphere caps, or
    a custom ``(box, r) -> site mask`` family."""

    kind: str
    coordinate: int = 1
    sign: int = 1
    cap: Cap | None = None
    custom: object = None

    @classmethod
    def half_line(cls, coordinate: int = 1, sign: int = 1) -> "Region":
        return cls(kind="half_line", coordinate=coordinate, sign=sign)

    @classmethod
    def truncated_cone(cls, cap: Cap) -> "Region":
        return cls(kind="truncated_cone", cap=cap)

    def mask(self, box: TruncationBox, r: float) -> np.ndarray:
        sites = box.sites()
        if self.kind == "half_line":
            return self.sign * sites[:, self.coordinate - 1] >= r
        if self.kind == "truncated_cone":
            norms = np.linalg.norm(sites, axis=1)
            center = np.asarray(self.cap.center)
            with np.errstate(invalid="ignore", divide="ignore"):
                cosang = (sites @ center) / np.where(norms > 0, norms, 1.0)
            return (norms > r) & (cosang >= math.cos(self.cap.angular_radius))
        if self.kind == "custom":
            return np.asarray(self.custom(box, r), dtype=bool)
        raise ValueError(f"unknown region kind {self.kind}")

    def describe(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "half_line":
            out.update({"coordinate": self.coordinate, "sign": self.sign})
        if self.kind == "truncated_cone":
            out.update({"center": list(self.cap.center),
                        "angular_radius": self.cap.angular_radius})
        return out


def region_for_orbit(T: InterfaceOperator, label: str) -> Region:
    """Default neighbourhood family of a labelled quasi-orbit."""
    labels = label.split("|")
    if "left" in labels:
        return Region.half_line(1, -1)
    if "right" in labels:
        return Region.half_line(1, +1)
    raise ValueError(
        f"no default region for quasi-orbit '{label}'; pass region= explicitly"
    )


@dataclass
class NonPropagationReport:
    passed: bool
    eps: float
    achieved_radius: float | None
    mass_by_radius: dict
    max_time: float
    times_sampled: int
    hypothesis_distance: float
    region: dict
    monotone: bool
    time_window_maxima: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "eps": self.eps,
            "achieved_radius": self.achieved_radius,
            "mass_by_radius": {str(k): v for k, v in self.mass_by_radius.items()},
            "max_time": self.max_time,
            "times_sampled": self.times_sampled,
            "hypothesis_distance": self.hypothesis_distance,
            "region": self.region,
            "monotone": self.monotone,
            "time_window_maxima": self.time_window_maxima,
        }


def _filter_support_clear_of(filt: SpectralFilter, bulk_sp: SpectrumSet) -> float:
    """Distance between the filter support and a bulk spectrum; <= 0 means
    the non-propagation hypothesis fails."""
    a, b = filt.support
    if bulk_sp.kind == "real_line":
        best = math.inf
        for lo, hi in bulk_sp.hull:
            if max(lo, a) <= min(hi, b):
                return 0.0
            best = min(best, max(lo - b, a - hi))
        return best
    if bulk_sp.kind == "unit_circle":
        best = math.inf
        for lo, hi in bulk_sp.hull:
            for off in (-2 * math.pi, 0.0, 2 * math.pi):
                lo_, hi_ = lo + off, hi + off
                if max(lo_, a) <= min(hi_, b):
                    return 0.0
                best = min(best, max(lo_ - b, a - hi_))
        return best
    raise HypothesisViolationError("bulk spectrum kind unsupported")


def non_propagation_experiment(
        T: InterfaceOperator, filt: SpectralFilter, target, psi: np.ndarray,
        box: TruncationBox, eps: float = 1e-2, max_time: float = 100.0,
        samples_per_unit: int = HERMITIAN_SAMPLES_PER_UNIT,
        radii=None, region: Region | None = None,
        sphere_count: int = 360,
        hull: tuple | None = None) -> NonPropagationReport:
    """Measure how little filtered mass reaches the region of one bulk system.

    ``target`` is a quasi-orbit label (or a ``TranslationInvariantSystem``).
    Refuses to run when the filter support meets that bulk's spectrum, since
    the non-propagation bound presumes disjointness.  Scans the nested region
    family and reports, per radius, the maximal relative mass over all
    sampled times; the smallest radius meeting ``eps`` is the achieved one.
    """
    if isinstance(target, TranslationInvariantSystem):
        system = target
    else:
        systems = [s for s in quasi_orbits(T, sphere_count=sphere_count)
                   if isinstance(s, TranslationInvariantSystem)
                   and target in s.label.split("|")]
        if not systems:
            raise ValueError(f"no quasi-orbit labelled '{target}'")
        system = systems[0]
    bulk_sp = bulk_spectrum(system)
    dist = _filter_support_clear_of(filt, bulk_sp)
    if dist <= bulk_sp.resolution:
        raise HypothesisViolationError(
            f"filter support {filt.support} meets the spectrum of bulk "
            f"'{system.label}' (clearance {dist:.3e}); the non-propagation "
            "hypothesis requires disjoint supports"
        )
    if region is None:
        region = region_for_orbit(T, system.label)
    if radii is None:
        radii = list(range(0, max(box.half_width // 2, 1), 2))
    radii = sorted(float(r) for r in radii)

    mat = T.assemble(box)
    N = T.lattice.fiber_dim
    ref = float(np.linalg.norm(psi))
    phi = apply_filter(T, filt, psi, box, op=mat)

    masks = [np.repeat(region.mask(box, r), N) for r in radii]
    max_mass = np.zeros(len(radii))
    window_maxima = []  # running maxima at 1/4, 1/2, full horizon

    # mass below the measurement floor (three orders under the requested
    # bound, or the filter's own accuracy) cannot affect a pass/fail
    # decision at eps; it neither counts as support nor as boundary leak
    floor = max(BOUNDARY_LEAK_TOL, 5.0 * filt.approximation_error,
                1e-3 * eps)

    if T.unitary:
        n_steps = int(max_time)
        r_support = max(T.shift_radius, 1)
        if effective_support_radius(phi, box, N, floor) \
                + n_steps * r_support > box.half_width - BOUNDARY_MARGIN:
            raise PropagationDomainError("box too small for the step count")
        state = phi.copy()
        in_leak = _boundary_band_mass(phi, box, N)
        checkpoints = {n_steps // 4, n_steps // 2, n_steps}
        for n in range(n_steps + 1):
            if n > 0:
                state = mat @ state
            for i, m in enumerate(masks):
                max_mass[i] = max(max_mass[i],
                                  float(np.linalg.norm(state[m])) / ref)
            if n in checkpoints:
                window_maxima.append(float(max_mass[-1] if len(masks) else 0.0))
        _check_boundary_leak(state, box, N, ref, input_leak=in_leak,
                             tol=floor)
        n_sampled = n_steps + 1
    else:
        if hull is None:
            hull = operator_hull_bounds(T, box)
        dt = 1.0 / samples_per_unit
        n_sampled = int(round(max_time * samples_per_unit)) + 1
        center, radius_h = hull
        tau = dt * radius_h
        deg = int(math.ceil(EVOLVE_DEGREE_SLOPE * abs(tau))) + EVOLVE_DEGREE_OFFSET
        k = np.arange(deg + 1)
        coef = ((2.0 - (k == 0)) * (-1j) ** k) * jv(k, tau)
        phase = np.exp(-1j * dt * center)
        state = phi.copy()
        in_leak = _boundary_band_mass(phi, box, N)
        checkpoints = {n_sampled // 4, n_sampled // 2, n_sampled - 1}
        for it in range(n_sampled):
            if it > 0:
                state = phase * _chebyshev_apply(mat, coef, state, center,
                                                 radius_h)
            for i, m in enumerate(masks):
                max_mass[i] = max(max_mass[i],
                                  float(np.linalg.norm(state[m])) / ref)
            if it in checkpoints:
                window_maxima.append(float(max_mass[-1] if len(masks) else 0.0))
        _check_boundary_leak(state, box, N, ref, input_leak=in_leak,
                             tol=floor)

    mass_by_radius = {r: float(m) for r, m in zip(radii, max_mass)}
    achieved = next((r for r, m in zip(radii, max_mass) if m <= eps), None)
    monotone = bool(np.all(np.diff(max_mass) <= 1e-12))
    return NonPropagationReport(
        passed=achieved is not None, eps=eps, achieved_radius=achieved,
        mass_by_radius=mass_by_radius, max_time=max_time,
        times_sampled=n_sampled, hypothesis_distance=dist,
        region=region.describe(), monotone=monotone,
        time_window_maxima=window_maxima,
    )
