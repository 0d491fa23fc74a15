"""Interface indices in the complex chiral class and their decomposition into
bulk invariants.

The bulk side of the correspondence is a winding number: the degree of
``theta -> det Q(theta)`` where ``Q`` is the off-diagonal block of a gapped
chiral Bloch symbol.  The interface side is a chirality-weighted count of
zero modes of the truncated operator, with Dirichlet boundary artifacts
filtered by support location.  For a 1D domain wall the two sides satisfy the
integer identity ``index = w_left - w_right``; the report always carries the
residual rather than silently zeroing it.

The cone/sector decomposition is EXPERIMENTAL: it realises the signed-sum
decomposition of the interface class over disjoint caps at infinity by
compressing each cap's bulk operator to its sector (a half-space Toeplitz
shadow of the one-sided boundary map) and counting the chiral charge that
accumulates at the cut.  The sector-orientation sign is a numerical
heuristic; the identity residual is reported, never assumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    IndexInstabilityError,
    NotInvertibleError,
    SectorError,
    SpectralGapError,
    CrossingAmbiguityError,
)
from .operators import InterfaceOperator, TruncationBox, probe_sites
from .profiles import (
    Cap,
    CompactProfile,
    ConeProfile,
    ConstantProfile,
    DomainWall1DProfile,
    TranslationInvariantSystem,
    check_caps_disjoint,
    directional_limit,
)
from .spectra import (
    SpectrumSet,
    bloch_symbols,
    bulk_spectrum,
    essential_spectrum,
    merge_spectra,
    spectral_gap,
)
from .truncation import in_gap_states

WINDING_DET_TOL = 1e-8
WINDING_RESIDUAL_TOL = 0.1
ZERO_WINDOW_FRACTION = 0.2


@dataclass
class ChiralSymmetry:
    """Unitary involution on the fiber anticommuting with the Hamiltonian."""

    involution: np.ndarray

    def __post_init__(self):
        pi = np.atleast_2d(np.asarray(self.involution, dtype=complex))
        if np.linalg.norm(pi @ pi.conj().T - np.eye(len(pi))) > 1e-12:
            raise ValueError("chiral involution is not unitary")
        if np.linalg.norm(pi @ pi - np.eye(len(pi))) > 1e-12:
            raise ValueError("chiral involution does not square to one")
        self.involution = pi

    @property
    def fiber_dim(self) -> int:
        return self.involution.shape[0]

    def grading(self):
        """Orthonormal bases of the +1 and -1 eigenspaces."""
        evals, vecs = np.linalg.eigh(self.involution)
        minus = vecs[:, evals < 0]
        plus = vecs[:, evals > 0]
        return plus, minus

    def anticommutes_with(self, T: InterfaceOperator, atol: float = 1e-10) -> bool:
        pi = self.involution
        probes = probe_sites(T.lattice.dimension)
        for prof in T.terms.values():
            vals = prof.evaluate_many(probes)
            if np.max(np.abs(pi @ vals + vals @ pi)) > atol:
                return False
        return True

    def expectation(self, vec: np.ndarray) -> float:
        """``<psi| (1 x Pi) |psi>`` for a flat, normalized box vector."""
        N = self.fiber_dim
        v = vec.reshape(-1, N)
        return float(np.real(np.einsum("xi,ij,xj->", v.conj(), self.involution, v)))


@dataclass
class IndexReport:
    """Interface index with its bulk decomposition ledger."""

    interface_index: int
    per_bulk: dict
    signs: dict
    identity_residual: int
    experimental: bool = False
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "interface_index": self.interface_index,
            "per_bulk": dict(self.per_bulk),
            "signs": dict(self.signs),
            "identity_residual": self.identity_residual,
            "experimental": self.experimental,
            "details": self.details,
        }


def winding_number(symbol, n_points: int = 4096,
                   det_tol: float = WINDING_DET_TOL,
                   residual_tol: float = WINDING_RESIDUAL_TOL) -> int:
    """Degree of ``theta -> det(symbol(theta))`` around the origin.

    ``symbol`` maps an angle to an invertible matrix.  The total phase
    accumulated by the determinant over the circle, divided by 2*pi, is
    rounded to the nearest integer; the rounding residual must stay below
    ``residual_tol`` and the determinant above ``det_tol`` (otherwise the
    gap closed and no winding exists).
    """
    thetas = 2.0 * math.pi * np.arange(n_points + 1) / n_points
    dets = np.array([np.linalg.det(np.atleast_2d(symbol(t))) for t in thetas])
    if np.min(np.abs(dets)) <= det_tol:
        raise NotInvertibleError(
            f"symbol determinant reached {np.min(np.abs(dets)):.3e} "
            f"(tolerance {det_tol:.0e}); gap closed"
        )
    phases = np.angle(dets[1:] / dets[:-1])
    total = float(np.sum(phases)) / (2.0 * math.pi)
    w = int(np.rint(total))
    if abs(total - w) >= residual_tol:
        raise NotInvertibleError(
            f"winding accumulation {total:.4f} is not close to an integer"
        )
    return w


def chiral_block(system: TranslationInvariantSystem, chi: ChiralSymmetry):
    """The off-diagonal block ``Q(theta)`` of a chiral Bloch symbol.

    In the grading of ``chi`` the symbol reads ``[[0, Q*], [Q, 0]]``; the
    returned callable maps the +1 sector to the -1 sector.
    """
    if system.dimension != 1:
        raise SectorError("chiral-block windings are defined for 1D bulks")
    plus, minus = chi.grading()
    if plus.shape[1] != minus.shape[1]:
        raise SectorError(
            "chiral grading is unbalanced; no square off-diagonal block"
        )

    def block(theta: float) -> np.ndarray:
        H = bloch_symbols(system, np.array([[theta]]))[0]
        return minus.conj().T @ H @ plus

    return block


def _chiral_zero_count(T, chi, box, window, ess, locus):
    """Signed zero-mode count ``n_plus - n_minus`` over the window subspace.

    Computed as the chiral charge away from the box boundary,
    ``tr(chi_inner Pi P_window)``: on cleanly separated states this equals
    the sum of per-state chirality signs with boundary artifacts filtered
    (interface modes carry charge +-1, Dirichlet edge modes have no interior
    mass), and being a trace it is invariant under the arbitrary basis the
    eigensolver returns inside exponentially quasi-degenerate subspaces,
    where per-state expectations are meaningless.
    """
    rep = in_gap_states(T, box, window, ess=ess, locus=locus)
    N = T.lattice.fiber_dim
    margin = 5 * max(T.shift_radius, 1)
    inner = np.repeat(box.boundary_distance() >= margin, N)
    pi = chi.involution
    charge = 0.0
    per_state = []
    for k in range(len(rep.states)):
        vc = (rep.eigenvectors[:, k] * inner).reshape(-1, N)
        c = float(np.real(np.einsum("xi,ij,xj->", vc.conj(), pi, vc)))
        per_state.append(c)
        charge += c
    count = int(np.rint(charge))
    if abs(charge - count) > 0.25:
        raise IndexInstabilityError(
            f"window chiral charge {charge:.3f} does not round to an "
            "integer; enlarge the box or shrink the window"
        )
    return count, per_state


def chiral_interface_index(T: InterfaceOperator, chi: ChiralSymmetry,
                           box: TruncationBox, zero_window: tuple | None = None,
                           ess: SpectrumSet | None = None, grid=None,
                           locus: str = "wall",
                           check_growth: bool = True) -> int:
    """Chirality-weighted zero-mode count of the truncated interface operator.

    Requires termwise anticommutation with ``chi`` and a certified gap of the
    essential spectrum around zero (every bulk system invertible).  The
    default window is the central 20% of that gap, separating exponentially
    small finite-size splittings from band tails.  The count is re-run on a
    grown box and must agree.
    """
    if not chi.anticommutes_with(T):
        raise SectorError("operator does not anticommute with the declared "
                          "chiral involution")
    if ess is None:
        ess = essential_spectrum(T, grid=grid)
    gap = spectral_gap(ess, 0.0)  # raises if some bulk system is not invertible
    if zero_window is None:
        w = ZERO_WINDOW_FRACTION * gap.radius
        zero_window = (-w, w)
    count, _ = _chiral_zero_count(T, chi, box, zero_window, ess, locus)
    if check_growth:
        bigger = TruncationBox(max(box.half_width + 8,
                                   int(box.half_width * 1.25)),
                               box.dimension)
        count2, _ = _chiral_zero_count(T, chi, bigger, zero_window, ess, locus)
        if count2 != count:
            raise IndexInstabilityError(
                f"index changed from {count} to {count2} under box growth"
            )
    return count


def _wall_bulk_systems(T: InterfaceOperator):
    """Left/right translation-invariant symbols of a 1D domain wall."""
    if T.lattice.dimension != 1:
        raise SectorError("domain-wall decomposition needs a 1D lattice")
    fams = {type(p) for p in T.terms.values()}
    if not fams <= {DomainWall1DProfile, ConstantProfile, CompactProfile}:
        raise SectorError("domain-wall decomposition needs domain-wall asymptotics")
    return (directional_limit(T, (-1.0,)), directional_limit(T, (1.0,)))


def domain_wall_decomposition(T: InterfaceOperator, chi: ChiralSymmetry,
                              box: TruncationBox, n_winding: int = 4096,
                              grid=None) -> IndexReport:
    """Interface index against the two bulk windings of a 1D wall.

    ``per_bulk`` holds the winding numbers of the chiral blocks of the left
    and right bulk symbols; the signed-sum identity uses signs (+1, -1); the
    residual ``index - (w_left - w_right)`` is reported.
    """
    left, right = _wall_bulk_systems(T)
    w_left = winding_number(chiral_block(left, chi), n_points=n_winding)
    w_right = winding_number(chiral_block(right, chi), n_points=n_winding)
    ess = essential_spectrum(T, grid=grid)
    idx = chiral_interface_index(T, chi, box, ess=ess, locus="wall")
    residual = idx - (w_left - w_right)
    return IndexReport(
        interface_index=idx,
        per_bulk={"left": w_left, "right": w_right},
        signs={"left": 1, "right": -1},
        identity_residual=residual,
        details={"gap_radius": spectral_gap(ess, 0.0).radius},
    )


def fredholm_check(T: InterfaceOperator, E: complex = 0.0,
                   grid=None, sphere_count: int = 360):
    """Is ``T - E`` Fredholm?  True iff ``E`` avoids the essential spectrum.

    Returns ``(flag, certificate)``; the certificate carries the gap radius
    ``epsilon``, which is uniform over all quasi-orbit bulk systems.
    """
    ess = essential_spectrum(T, grid=grid, sphere_count=sphere_count)
    cert = {"kind": ess.kind, "resolution": ess.resolution}
    if ess.kind in ("real_line", "unit_circle"):
        try:
            gap = spectral_gap(ess, E)
        except SpectralGapError as exc:
            cert.update({"epsilon": 0.0, "reason": str(exc)})
            return False, cert
        cert.update({"epsilon": gap.radius, "gap_lower": gap.lower,
                     "gap_upper": gap.upper})
        return True, cert
    eps = ess.distance_to(E)
    cert["epsilon"] = eps
    return bool(eps > 2.0 * ess.resolution), cert


# ---------------------------------------------------------------------------
# cone / sector decomposition (EXPERIMENTAL)
# ---------------------------------------------------------------------------

def _cap_orientation(cap: Cap) -> int:
    """Heuristic sign of a sector: +1 when the cap points into the negative
    half-space of its first nonzero axis (the domain-wall convention at
    -infinity), -1 otherwise.  Reported, not proven."""
    for c in cap.center:
        if abs(c) > 1e-12:
            return 1 if c < 0 else -1
    return 1


def _default_caps(T: InterfaceOperator, sectors):
    if sectors is not None:
        caps = list(sectors)
    else:
        cone_profiles = [p for p in T.terms.values() if isinstance(p, ConeProfile)]
        if cone_profiles:
            caps = list(cone_profiles[0].caps)
        elif T.lattice.dimension == 1:
            caps = [Cap((-1.0,), 0.7), Cap((1.0,), 0.7)]  # antipodal realisation
        else:
            raise SectorError("no cap geometry available; pass sectors=[Cap...]")
    check_caps_disjoint(caps)
    return caps


def _cap_label(cap: Cap, dimension: int) -> str:
    if dimension == 1:
        return "left" if cap.center[0] < 0 else "right"
    return "cap(" + ",".join(f"{c:+.3f}" for c in cap.center) + ")"


def _sector_mask(box: TruncationBox, cap: Cap) -> np.ndarray:
    sites = box.sites()
    norms = np.linalg.norm(sites, axis=1)
    mask = norms > 0
    cosr = math.cos(cap.angular_radius)
    center = np.asarray(cap.center)
    with np.errstate(invalid="ignore", divide="ignore"):
        cosang = (sites @ center) / np.where(norms > 0, norms, 1.0)
    return mask & (cosang >= cosr - 1e-12)


def _sector_chiral_charge(bulk: TranslationInvariantSystem, chi: ChiralSymmetry,
                          box: TruncationBox, cap: Cap, window: tuple,
                          cut_width: float) -> float:
    """Chiral charge accumulating at the cut of the sector compression.

    The bulk operator of the cap is assembled on the box, compressed to the
    lattice cone of the cap (Dirichlet cut), and the window states'
    chirality density is summed over the sites near the cut.  Hybridization
    between cut modes and far-boundary modes cancels in this spatially
    resolved sum.
    """
    op = bulk.as_operator()
    N = bulk.fiber_dim
    mat = op.assemble(box).toarray()
    mask = _sector_mask(box, cap)
    idx_sites = np.nonzero(mask)[0]
    if len(idx_sites) == 0:
        raise SectorError("sector contains no lattice sites in the box")
    flat = (idx_sites[:, None] * N + np.arange(N)[None, :]).ravel()
    sub = mat[np.ix_(flat, flat)]
    evals, vecs = np.linalg.eigh(sub)
    sel = np.nonzero((evals >= window[0]) & (evals <= window[1]))[0]
    sites = box.sites()[idx_sites]
    near_cut = np.linalg.norm(sites, axis=1) <= cut_width
    cut_flat = np.repeat(near_cut, N)
    pi = chi.involution
    charge = 0.0
    for k in sel:
        vc = (vecs[:, k] * cut_flat).reshape(-1, N)
        charge += float(np.real(np.einsum("xi,ij,xj->", vc.conj(), pi, vc)))
    return charge


def cone_decomposition(T: InterfaceOperator, chi: ChiralSymmetry,
                       box: TruncationBox, sectors=None,
                       zero_window: tuple | None = None,
                       grid=None) -> IndexReport:
    """EXPERIMENTAL signed-sum decomposition over disjoint sectors at infinity.

    Per-cap invariants come from the cut chiral charge of each cap's bulk
    compression (orientation-corrected); the interface index counts the
    chirality of window states near the interface locus, with boundary and
    off-sector (complement background) artifacts filtered.  The sector
    orientation fixes the decomposition signs; this inference is a
    heuristic, so the identity residual is always reported.
    """
    caps = _default_caps(T, sectors)
    if not chi.anticommutes_with(T):
        raise SectorError("operator does not anticommute with the declared "
                          "chiral involution")
    # per-cap bulk systems, gaps certified at 0
    bulks, gaps = [], []
    for cap in caps:
        bulk = directional_limit(T, np.asarray(cap.center))
        sp = bulk_spectrum(bulk, grid=grid)
        gaps.append(spectral_gap(sp, 0.0).radius)  # raises when not gapped
        bulks.append(bulk)
    if zero_window is None:
        w = ZERO_WINDOW_FRACTION * min(gaps)
        zero_window = (-w, w)

    cut_width = 5.0 * max(T.shift_radius, 1)

    per_bulk, signs, details = {}, {}, {"experimental": True, "cap_gaps": {}}
    for cap, bulk, gap_r in zip(caps, bulks, gaps):
        label = _cap_label(cap, T.lattice.dimension)
        if label in per_bulk:
            raise SectorError(f"two sectors share the label '{label}'")
        ori = _cap_orientation(cap)
        charge = _sector_chiral_charge(bulk, chi, box, cap, zero_window,
                                       cut_width)
        raw = int(np.rint(charge))
        if abs(charge - raw) > 0.25:
            raise SectorError(
                f"cut charge {charge:.3f} of sector {label} is not close to "
                "an integer; state mass is not sector-concentrated"
            )
        per_bulk[label] = ori * raw
        signs[label] = ori
        details["cap_gaps"][label] = gap_r

    # interface side: chiral charge of the window subspace away from the box
    # boundary.  The spatially resolved trace is basis independent, so the
    # arbitrary mixing inside a degenerate zero cluster (the complement
    # background of cone models contributes exactly zero trace) cannot
    # corrupt the count, and Dirichlet edge modes are suppressed by the
    # interior cutoff rather than by per-state classification.
    ess = merge_spectra([bulk_spectrum(b, grid=grid) for b in bulks])
    rep = in_gap_states(T, box, zero_window, ess=ess, locus="origin")
    N = T.lattice.fiber_dim
    inner = box.boundary_distance() >= cut_width
    inner_flat = np.repeat(inner, N)
    pi = chi.involution
    charge = 0.0
    for k in range(len(rep.states)):
        vc = (rep.eigenvectors[:, k] * inner_flat).reshape(-1, N)
        charge += float(np.real(np.einsum("xi,ij,xj->", vc.conj(), pi, vc)))
    index_count = int(np.rint(charge))
    details["interface_charge"] = charge
    if abs(charge - index_count) > 0.25:
        raise SectorError(
            f"interface chiral charge {charge:.3f} is not close to an "
            "integer; window states straddle the interior cutoff"
        )
    residual = index_count - sum(signs[k] * per_bulk[k] for k in per_bulk)
    details["zero_window"] = list(zero_window)
    return IndexReport(
        interface_index=index_count, per_bulk=per_bulk, signs=signs,
        identity_residual=residual, experimental=True, details=details,
    )


# ---------------------------------------------------------------------------
# spectral flow
# ---------------------------------------------------------------------------

def spectral_flow(path, box: TruncationBox, overlap_threshold: float = 0.6,
                  max_step_norm: float = 0.75) -> int:
    """Net signed count of truncated eigenvalue crossings through zero.

    Crossings between consecutive path points are matched by eigenvector
    overlap; an unmatched near-zero state means the steps are too coarse.
    Endpoints must be gapped at zero in truncation.
    """
    path = list(path)
    if len(path) < 2:
        return 0
    frames = []
    for T in path:
        mat = T.assemble(box).toarray()
        evals, vecs = np.linalg.eigh(mat)
        frames.append((evals, vecs))
    for which in (0, -1):
        evals = frames[which][0]
        if np.min(np.abs(evals)) < 1e-8:
            raise SpectralGapError(
                "path endpoint has a truncated eigenvalue at zero"
            )
    # sampled closeness of consecutive operators
    small = TruncationBox(min(box.half_width, 12), box.dimension)
    for A, B in zip(path, path[1:]):
        diff = (A.assemble(small) - B.assemble(small)).toarray()
        step = float(np.linalg.norm(diff, 2))
        if step > max_step_norm:
            raise CrossingAmbiguityError(
                f"consecutive operators differ by {step:.3f} in norm; "
                "refine the path"
            )

    total = 0
    for (ev1, vc1), (ev2, vc2) in zip(frames, frames[1:]):
        step_bound = max_step_norm
        track = np.nonzero(np.abs(ev1) <= step_bound)[0]
        cand = np.nonzero(np.abs(ev2) <= 2.0 * step_bound)[0]
        if len(track) == 0:
            continue
        if len(cand) == 0:
            raise CrossingAmbiguityError("tracked state lost between steps")
        overlaps = np.abs(vc1[:, track].conj().T @ vc2[:, cand])
        used = set()
        for i in np.argsort(ev1[track]):
            order = np.argsort(overlaps[i])[::-1]
            j = next((j for j in order if j not in used), None)
            if j is None or overlaps[i, j] < overlap_threshold:
                raise CrossingAmbiguityError(
                    f"no confident match for eigenvalue {ev1[track[i]]:.4f} "
                    f"(best overlap "
                    f"{overlaps[i].max() if len(cand) else 0:.2f})"
                )
            used.add(j)
            lam, mu = ev1[track[i]], ev2[cand[j]]
            if lam < 0 <= mu:
                total += 1
            elif mu < 0 <= lam:
                total -= 1
    return total
