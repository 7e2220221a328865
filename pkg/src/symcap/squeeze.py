"""Certified squeezing of sampled sets into symplectic cylinders.

Two routes produce an explicit symplectomorphism of R^{2n} carrying a
sampled set into Z^{2n}(a) = B^2(a) x R^{2n-2}, both driven by the same
mechanism: the set's essential planar extent is captured by a star-shaped
neighborhood U of its (q1, p1) shadow with |U| < a, an area-preserving
embedding phi: U -> B^2(a) comes from the Moser machinery, and phi x id
does the squeezing.

* shadow route: works whenever the shadow itself is thin -- its
  epsilon-neighborhood area drops below a for some admissible epsilon and
  the star hull of the shadow stays below a as well.
* slice route: for subsets of the closed unit ball with a = pi.  A unitary
  rotation moves the set off the distinguished point (1, 0, ..., 0); the
  rotated shadow then lives in a circular slice {q < c} of the closed unit
  disc, whose smoothed neighborhood has area strictly below pi even though
  the shadow may be fat.

Every certificate is measured on the actual composite map: symplecticity
by finite differences at probe points, containment by mapping every
sample, injectivity by nearest-neighbor separation of probe images.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.fft import irfft, rfft
from scipy.ndimage import gaussian_filter1d, grey_dilation
from scipy.spatial import cKDTree

from .cone import SampledSet
from .core import symplecticity_defect
from .embed2d import GridMap2D, StarShapedDomain, volume_embed
from .measure import RotationSearchResult, find_avoiding_rotation, shadow_area

TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# star-shaped neighborhoods of planar point clouds


def star_hull(points: np.ndarray, margin: float, modes: int = 48,
              bins: int = 720) -> StarShapedDomain:
    """Smooth star-shaped domain containing the points with radial clearance.

    The cloud is centered at its centroid, the maximum radius per angular
    bin is lifted by margin, and the resulting radius profile is low-passed
    and lifted once more so the smooth boundary dominates the samples.  The
    construction certifies itself: every input point must clear the final
    boundary by margin/2, else the margin was too small for the bin count.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[0] < 1 or pts.shape[1] != 2:
        raise ValueError("star_hull expects a nonempty (M, 2) cloud")
    if margin <= 0:
        raise ValueError("margin must be positive")
    center = pts.mean(axis=0)
    rel = pts - center
    rho = np.hypot(rel[:, 0], rel[:, 1])
    ang = np.arctan2(rel[:, 1], rel[:, 0])
    # bin k spans [k, k+1) * 2pi/bins, matching the Fourier fit's sample grid
    idx = np.floor(ang / TWO_PI * bins).astype(int) % bins
    prof = np.full(bins, margin)
    np.maximum.at(prof, idx, rho + margin)
    # a bin's maximum must dominate its neighbors' points too, otherwise the
    # low-pass can dip between occupied bins; one dilation pass suffices
    prof = np.maximum(prof, np.maximum(np.roll(prof, 1), np.roll(prof, -1)))
    dom = StarShapedDomain.from_radius_samples(center, prof, modes=modes)
    # replay the sample angles against the smooth radius
    clearance = dom.radius(ang) - rho
    if clearance.min() < 0.5 * margin:
        raise ValueError(
            f"hull clearance {clearance.min():.3e} below margin/2; "
            "increase margin or bins")
    return dom


def slice_area(c: float) -> float:
    """Area of the circular slice {q < c} of the closed unit disc."""
    if not -1.0 < c < 1.0:
        raise ValueError("slice level must be inside (-1, 1)")
    cap = math.acos(c) - c * math.sqrt(1.0 - c * c)
    return math.pi - cap


def slice_neighborhood(c: float, delta: float = 2e-3, modes: int = 96,
                       samples: int = 4096) -> StarShapedDomain:
    """Smooth star-shaped neighborhood of the disc slice {q <= c}.

    The slice is a convex lens (intersection of the closed unit disc with a
    half-plane), star-shaped about the midpoint of its symmetry chord.  The
    exact radial profile is dilated by delta and low-passed with a Gaussian
    factor; where the rounding dips below the dilated profile (only near
    the two corners) a localized smooth bump restores domination, so the
    area overshoot is of order delta plus the corner mass rather than a
    global lift -- the overshoot has to stay inside the thin pi - |slice|
    budget, and a global lift would not.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    x0 = np.array([0.5 * (c - 1.0), 0.0])
    theta = TWO_PI * np.arange(samples) / samples
    e = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    # distance from x0 along e to the unit circle
    b = e @ x0
    r_circ = -b + np.sqrt(b * b + 1.0 - x0 @ x0)
    # distance to the chord line {q = c} (only rays heading toward it)
    r_line = np.full(samples, np.inf)
    heading = e[:, 0] > 1e-12
    r_line[heading] = (c - x0[0]) / e[heading, 0]
    r_exact = np.minimum(r_circ, r_line)
    target = r_exact + delta
    spec = rfft(target)
    k = np.arange(spec.size)
    spec *= np.exp(-((k / modes) ** 2))
    smooth = irfft(spec, n=samples)
    deficit = np.maximum(target - smooth, 0.0)
    # dilate the deficit past the Gaussian support, then smooth: the result
    # dominates the deficit while staying local and C-infinity
    sigma = math.sqrt(2.0) / modes * samples / TWO_PI
    width = int(math.ceil(4.0 * sigma))
    dominator = grey_dilation(deficit, size=2 * width + 1, mode="wrap")
    bump = gaussian_filter1d(dominator, sigma, mode="wrap")
    short = float((deficit - bump).max())
    if short > 0:
        bump += short
    profile = smooth + bump + 1e-3 * delta
    dom = StarShapedDomain.from_radius_samples(x0, profile,
                                               modes=min(256, samples // 4))
    clearance = dom.radius(theta) - r_exact
    if clearance.min() < 0.5 * delta:
        raise ValueError("slice neighborhood failed to clear the slice")
    return dom


# ---------------------------------------------------------------------------
# the pipeline


@dataclass
class SqueezeReport:
    """Outcome and certificates of a squeezing attempt."""

    success: bool
    route: str                       # "shadow", "slice", or "none"
    capacity: float                  # target cylinder capacity a
    map_fn: Optional[Callable] = None
    symplecticity_defect: float = math.inf
    image_capacity: float = math.inf  # max pi*(q1^2 + p1^2) over mapped samples
    injectivity_gap: float = 0.0     # min pairwise image distance over probes
    neighborhood_area: float = math.inf
    failure_reason: Optional[str] = None
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.success and self.map_fn is None:
            raise ValueError("a successful report must carry the map")


def _planar_extension(phi: Callable[[np.ndarray], np.ndarray], n: int,
                      rotation: Optional[np.ndarray]) -> Callable:
    """Extend a planar map to R^{2n}: optional rotation, then phi on (q1, p1).

    Coordinates are (q_1..q_n, p_1..p_n), so the distinguished plane is the
    column pair (0, n).  The rotation is a real symplectic-orthogonal
    matrix and phi absorbs its domain's off-center position, so the
    composite's symplecticity defect is phi's alone.
    """

    def mapped(x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = x @ rotation.T if rotation is not None else x.copy()
        out[:, [0, n]] = phi(out[:, [0, n]])
        return out

    return mapped


def _dedupe(points: np.ndarray, tol: float) -> np.ndarray:
    """Keep one representative of every tol-size cluster of points."""
    key = np.round(points / tol).astype(np.int64)
    _, idx = np.unique(key, axis=0, return_index=True)
    return points[np.sort(idx)]


def _certify(report: SqueezeReport, sampled: SampledSet, embed: GridMap2D,
             full_map: Callable, probes: int, seed: int,
             defect_tol: float) -> SqueezeReport:
    rng = np.random.default_rng(seed)
    pts = _dedupe(sampled.points, 1e-9)
    take = min(probes, pts.shape[0])
    sel = pts[rng.choice(pts.shape[0], size=take, replace=False)]
    report.symplecticity_defect = symplecticity_defect(full_map, sel)
    images = full_map(sampled.points)
    n = sampled.n
    plane = images[:, [0, n]]
    report.image_capacity = float(np.pi * np.max(plane[:, 0] ** 2
                                                 + plane[:, 1] ** 2))
    probe_images = full_map(sel)
    gaps, _ = cKDTree(probe_images).query(probe_images, k=2)
    report.injectivity_gap = float(gaps[:, 1].min())
    report.map_fn = full_map
    report.details["moser_certificate"] = embed.meta["det_grid_max_dev"]
    report.details["moser_spot_check"] = embed.meta["fd_spot_max_dev"]
    report.details["probes"] = take
    report.success = (report.symplecticity_defect <= defect_tol
                      and report.image_capacity < report.capacity
                      and report.injectivity_gap > 0.0)
    if not report.success:
        report.failure_reason = "symplecticity, image, or injectivity " \
            "certificate failed"
    return report


def squeeze_pipeline(sampled: SampledSet, a: float, route: str = "auto",
                     probes: int = 1000, resolution: int = 256,
                     solve_refine: int = 16, flow_steps: int = 64,
                     rotation_margin: float = 0.35, seed: int = 0,
                     shadow_grid: int = 2048,
                     defect_tol: float = 1e-5) -> SqueezeReport:
    """Try to squeeze the sampled set into the cylinder Z^{2n}(a).

    route "shadow" demands a thin (q1, p1) shadow: an epsilon sweep must
    find an admissible epsilon with neighborhood area below a, and the star
    hull of the shadow (the only neighborhood shape the planar embedding
    machinery accepts) must stay below a too.  route "slice" demands the
    set lie in the closed unit ball with a = pi: a rotation pushes the set
    away from (1, 0, ..., 0), after which its shadow fits in a disc slice
    of area < pi.  "auto" picks "slice" exactly in its applicable regime
    and "shadow" otherwise.  Failure is a report, not an exception: for
    sets with fat shadows that also fill the unit sphere's neighborhood --
    the non-squeezable construction is the motivating case -- no route can
    succeed, and the report says which precondition broke.
    """
    if a <= 0:
        raise ValueError("cylinder capacity must be positive")
    if route not in ("auto", "shadow", "slice"):
        raise ValueError(f"unknown route {route!r}")
    n = sampled.n
    norms = np.linalg.norm(sampled.points, axis=1)
    in_unit_ball = bool(norms.max() <= 1.0 + 1e-9)
    if route == "auto":
        route = "slice" if (in_unit_ball and abs(a - math.pi) < 1e-9) \
            else "shadow"

    if route == "slice":
        report = SqueezeReport(False, "slice", a)
        if not in_unit_ball:
            report.failure_reason = (
                f"set leaves the closed unit ball (max norm {norms.max():.6f})")
            return report
        if a < math.pi - 1e-12:
            report.failure_reason = "slice route targets capacity pi"
            return report
        rot = find_avoiding_rotation(sampled, rotation_margin, seed=seed)
        report.details["rotation_margin"] = rot.achieved_margin
        if not rot.success:
            report.failure_reason = (
                f"no rotation clears the distinguished point by "
                f"{rotation_margin} (best {rot.achieved_margin:.4f})")
            return report
        c = rot.slice_bound
        U = slice_neighborhood(c)
        report.neighborhood_area = U.area
        report.details["slice_level"] = c
        report.details["slice_area"] = slice_area(c)
        if U.area >= a:
            report.failure_reason = (
                f"slice neighborhood area {U.area:.6f} not below {a:.6f}")
            return report
        embed = volume_embed(U, a, resolution=resolution,
                             flow_steps=flow_steps, solve_refine=solve_refine)
        full_map = _planar_extension(embed.map_fn, n, rot.real_matrix())
        return _certify(report, sampled, embed, full_map, probes, seed,
                        defect_tol)

    report = SqueezeReport(False, "shadow", a)
    proj = sampled.points[:, [0, n]]
    spread = proj.max(axis=0) - proj.min(axis=0)
    eps = 0.25 * float(spread.max())
    admissible = None
    for _ in range(12):
        if eps <= sampled.fill:
            break
        try:
            area = shadow_area(sampled, eps, grid=shadow_grid)
        except ValueError:
            break
        report.details.setdefault("shadow_sweep", []).append((eps, area))
        if area < 0.8 * a:
            admissible = (eps, area)
            break
        eps *= 0.5
    if admissible is None:
        report.failure_reason = (
            f"no admissible epsilon with shadow area below 0.8*{a:.4f}; "
            "the shadow is fat at every resolvable scale")
        return report
    eps, area = admissible
    report.details["epsilon"] = eps
    report.details["shadow_area"] = area
    margin = max(0.5 * eps, 4.0 * sampled.fill)
    hull = star_hull(proj, margin)
    report.neighborhood_area = hull.area
    if hull.area >= a:
        report.failure_reason = (
            f"star hull area {hull.area:.6f} not below {a:.6f} "
            "(thin shadow, but not accessible to a star-shaped neighborhood)")
        return report
    embed = volume_embed(hull, a, resolution=resolution,
                         flow_steps=flow_steps, solve_refine=solve_refine)
    full_map = _planar_extension(embed.map_fn, n, None)
    return _certify(report, sampled, embed, full_map, probes, seed,
                    defect_tol)
