"""Measurements on sampled sets.

Box-counting dimension (the computable stand-in for Hausdorff dimension,
biased upward in general), containment certificates against balls, cylinders
and polydiscs, the area of the epsilon-fattened planar shadow, and the
search for a unitary rotation moving a sampled set away from the first
basis point of the sphere.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .core import BallSpec, CylinderSpec, PolydiscSpec, complex_to_real, real_to_complex
from .cone import SampledSet


# ---------------------------------------------------------------------------
# box-counting dimension


@dataclass
class BoxCountReport:
    scales: np.ndarray          # dyadic box edges, descending
    counts: np.ndarray          # occupied boxes per scale (offset-averaged)
    slope: float                # regression of log N against log(1/eps) on the window
    window: Tuple[float, float]  # (eps_min, eps_max) actually used
    r_squared: float
    flagged: bool
    note: str = ""


def _occupied_boxes(points: np.ndarray, origin: np.ndarray, extents: np.ndarray,
                    eps: float) -> int:
    # points sitting exactly on the top face belong to the last box, not a
    # phantom extra row (otherwise every scale overcounts and the slope sags)
    nboxes = np.maximum(1, np.ceil(extents / eps - 1e-12)).astype(np.int64)
    idx = np.floor((points - origin) / eps).astype(np.int64)
    idx = np.clip(idx, 0, nboxes - 1)
    strides = np.cumprod(np.r_[1, nboxes][:-1])
    return int(np.unique(idx @ strides).size)


def box_dimension(sampled: SampledSet, levels: int = 8, offsets: int = 4,
                  seed: int = 0) -> BoxCountReport:
    """Dyadic box-count regression for the sampled set.

    Boxes of edge diam/2^j for j = 0..levels-1 are counted on axis grids; to
    tame the anchor sensitivity of lattice counts, each scale's count is the
    geometric mean over the corner-anchored grid and offsets-1 random grid
    translations.  The slope is fit only on the window of scales below
    diam/4 (larger boxes carry no geometry) and above 2.5x the fill distance
    (smaller boxes see the gaps between samples, flattening the count toward
    the sample size), and within that band only the finest four octaves are
    kept -- they sit nearest the asymptotic regime, while coarser ones mostly
    measure curvature and boundary effects of the particular set.  Desk-scale
    counts of curved sets still carry a bias of a few percent.
    """
    if levels < 4:
        raise ValueError("need at least 4 levels for a regression")
    if offsets < 1:
        raise ValueError("need at least the anchored grid")
    pts = sampled.points
    origin = pts.min(axis=0)
    extents = pts.max(axis=0) - origin
    diam = float(extents.max())
    if diam == 0.0:
        return BoxCountReport(np.array([]), np.array([]), 0.0, (0.0, 0.0),
                              0.0, True, "degenerate set (single point)")
    rng = np.random.default_rng(seed)
    shifts = np.vstack([np.zeros(pts.shape[1]),
                        rng.uniform(0.0, 1.0, size=(offsets - 1, pts.shape[1]))])
    scales = diam / 2.0 ** np.arange(levels)
    counts = np.array([
        np.exp(np.mean([np.log(_occupied_boxes(pts, origin - sh * e,
                                               extents + sh * e, e))
                        for sh in shifts]))
        for e in scales])
    valid = np.flatnonzero((scales <= diam / 4.0 + 1e-12)
                           & (scales >= 2.5 * sampled.fill))
    if valid.size < 3:
        return BoxCountReport(scales, counts, float("nan"), (0.0, 0.0), 0.0,
                              True, "fewer than 3 scales between fill distance and diam/4")
    # the finest few octaves sit nearest the asymptotic regime; coarser ones
    # mostly measure curvature and boundary effects of the particular set
    valid = valid[-4:]
    x = np.log(1.0 / scales[valid])
    y = np.log(counts[valid])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid ** 2).sum()) / ss_tot if ss_tot > 0 else 0.0
    window = (float(scales[valid].min()), float(scales[valid].max()))
    return BoxCountReport(scales, counts, float(slope), window, r2,
                          r2 < 0.99, "" if r2 >= 0.99 else "low regression quality")


# ---------------------------------------------------------------------------
# containment


Region = Union[BallSpec, CylinderSpec, PolydiscSpec]


@dataclass(frozen=True)
class ContainmentReport:
    region: str
    max_violation: float   # negative means strictly inside with room to spare
    slack: float
    passed: bool


def containment(sampled: SampledSet, region: Region, slack: float) -> ContainmentReport:
    """Worst violation of the region's defining inequalities over the samples."""
    pts = sampled.points
    if isinstance(region, BallSpec):
        violation = float(np.linalg.norm(pts, axis=1).max() - region.radius)
        label = f"ball(capacity={region.capacity!r})"
    elif isinstance(region, CylinderSpec):
        z1 = pts[:, 0] + 1j * pts[:, sampled.n]
        violation = float(np.abs(z1).max() - region.radius)
        label = f"cylinder(capacity={region.capacity!r})"
    elif isinstance(region, PolydiscSpec):
        if len(region.radii) != sampled.n:
            raise ValueError("polydisc dimension does not match the set")
        z = real_to_complex(pts)
        violation = -np.inf
        for j, r in enumerate(region.radii):
            if r is not None:
                violation = max(violation, float(np.abs(z[:, j]).max() - r))
        label = f"polydisc(radii={region.radii!r})"
    else:
        raise TypeError(f"unsupported region type {type(region).__name__}")
    return ContainmentReport(label, violation, slack, violation <= slack)


# ---------------------------------------------------------------------------
# planar shadow


def shadow_area(sampled: SampledSet, epsilon: float, grid: int = 2048) -> float:
    """Area of the epsilon-neighborhood of the (q1, p1) projection.

    The projected samples are rasterized and fattened by a Euclidean
    distance transform; the returned count-of-cells area overestimates the
    true shadow measure by O(epsilon) and tends to it (for thin shadows, to
    zero) as epsilon shrinks -- provided epsilon stays above both the sample
    fill distance and a few grid cells, which is enforced.
    """
    if epsilon <= sampled.fill:
        raise ValueError(
            f"epsilon {epsilon!r} is below the fill-distance estimate {sampled.fill!r}")
    proj = sampled.points[:, [0, sampled.n]]
    lo = proj.min(axis=0) - 2 * epsilon
    hi = proj.max(axis=0) + 2 * epsilon
    h = float((hi - lo).max()) / grid
    if epsilon < 3.0 * h:
        raise ValueError("epsilon below grid resolution; increase grid")
    shape = np.ceil((hi - lo) / h).astype(int) + 1
    mask = np.zeros(shape, dtype=bool)
    cells = np.floor((proj - lo) / h).astype(int)
    mask[cells[:, 0], cells[:, 1]] = True
    dist = ndimage.distance_transform_edt(~mask)
    return float(np.count_nonzero(dist <= epsilon / h) * h * h)


# ---------------------------------------------------------------------------
# rotation search


@dataclass
class RotationSearchResult:
    success: bool
    unitary: np.ndarray          # complex n x n, maps the found direction to e_1
    achieved_margin: float       # min distance from rotated samples to (1, 0, ..., 0)
    slice_bound: Optional[float]  # valid c with q1 < c after rotation, for unit-ball sets
    candidates_tried: int
    seed: int

    def real_matrix(self) -> np.ndarray:
        """The rotation as a real 2n x 2n (symplectic, orthogonal) matrix."""
        n = self.unitary.shape[0]
        A, B = self.unitary.real, self.unitary.imag
        return np.block([[A, -B], [B, A]])

    def apply(self, points: np.ndarray) -> np.ndarray:
        return complex_to_real(real_to_complex(np.atleast_2d(points)) @ self.unitary.T)


def _householder_to_e1(v: np.ndarray) -> np.ndarray:
    """Unitary P with P v = e_1 for a unit vector v."""
    n = v.size
    beta = -v[0] / abs(v[0]) if abs(v[0]) > 1e-300 else -1.0
    w = v - beta * np.eye(n, dtype=complex)[0]
    H = np.eye(n, dtype=complex) - 2.0 * np.outer(w, w.conj()) / np.vdot(w, w).real
    P = H.copy()
    P[0] *= np.conj(beta)
    return P


def find_avoiding_rotation(sampled: SampledSet, margin: float,
                           candidates: int = 1024, refine_steps: int = 200,
                           seed: int = 0) -> RotationSearchResult:
    """Search for a unitary rotation keeping (1,0,...,0) at least margin away.

    Because unitaries preserve the Euclidean distance, rotating the set away
    from the pole is the same as finding a unit direction v far from the
    cloud and sending v to e_1; the search scans the identity direction,
    random complex directions (the first columns of Haar unitaries), and a
    local hill climb around the best hit, all against a KD-tree of the
    samples.  Failure (margin unattained within budget) is reported, not
    raised -- nothing may exist to find when the set nearly fills the sphere.
    """
    if margin <= 0:
        raise ValueError("margin must be positive")
    n = sampled.n
    tree = cKDTree(sampled.points)
    rng = np.random.default_rng(seed)

    def score(v: np.ndarray) -> float:
        return float(tree.query(complex_to_real(v[None, :]))[0][0])

    e1 = np.eye(n, dtype=complex)[0]
    best_v, best = e1, score(e1)
    tried = 1
    if best < margin:
        g = rng.normal(size=(candidates, n)) + 1j * rng.normal(size=(candidates, n))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        dists, _ = tree.query(complex_to_real(g))
        tried += candidates
        i = int(np.argmax(dists))
        if dists[i] > best:
            best_v, best = g[i], float(dists[i])
        step = 0.3
        for _ in range(refine_steps):
            w = best_v + step * (rng.normal(size=n) + 1j * rng.normal(size=n))
            w /= np.linalg.norm(w)
            tried += 1
            d = score(w)
            if d > best:
                best_v, best = w, d
            else:
                step *= 0.97
    if np.abs(best_v - e1).max() < 1e-15:
        U = np.eye(n, dtype=complex)
    else:
        U = _householder_to_e1(best_v)
    if np.abs(U @ best_v - e1).max() > 1e-10 or \
       np.abs(U.conj().T @ U - np.eye(n)).max() > 1e-10:
        raise RuntimeError("rotation construction lost unitarity")

    success = best >= margin
    slice_bound = None
    if success and np.linalg.norm(sampled.points, axis=1).max() <= 1.0 + 1e-9:
        # ||Ux - e1||^2 = ||x||^2 + 1 - 2 q1' >= margin^2 and ||x|| <= 1 force
        # the rotated q1 below 1 - margin^2/2.
        slice_bound = 1.0 - 0.5 * margin * margin
    return RotationSearchResult(success, U, best, slice_bound, tried, seed)
