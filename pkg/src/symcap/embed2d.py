"""Area-preserving planar embeddings into discs.

The pipeline embeds a bounded star-shaped domain U into the open disc of a
prescribed larger area in three stages: a radial flatten taking rays from
the star center onto disc rays (orientation preserving, analytic Jacobian),
a homothety calibrating total area, and a Moser flow removing the remaining
local area distortion.  The Moser step solves a Neumann Poisson problem --
literally on the grid for rectangles (fast cosine transform), and on the
unit disc after conjugating through the flatten for star domains (Fourier
in the angle, tridiagonal in the radius) -- then integrates the vector
field v_t = -grad(theta) / mu_t with RK4, carrying the variational equation
so the determinant of the actually-computed flow is part of the result, not
an article of faith.  A finite-difference spot check on random probes
cross-validates the variational bookkeeping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple, Union

import numpy as np
from scipy.fft import dctn, idctn, irfft, rfft
from scipy.ndimage import spline_filter1d
from scipy.spatial import cKDTree

from .core import smooth_step, smooth_step_derivative

TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# planar domains


@dataclass
class RectangleDomain:
    """Open axis-aligned rectangle (x0, x1) x (y0, y1)."""

    x0: float
    x1: float
    y0: float
    y1: float

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ValueError("rectangle sides must have positive length")

    @property
    def area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    @property
    def center(self) -> np.ndarray:
        return np.array([0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1)])

    def contains(self, pts: np.ndarray, pad: float = 0.0) -> np.ndarray:
        pts = np.atleast_2d(pts)
        return ((pts[:, 0] > self.x0 - pad) & (pts[:, 0] < self.x1 + pad)
                & (pts[:, 1] > self.y0 - pad) & (pts[:, 1] < self.y1 + pad))

    def radius_samples(self, thetas: np.ndarray) -> np.ndarray:
        """Distance from the center to the boundary along each direction."""
        w, h = 0.5 * (self.x1 - self.x0), 0.5 * (self.y1 - self.y0)
        c, s = np.abs(np.cos(thetas)), np.abs(np.sin(thetas))
        with np.errstate(divide="ignore"):
            return np.minimum(np.where(c > 0, w / c, np.inf),
                              np.where(s > 0, h / s, np.inf))

    def star_representation(self, modes: int = 48,
                            samples: int = 4096) -> "StarShapedDomain":
        """Smooth star-shaped cover of the rectangle (radius >= the true one)."""
        thetas = TWO_PI * np.arange(samples) / samples
        return StarShapedDomain.from_radius_samples(
            self.center, self.radius_samples(thetas), modes=modes)


@dataclass
class StarShapedDomain:
    """Star-shaped domain with a smooth trigonometric boundary radius.

    The radius about the center is r(theta) = a0 + sum a_k cos + b_k sin;
    keeping the boundary as Fourier coefficients makes the radius, its
    derivative, and the exact area all cheap and analytic.
    """

    center: np.ndarray
    cos_coeffs: np.ndarray   # a_0 .. a_K
    sin_coeffs: np.ndarray   # b_1 .. b_K

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        self.cos_coeffs = np.asarray(self.cos_coeffs, dtype=float)
        self.sin_coeffs = np.asarray(self.sin_coeffs, dtype=float)
        if self.center.shape != (2,):
            raise ValueError("center must be a planar point")
        if self.sin_coeffs.size != self.cos_coeffs.size - 1:
            raise ValueError("need one fewer sine than cosine coefficients")
        probe = self.radius(TWO_PI * np.arange(4096) / 4096)
        if probe.min() <= 0:
            raise ValueError("boundary radius must stay positive")
        self._rmin = float(probe.min())
        self._rmax = float(probe.max())

    @classmethod
    def disc(cls, radius: float, center=(0.0, 0.0)) -> "StarShapedDomain":
        return cls(np.asarray(center, dtype=float), np.array([radius]), np.array([]))

    @classmethod
    def from_radius_samples(cls, center, r_samples: np.ndarray, modes: int = 48,
                            pad: float = 1e-9) -> "StarShapedDomain":
        """Low-pass the sampled radius and lift it to dominate the samples.

        Fourier truncation with Lanczos sigma factors kills the Gibbs wiggle
        of kinky boundaries; the constant mode is then raised so the smooth
        radius is >= every input sample (the domain must cover whatever the
        samples came from).
        """
        r_samples = np.asarray(r_samples, dtype=float)
        M = r_samples.size
        if modes >= M // 2:
            raise ValueError("too many modes for the sample count")
        spec = rfft(r_samples) / M
        k = np.arange(modes + 1)
        sigma = np.sinc(k / (modes + 1))
        a = np.empty(modes + 1)
        b = np.empty(modes)
        a[0] = spec[0].real
        a[1:] = 2.0 * spec[1:modes + 1].real * sigma[1:]
        b[:] = -2.0 * spec[1:modes + 1].imag * sigma[1:]
        dom = cls(center, a, b)
        thetas = TWO_PI * np.arange(M) / M
        deficit = float((r_samples - dom.radius(thetas)).max())
        if deficit > -pad:
            a = a.copy()
            a[0] += deficit + pad
            dom = cls(center, a, b)
        return dom

    def _series(self, thetas, cos_w, sin_w) -> np.ndarray:
        """cos_w @ cos(k t) + sin_w @ sin(k t), with bounded temporaries."""
        thetas = np.asarray(thetas, dtype=float)
        flat = np.atleast_1d(thetas).ravel()
        k = np.arange(1, self.cos_coeffs.size)
        out = np.empty(flat.size)
        block = max(1, int(8_000_000 // max(k.size, 1)))
        for lo in range(0, flat.size, block):
            kt = np.multiply.outer(flat[lo:lo + block], k)
            out[lo:lo + block] = np.cos(kt) @ cos_w + np.sin(kt) @ sin_w
        return out.reshape(thetas.shape) if thetas.ndim else out[0]

    def radius(self, thetas) -> np.ndarray:
        return self.cos_coeffs[0] + self._series(
            thetas, self.cos_coeffs[1:], self.sin_coeffs)

    def radius_deriv(self, thetas) -> np.ndarray:
        k = np.arange(1, self.cos_coeffs.size)
        return self._series(thetas, k * self.sin_coeffs,
                            -(k * self.cos_coeffs[1:]))

    @property
    def area(self) -> float:
        """Exact: integral of r^2/2 over the angle."""
        return float(np.pi * self.cos_coeffs[0] ** 2
                     + 0.5 * np.pi * ((self.cos_coeffs[1:] ** 2).sum()
                                      + (self.sin_coeffs ** 2).sum()))

    @property
    def r_min(self) -> float:
        return self._rmin

    @property
    def r_max(self) -> float:
        return self._rmax

    @property
    def is_disc(self) -> bool:
        tail = max(np.abs(self.cos_coeffs[1:]).max(initial=0.0),
                   np.abs(self.sin_coeffs).max(initial=0.0))
        return tail < 1e-12 * self.cos_coeffs[0]

    def contains(self, pts: np.ndarray, pad: float = 0.0) -> np.ndarray:
        pts = np.atleast_2d(pts) - self.center
        rho = np.hypot(pts[:, 0], pts[:, 1])
        return rho < self.radius(np.arctan2(pts[:, 1], pts[:, 0])) + pad

    def boundary(self, thetas) -> np.ndarray:
        r = self.radius(thetas)
        return self.center + np.stack([r * np.cos(thetas), r * np.sin(thetas)], axis=-1)


PlanarDomain = Union[RectangleDomain, StarShapedDomain]


def _as_star(U: PlanarDomain) -> StarShapedDomain:
    return U.star_representation() if isinstance(U, RectangleDomain) else U


# ---------------------------------------------------------------------------
# radial flatten onto the unit disc


_W_LO, _W_HI = 0.05, 0.95


class RadialFlatten:
    """Diffeomorphism of a star domain onto the unit disc along rays.

    Writing points as center + rho * u(theta), the map sends rho to
    rho * gamma(rho, theta) with gamma = gbar + w(rho / r_min)(g - gbar),
    g = 1 / r(theta): near the center it is the fixed homothety by gbar
    (hence smooth there), and from 95% of the inradius outward it is the
    full per-ray normalization, so the boundary lands exactly on the unit
    circle.  The Jacobian determinant gamma * (gamma + rho dgamma/drho) is
    analytic; its positivity (injectivity along rays) is validated on a
    fine grid at construction.
    """

    def __init__(self, star: StarShapedDomain):
        self.star = star
        thetas = TWO_PI * np.arange(8192) / 8192
        self.gbar = float(np.mean(1.0 / star.radius(thetas)))
        self.rmin = star.r_min
        rho_frac = np.linspace(1e-3, 1.0, 160)
        rr = np.multiply.outer(rho_frac, star.radius(thetas[::8]))
        dets = self.polar_density(rr, np.broadcast_to(thetas[::8], rr.shape))
        if dets.min() <= 1e-9:
            raise ValueError(
                "domain too eccentric for the radial flatten (ray map folds over); "
                f"min Jacobian {dets.min():.3e}")

    def _gamma(self, rho, theta):
        g = 1.0 / self.star.radius(theta)
        w = smooth_step(rho / self.rmin, _W_LO, _W_HI)
        return self.gbar + w * (g - self.gbar)

    def _gamma_rho(self, rho, theta):
        g = 1.0 / self.star.radius(theta)
        dw = smooth_step_derivative(rho / self.rmin, _W_LO, _W_HI) / self.rmin
        return dw * (g - self.gbar)

    def polar_density(self, rho, theta):
        gam = self._gamma(rho, theta)
        return gam * (gam + rho * self._gamma_rho(rho, theta))

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts) - self.star.center
        rho = np.hypot(pts[:, 0], pts[:, 1])
        theta = np.arctan2(pts[:, 1], pts[:, 0])
        scale = self._gamma(rho, theta)
        return pts * scale[:, None]

    def density(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts) - self.star.center
        rho = np.hypot(pts[:, 0], pts[:, 1])
        theta = np.arctan2(pts[:, 1], pts[:, 0])
        return self.polar_density(rho, theta)

    def invert(self, disc_pts: np.ndarray, iters: int = 52) -> np.ndarray:
        """Bisection along each ray: rho * gamma(rho, theta) is increasing."""
        disc_pts = np.atleast_2d(disc_pts)
        s = np.hypot(disc_pts[:, 0], disc_pts[:, 1])
        theta = np.arctan2(disc_pts[:, 1], disc_pts[:, 0])
        g = 1.0 / self.star.radius(theta)  # fixed along each ray
        dg = g - self.gbar
        lo = np.zeros_like(s)
        # bracket past the boundary: gamma = g there, so the ray map stays
        # monotone well outside and exterior ghost points invert cleanly
        hi = 1.25 / g
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            gam = self.gbar + smooth_step(mid / self.rmin, _W_LO, _W_HI) * dg
            too_small = mid * gam < s
            lo = np.where(too_small, mid, lo)
            hi = np.where(too_small, hi, mid)
        rho = 0.5 * (lo + hi)
        u = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        return self.star.center + rho[:, None] * u


# ---------------------------------------------------------------------------
# grid-backed planar maps


@dataclass
class GridMap2D:
    """A planar map on a domain with grid-based certificates.

    map_fn must be vectorized (M, 2) -> (M, 2).  det_fn, when present, is
    the analytic Jacobian determinant; otherwise determinants come from
    4th-order finite differences of map_fn.  Moser-corrected maps carry a
    dense determinant certificate over the interior grid in meta.
    """

    domain: PlanarDomain
    map_fn: Callable[[np.ndarray], np.ndarray]
    resolution: int = 512
    det_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    meta: dict = field(default_factory=dict)
    _nodes: Optional[np.ndarray] = field(default=None, repr=False)
    _values: Optional[np.ndarray] = field(default=None, repr=False)
    _tree: Optional[cKDTree] = field(default=None, repr=False)

    def nodes(self) -> np.ndarray:
        """Cell-centered lattice points of the bounding box inside the domain."""
        if self._nodes is None:
            if isinstance(self.domain, RectangleDomain):
                lo = np.array([self.domain.x0, self.domain.y0])
                hi = np.array([self.domain.x1, self.domain.y1])
            else:
                c, R = self.domain.center, self.domain.r_max
                lo, hi = c - R, c + R
            N = self.resolution
            xs = lo[0] + (hi[0] - lo[0]) * (np.arange(N) + 0.5) / N
            ys = lo[1] + (hi[1] - lo[1]) * (np.arange(N) + 0.5) / N
            XX, YY = np.meshgrid(xs, ys, indexing="ij")
            pts = np.stack([XX.ravel(), YY.ravel()], axis=1)
            self._nodes = pts[self.domain.contains(pts)]
        return self._nodes

    def values(self) -> np.ndarray:
        if self._values is None:
            self._values = self.map_fn(self.nodes())
        return self._values

    def jacobian_dets(self, pts: Optional[np.ndarray] = None) -> np.ndarray:
        pts = self.nodes() if pts is None else np.atleast_2d(pts)
        if self.det_fn is not None:
            return self.det_fn(pts)
        return self.fd_jacobian_dets(pts)

    def fd_jacobian_dets(self, pts: np.ndarray, h: float = 2e-4) -> np.ndarray:
        """4th-order central-difference determinant, independent of det_fn."""
        pts = np.atleast_2d(pts)
        cols = []
        for axis in range(2):
            e = np.zeros(2)
            e[axis] = 1.0
            d = (self.map_fn(pts - 2 * h * e) - 8 * self.map_fn(pts - h * e)
                 + 8 * self.map_fn(pts + h * e) - self.map_fn(pts + 2 * h * e))
            cols.append(d / (12 * h))
        (fx, fy) = cols
        return fx[:, 0] * fy[:, 1] - fx[:, 1] * fy[:, 0]

    def inverse(self, pts: np.ndarray) -> np.ndarray:
        """Nearest-node preimage lookup (resolution-limited)."""
        if self._tree is None:
            self._tree = cKDTree(self.values())
        _, idx = self._tree.query(np.atleast_2d(pts))
        return self.nodes()[idx]

    def image_radius(self) -> float:
        return float(np.linalg.norm(self.values(), axis=1).max())

    def save(self, path_prefix: str) -> None:
        """Image points in the shared point-cloud format plus dets as .npy."""
        from .cone import SampledSet, save_pointcloud, _nearest_neighbor_fill
        vals = self.values()
        cloud = SampledSet(1, vals, {"strata": {"image": (0, len(vals))}},
                           _nearest_neighbor_fill(vals))
        save_pointcloud(f"{path_prefix}.cloud", cloud)
        np.save(f"{path_prefix}.dets.npy", self.jacobian_dets())


# ---------------------------------------------------------------------------
# radial embedding (flatten + scale)


def radial_embed(U: PlanarDomain, r: float, r0: float,
                 resolution: int = 512) -> GridMap2D:
    """Orientation-preserving embedding of U into B_r covering B_{r0}.

    The image is the disc of radius r scaled by the per-ray profile
    r_true(theta)/r_smooth(theta); for genuinely star-shaped U the profile
    is 1 and the image is all of B_r, while rectangle covers lose the
    smoothing overshoot, which is checked against the requested r0.
    """
    if not (r > r0 > 0):
        raise ValueError("need r > r0 > 0")
    star = _as_star(U)
    if isinstance(U, StarShapedDomain) and U.is_disc \
            and np.linalg.norm(U.center) < 1e-12 and r0 <= U.r_min <= r:
        return GridMap2D(U, lambda p: np.atleast_2d(p).copy(), resolution,
                         lambda p: np.ones(np.atleast_2d(p).shape[0]),
                         {"branch": "identity"})
    flatten = RadialFlatten(star)
    if isinstance(U, RectangleDomain):
        thetas = TWO_PI * np.arange(8192) / 8192
        profile = U.radius_samples(thetas) / star.radius(thetas)
        coverage = r * float(profile.min())
    else:
        coverage = r
    if coverage < r0:
        raise ValueError(
            f"r0 = {r0!r} too large: the construction only covers radius "
            f"{coverage!r} (smoothing overshoot); enlarge r or shrink r0")

    def mapper(p):
        return r * flatten(p)

    def dets(p):
        return r * r * flatten.density(p)

    return GridMap2D(U, mapper, resolution, dets,
                     {"branch": "radial-flatten", "coverage_radius": coverage,
                      "flatten": flatten, "scale": r})


# ---------------------------------------------------------------------------
# Neumann Poisson solvers


def rectangle_neumann_poisson(rhs: np.ndarray, hx: float, hy: float) -> np.ndarray:
    """Cell-centered 5-point Neumann Poisson solve via DCT-II diagonalization.

    Solves the standard ghost-cell discretization of laplace(theta) = rhs
    with zero normal flux; the incompatible constant mode is projected out
    (the caller tracks the mean defect).
    """
    nx, ny = rhs.shape
    spec = dctn(rhs, type=2, norm="ortho")
    lx = (2.0 * np.cos(np.pi * np.arange(nx) / nx) - 2.0) / (hx * hx)
    ly = (2.0 * np.cos(np.pi * np.arange(ny) / ny) - 2.0) / (hy * hy)
    lam = lx[:, None] + ly[None, :]
    lam[0, 0] = 1.0
    spec = spec / lam
    spec[0, 0] = 0.0
    return idctn(spec, type=2, norm="ortho")


def _thomas_tridiagonal(lower, diag, upper, rhs):
    """Vectorized Thomas solve; systems along axis 0, batched along axis 1."""
    n = diag.shape[0]
    cp = np.zeros_like(rhs)
    dp = np.zeros_like(rhs)
    cp[0] = upper[0] / diag[0]
    dp[0] = rhs[0] / diag[0]
    for i in range(1, n):
        denom = diag[i] - lower[i] * cp[i - 1]
        cp[i] = upper[i] / denom
        dp[i] = (rhs[i] - lower[i] * dp[i - 1]) / denom
    out = np.zeros_like(rhs)
    out[-1] = dp[-1]
    for i in range(n - 2, -1, -1):
        out[i] = dp[i] - cp[i] * out[i + 1]
    return out


def disc_neumann_poisson(rhs: np.ndarray, h: float) -> np.ndarray:
    """Neumann Poisson solve on the unit disc, cell-centered in the radius.

    rhs lives on s_i = (i + 1/2) h times a uniform angle grid.  Fourier in
    the angle reduces the solve to one tridiagonal system per mode; the
    radial fluxes vanish identically at s = 0 (no coordinate singularity to
    regularize) and at s = 1 (the Neumann wall).  The zero mode is pinned at
    the innermost cell to fix the additive constant.
    """
    ns, m = rhs.shape
    s = (np.arange(ns) + 0.5) * h
    spec = rfft(rhs, axis=1)
    # discrete solvability: project the zero mode onto area-weighted mean zero
    spec[:, 0] -= (spec[:, 0] * s).sum() / s.sum()
    modes = np.arange(spec.shape[1])
    s_lo = np.arange(ns) * h          # flux radius below cell i
    s_hi = np.arange(ns + 1)[1:] * h  # flux radius above cell i
    lower = (s_lo / (s * h * h))[:, None] * np.ones_like(modes, dtype=float)
    upper = (s_hi / (s * h * h))[:, None] * np.ones_like(modes, dtype=float)
    upper[-1, :] = 0.0
    diag = -(lower + upper) - (modes[None, :] ** 2) / (s ** 2)[:, None]
    rhs_m = spec.copy()
    # pin the constant mode's innermost value (otherwise singular)
    diag[0, 0] = 1.0
    upper[0, 0] = 0.0
    rhs_m[0, 0] = 0.0
    sol = _thomas_tridiagonal(lower, diag, upper, rhs_m)
    return irfft(sol, n=m, axis=1)


# ---------------------------------------------------------------------------
# flow fields with variational determinant tracking


class _Bicubic2D:
    """Bicubic B-spline interpolation on a uniform grid, batched evaluation.

    All requested (dx, dy) derivative orders are produced from one gather of
    the 4x4 coefficient neighborhood per query point, which is what keeps
    the dense variational certificate affordable at large grids.  The second
    axis may be periodic; the first uses the mirror end condition, so callers
    should pad their data with physically meaningful ghost rows and keep
    queries away from the outermost cells.
    """

    def __init__(self, values, x0, hx, y0, hy, periodic_y=False):
        c = spline_filter1d(np.asarray(values, dtype=float), order=3,
                            axis=0, mode="mirror")
        c = spline_filter1d(c, order=3, axis=1,
                            mode="grid-wrap" if periodic_y else "mirror")
        self.c = np.ascontiguousarray(c)
        self.x0, self.hx, self.y0, self.hy = float(x0), float(hx), float(y0), float(hy)
        self.periodic_y = periodic_y
        self.n, self.m = c.shape

    @staticmethod
    def _weights(t, kmax):
        M = t.shape[0]
        omt = 1.0 - t
        w = np.empty((M, 4))
        w[:, 0] = omt ** 3 / 6.0
        w[:, 1] = (3 * t ** 3 - 6 * t ** 2 + 4.0) / 6.0
        w[:, 2] = (3 * omt ** 3 - 6 * omt ** 2 + 4.0) / 6.0
        w[:, 3] = t ** 3 / 6.0
        out = [w]
        if kmax >= 1:
            d = np.empty((M, 4))
            d[:, 0] = -0.5 * omt ** 2
            d[:, 1] = 1.5 * t ** 2 - 2.0 * t
            d[:, 2] = -1.5 * omt ** 2 + 2.0 * omt
            d[:, 3] = 0.5 * t ** 2
            out.append(d)
        if kmax >= 2:
            s = np.empty((M, 4))
            s[:, 0] = omt
            s[:, 1] = 3.0 * t - 2.0
            s[:, 2] = 1.0 - 3.0 * t
            s[:, 3] = t
            out.append(s)
        return out

    def plan(self, x, y, kmax=2):
        """Precompute coefficient indices and basis weights for query points.

        The plan is reusable by any spline with the same grid geometry, so
        co-located fields (potential, densities) pay for index arithmetic and
        weight evaluation once per velocity call.
        """
        u = np.clip((np.asarray(x, dtype=float) - self.x0) / self.hx,
                    0.0, self.n - 1.0)
        v = (np.asarray(y, dtype=float) - self.y0) / self.hy
        iu = np.minimum(u.astype(np.intp), self.n - 2)
        offs = np.arange(-1, 3)
        rows = iu[:, None] + offs
        np.abs(rows, out=rows)                     # mirror fold at the low edge
        rows = np.where(rows > self.n - 1, 2 * (self.n - 1) - rows, rows)
        if self.periodic_y:
            v = np.mod(v, self.m)
            iv = np.minimum(v.astype(np.intp), self.m - 1)
            cols = np.mod(iv[:, None] + offs, self.m)
        else:
            v = np.clip(v, 0.0, self.m - 1.0)
            iv = np.minimum(v.astype(np.intp), self.m - 2)
            cols = iv[:, None] + offs
            np.abs(cols, out=cols)
            cols = np.where(cols > self.m - 1, 2 * (self.m - 1) - cols, cols)
        idx = rows[:, :, None] * self.m + cols[:, None, :]
        return idx, self._weights(u - iu, kmax), self._weights(v - iv, kmax)

    def ev_planned(self, plan, combos):
        """Evaluate several (dx, dy) derivative orders from a shared plan."""
        idx, wxs, wys = plan
        blocks = self.c.ravel()[idx]
        sx = (1.0, 1.0 / self.hx, 1.0 / self.hx ** 2)
        sy = (1.0, 1.0 / self.hy, 1.0 / self.hy ** 2)
        out, cache = {}, {}
        for dx, dy in combos:
            q = cache.get(dy)
            if q is None:
                q = (blocks @ wys[dy][:, :, None])[:, :, 0]
                cache[dy] = q
            out[dx, dy] = np.einsum("ij,ij->i", q, wxs[dx]) * (sx[dx] * sy[dy])
        return out

    def ev_many(self, x, y, combos):
        """Evaluate several (dx, dy) derivative orders in one coefficient pass."""
        kmax = max(max(dx, dy) for dx, dy in combos)
        return self.ev_planned(self.plan(x, y, kmax), combos)

    def ev(self, x, y, dx=0, dy=0):
        return self.ev_many(np.atleast_1d(x), np.atleast_1d(y), [(dx, dy)])[dx, dy]


def _vel_gradient(mu, gx, gy, mx, my, hxx, hxy, hyy):
    """Spatial gradient of v = -grad(theta)/mu from the pieces."""
    grad = np.empty((mu.shape[0], 2, 2))
    grad[:, 0, 0] = -(hxx * mu - gx * mx) / mu ** 2
    grad[:, 0, 1] = -(hxy * mu - gx * my) / mu ** 2
    grad[:, 1, 0] = -(hxy * mu - gy * mx) / mu ** 2
    grad[:, 1, 1] = -(hyy * mu - gy * my) / mu ** 2
    return grad


class _RectField:
    """-grad(theta)/mu_t on a rectangle; theta and f are splines on the cells.

    Both grids are extended by ghost cells so the splines stay smooth up to
    (and slightly past) the walls: theta by even reflection, which is what
    the Neumann discretization implies, and the density by exact evaluation
    (its formula extends past the rectangle).  The padding is deep enough
    that the interpolation end condition, which perturbs the spline within a
    few cells of the grid edge, cannot reach the walls.
    """

    PAD = 12

    def __init__(self, theta_grid, xs, ys, f_callable):
        pad = self.PAD
        hx, hy = xs[1] - xs[0], ys[1] - ys[0]
        ix = np.arange(-pad, theta_grid.shape[0] + pad)
        iy = np.arange(-pad, theta_grid.shape[1] + pad)
        xs_e = xs[0] + hx * ix
        ys_e = ys[0] + hy * iy
        th_e = np.pad(theta_grid, pad, mode="symmetric")
        # even reflection is C^2 only; restore the third-order term, which the
        # PDE pins to the normal derivative of the density along each wall
        x_lo, x_hi = xs[0] - 0.5 * hx, xs[-1] + 0.5 * hx
        y_lo, y_hi = ys[0] - 0.5 * hy, ys[-1] + 0.5 * hy
        d = 1e-5

        def ddf(pts, axis):
            e = np.zeros(2)
            e[axis] = d
            return (f_callable(pts + e) - f_callable(pts - e)) / (2 * d)

        wall_y = np.stack([np.full_like(ys_e, x_lo), ys_e], axis=1)
        dfx_lo = ddf(wall_y, 0)
        dfx_hi = ddf(np.stack([np.full_like(ys_e, x_hi), ys_e], axis=1), 0)
        wall_x = np.stack([xs_e, np.full_like(xs_e, y_lo)], axis=1)
        dfy_lo = ddf(wall_x, 1)
        dfy_hi = ddf(np.stack([xs_e, np.full_like(xs_e, y_hi)], axis=1), 1)
        for k in range(pad):
            dx3 = ((pad - k - 0.5) * hx) ** 3 / 3.0
            th_e[k, :] -= dx3 * dfx_lo
            th_e[-1 - k, :] += dx3 * dfx_hi
            dy3 = ((pad - k - 0.5) * hy) ** 3 / 3.0
            th_e[:, k] -= dy3 * dfy_lo
            th_e[:, -1 - k] += dy3 * dfy_hi
        XX, YY = np.meshgrid(xs_e, ys_e, indexing="ij")
        f_e = f_callable(np.stack([XX.ravel(), YY.ravel()], axis=1)).reshape(XX.shape)
        self.th = _Bicubic2D(th_e, xs_e[0], hx, ys_e[0], hy)
        self.f = _Bicubic2D(f_e, xs_e[0], hx, ys_e[0], hy)
        self.bounds = (xs_e[0], xs_e[-1], ys_e[0], ys_e[-1])

    def _clamped(self, pts):
        x0, x1, y0, y1 = self.bounds
        return np.clip(pts[:, 0], x0, x1), np.clip(pts[:, 1], y0, y1)

    def velocity(self, t, pts, with_grad=False):
        x, y = self._clamped(pts)
        # the density spline shares the grid geometry, so the plan transfers
        if with_grad:
            plan = self.th.plan(x, y, 2)
            th = self.th.ev_planned(plan, [(1, 0), (0, 1), (2, 0), (1, 1),
                                           (0, 2)])
            f = self.f.ev_planned(plan, [(0, 0), (1, 0), (0, 1)])
        else:
            plan = self.th.plan(x, y, 1)
            th = self.th.ev_planned(plan, [(1, 0), (0, 1)])
            f = self.f.ev_planned(plan, [(0, 0)])
        gx, gy = th[1, 0], th[0, 1]
        mu = (1.0 - t) + t * f[0, 0]
        v = -np.stack([gx, gy], axis=1) / mu[:, None]
        if not with_grad:
            return v
        return v, _vel_gradient(mu, gx, gy, t * f[1, 0], t * f[0, 1],
                                th[2, 0], th[1, 1], th[0, 2])


class _DiscField:
    """-grad(theta)/mu_t on the unit disc, built from polar-grid splines.

    theta is splined directly on (s, angle) with the angle periodic;
    Cartesian gradients and Hessians come through the polar chain rule away
    from the center and from a Cartesian resample patch near it (the chain
    rule divides by s).  The cell-centered radial grid is extended through
    the origin with the exact antipodal rows ((s, t) and (-s, t+pi) are the
    same point, so no extrapolation is involved) and past s = 1 with ghost
    rows built from the
    Neumann reflection plus the cubic term theta_sss(1), which the PDE pins
    to boundary data -- without it the reflected extension is C^2 only and
    the flow determinant picks up an O(h) layer along the rim.  Padding depth
    keeps the interpolation end condition away from the reachable band.
    """

    PAD = 12

    def __init__(self, theta_grid, s_grid, th_grid, density_rows, theta3_row):
        pad = self.PAD
        ns, m = theta_grid.shape
        if m % 2:
            raise ValueError("angular resolution must be even")
        h = s_grid[1] - s_grid[0]
        dt = TWO_PI / m

        def flip(rows):
            return np.roll(rows, m // 2, axis=-1)

        ghosts = [theta_grid[-1 - k] + (((k + 0.5) * h) ** 3 / 3.0) * theta3_row
                  for k in range(pad)]
        th_rows = np.vstack([flip(theta_grid[pad - 1::-1]), theta_grid, *ghosts])
        s0 = -(pad - 0.5) * h
        self.smax = 1.0 + 0.5 * h
        self.sp_th = _Bicubic2D(th_rows, s0, h, 0.0, dt, periodic_y=True)
        sigma, tau = density_rows  # on the cell rows plus pad outer ghost rows
        self.sp_sigma = _Bicubic2D(np.vstack([flip(sigma[pad - 1::-1]), sigma]),
                                   s0, h, 0.0, dt, periodic_y=True)
        self.sp_tau = _Bicubic2D(np.vstack([flip(tau[pad - 1::-1]), tau]),
                                 s0, h, 0.0, dt, periodic_y=True)
        # Cartesian resample patch around the origin: spline values are
        # accurate everywhere, but the polar chain rule divides by s, so
        # derivatives near the center come from this patch instead
        self.r_patch = 4.0 * h
        ext, hc = 12.0 * h, 0.5 * h
        nn = int(round(2 * ext / hc)) + 1
        ax = -ext + hc * np.arange(nn)
        PX, PY = np.meshgrid(ax, ax, indexing="ij")
        prr, pth = np.hypot(PX.ravel(), PY.ravel()), np.arctan2(PY.ravel(),
                                                                PX.ravel())

        def patch(sp):
            return _Bicubic2D(sp.ev(prr, pth).reshape(nn, nn), -ext, hc,
                              -ext, hc)

        self.ct_th = patch(self.sp_th)
        self.ct_sigma = patch(self.sp_sigma)
        self.ct_tau = patch(self.sp_tau)

    def _vel_polar(self, t, pts, with_grad):
        s = np.minimum(np.hypot(pts[:, 0], pts[:, 1]), self.smax)
        th = np.arctan2(pts[:, 1], pts[:, 0])
        c, sn = np.cos(th), np.sin(th)
        # all three polar splines share the grid geometry and thus the plan
        if with_grad:
            plan = self.sp_th.plan(s, th, 2)
            thv = self.sp_th.ev_planned(plan, [(1, 0), (0, 1), (2, 0), (1, 1),
                                               (0, 2)])
            sgv = self.sp_sigma.ev_planned(plan, [(0, 0), (1, 0), (0, 1)])
            tgv = self.sp_tau.ev_planned(plan, [(0, 0), (1, 0), (0, 1)])
        else:
            plan = self.sp_th.plan(s, th, 1)
            thv = self.sp_th.ev_planned(plan, [(1, 0), (0, 1)])
            sgv = self.sp_sigma.ev_planned(plan, [(0, 0)])
            tgv = self.sp_tau.ev_planned(plan, [(0, 0)])
        fs, ft = thv[1, 0], thv[0, 1]
        gx = fs * c - ft * sn / s
        gy = fs * sn + ft * c / s
        mu = (1.0 - t) * sgv[0, 0] + t * tgv[0, 0]
        v = -np.stack([gx, gy], axis=1) / mu[:, None]
        if not with_grad:
            return v
        mixed = thv[1, 1] / s - ft / s ** 2
        angular = fs / s + thv[0, 2] / s ** 2
        fss = thv[2, 0]
        hxx = c * c * fss - 2 * c * sn * mixed + sn * sn * angular
        hyy = sn * sn * fss + 2 * c * sn * mixed + c * c * angular
        hxy = c * sn * (fss - angular) + (c * c - sn * sn) * mixed
        mx = ((1.0 - t) * sgv[1, 0] + t * tgv[1, 0]) * c \
            - ((1.0 - t) * sgv[0, 1] + t * tgv[0, 1]) * sn / s
        my = ((1.0 - t) * sgv[1, 0] + t * tgv[1, 0]) * sn \
            + ((1.0 - t) * sgv[0, 1] + t * tgv[0, 1]) * c / s
        return v, _vel_gradient(mu, gx, gy, mx, my, hxx, hxy, hyy)

    def _vel_cart(self, t, pts, with_grad):
        x, y = pts[:, 0], pts[:, 1]
        if with_grad:
            plan = self.ct_th.plan(x, y, 2)
            thv = self.ct_th.ev_planned(plan, [(1, 0), (0, 1), (2, 0), (1, 1),
                                               (0, 2)])
            sgv = self.ct_sigma.ev_planned(plan, [(0, 0), (1, 0), (0, 1)])
            tgv = self.ct_tau.ev_planned(plan, [(0, 0), (1, 0), (0, 1)])
        else:
            plan = self.ct_th.plan(x, y, 1)
            thv = self.ct_th.ev_planned(plan, [(1, 0), (0, 1)])
            sgv = self.ct_sigma.ev_planned(plan, [(0, 0)])
            tgv = self.ct_tau.ev_planned(plan, [(0, 0)])
        gx, gy = thv[1, 0], thv[0, 1]
        mu = (1.0 - t) * sgv[0, 0] + t * tgv[0, 0]
        v = -np.stack([gx, gy], axis=1) / mu[:, None]
        if not with_grad:
            return v
        mx = (1.0 - t) * sgv[1, 0] + t * tgv[1, 0]
        my = (1.0 - t) * sgv[0, 1] + t * tgv[0, 1]
        return v, _vel_gradient(mu, gx, gy, mx, my, thv[2, 0], thv[1, 1],
                                thv[0, 2])

    def velocity(self, t, pts, with_grad=False):
        near = np.hypot(pts[:, 0], pts[:, 1]) < self.r_patch
        if not near.any():
            return self._vel_polar(t, pts, with_grad)
        if near.all():
            return self._vel_cart(t, pts, with_grad)
        far = ~near
        v = np.empty_like(pts)
        if not with_grad:
            v[near] = self._vel_cart(t, pts[near], False)
            v[far] = self._vel_polar(t, pts[far], False)
            return v
        grad = np.empty((pts.shape[0], 2, 2))
        v[near], grad[near] = self._vel_cart(t, pts[near], True)
        v[far], grad[far] = self._vel_polar(t, pts[far], True)
        return v, grad


def _rk4_flow(pts: np.ndarray, field, steps: int) -> np.ndarray:
    x = np.atleast_2d(pts).astype(float).copy()
    dt = 1.0 / steps
    for k in range(steps):
        t = k * dt
        k1 = field.velocity(t, x)
        k2 = field.velocity(t + 0.5 * dt, x + 0.5 * dt * k1)
        k3 = field.velocity(t + 0.5 * dt, x + 0.5 * dt * k2)
        k4 = field.velocity(t + dt, x + dt * k3)
        x += (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return x


def _rk4_flow_with_jacobian(pts: np.ndarray, field, steps: int):
    """Flow plus the variational equation dJ/dt = Dv(x) J, J(0) = I."""
    x = np.atleast_2d(pts).astype(float).copy()
    J = np.broadcast_to(np.eye(2), (x.shape[0], 2, 2)).copy()
    dt = 1.0 / steps

    def rhs(t, state):
        xx, JJ = state
        v, G = field.velocity(t, xx, with_grad=True)
        return v, G @ JJ

    for k in range(steps):
        t = k * dt
        k1 = rhs(t, (x, J))
        k2 = rhs(t + 0.5 * dt, (x + 0.5 * dt * k1[0], J + 0.5 * dt * k1[1]))
        k3 = rhs(t + 0.5 * dt, (x + 0.5 * dt * k2[0], J + 0.5 * dt * k2[1]))
        k4 = rhs(t + dt, (x + dt * k3[0], J + dt * k3[1]))
        x += (dt / 6.0) * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        J += (dt / 6.0) * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    dets = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    return x, dets


# ---------------------------------------------------------------------------
# Moser correction


def moser_correct(psi: GridMap2D, U: Optional[PlanarDomain] = None,
                  flow_steps: int = 64, spot_probes: int = 512,
                  residual_tol: float = 1e-3, seed: int = 0,
                  solve_refine: int = 2) -> GridMap2D:
    """Compose psi with a Moser flow so the result has unit Jacobian.

    The mean density defect of psi (it should be zero for an exactly
    area-preserving target) is folded into a residual homothety, so the
    certified identity is exact and only discretization error remains.  On
    rectangles the Poisson problem is solved directly on the grid; on star
    domains the correction is conjugated through the radial flatten onto the
    unit disc, where the two pushed-forward densities (of Lebesgue measure
    and of psi's density) drive the same construction.  The flow field is
    built on a solve_refine-times finer grid than the certificate lattice.
    The returned map carries a dense variational determinant certificate and
    an independent finite-difference spot check in meta; a certificate worse
    than residual_tol raises.
    """
    U = psi.domain if U is None else U
    rng = np.random.default_rng(seed)
    if isinstance(U, RectangleDomain):
        corrected = _moser_rectangle(psi, U, flow_steps, solve_refine)
        margin = 0.01 * min(U.x1 - U.x0, U.y1 - U.y0)
    else:
        corrected = _moser_star(psi, U, flow_steps, solve_refine)
        margin = 0.02 * U.r_min
    nodes = corrected.nodes()
    inner = nodes[U.contains(nodes, pad=-margin)]
    probes = inner[rng.choice(inner.shape[0], size=min(spot_probes, inner.shape[0]),
                              replace=False)]
    fd = corrected.fd_jacobian_dets(probes)
    corrected.meta["fd_spot_max_dev"] = float(np.abs(fd - 1.0).max())
    resid = corrected.meta["det_grid_max_dev"]
    if resid > residual_tol:
        raise RuntimeError(
            f"Moser correction residual {resid:.3e} exceeds {residual_tol:.1e}")
    return corrected


def _moser_rectangle(psi: GridMap2D, U: RectangleDomain, flow_steps: int,
                     solve_refine: int = 2) -> GridMap2D:
    N = psi.resolution
    # the Poisson solve and the flow field live on a refined grid (transforms
    # are cheap; flow cost scales with the flowed points, not the field grid)
    Nf = solve_refine * N
    hx, hy = (U.x1 - U.x0) / Nf, (U.y1 - U.y0) / Nf
    xs = U.x0 + hx * (np.arange(Nf) + 0.5)
    ys = U.y0 + hy * (np.arange(Nf) + 0.5)
    XF, YF = np.meshgrid(xs, ys, indexing="ij")
    f = psi.jacobian_dets(np.stack([XF.ravel(), YF.ravel()],
                                   axis=1)).reshape(Nf, Nf)
    # fold the mass defect of psi into a residual homothety kappa: the flow
    # transports density 1 to kappa^2*f, which is exactly balanced, so the
    # composite kappa*(psi o chi) satisfies det = 1 identically rather than
    # det = mean(f) identically
    kappa2 = 1.0 / float(f.mean())
    kappa = math.sqrt(kappa2)
    mean_defect = abs(1.0 / kappa2 - 1.0)
    theta = rectangle_neumann_poisson(kappa2 * f - 1.0, hx, hy)
    fld = _RectField(theta, xs, ys, lambda p: kappa2 * psi.jacobian_dets(p))
    cx = U.x0 + (U.x1 - U.x0) / N * (np.arange(N) + 0.5)
    cy = U.y0 + (U.y1 - U.y0) / N * (np.arange(N) + 0.5)
    XX, YY = np.meshgrid(cx, cy, indexing="ij")
    nodes = np.stack([XX.ravel(), YY.ravel()], axis=1)

    def chi(p):
        return _rk4_flow(p, fld, flow_steps)

    def corrected(p):
        return kappa * psi.map_fn(chi(p))

    # dense certificate: flow the whole cell lattice once with the variational
    # equation for det(D chi), multiply by psi's analytic density
    chi_nodes, chi_dets = _rk4_flow_with_jacobian(nodes, fld, flow_steps)
    dets = kappa2 * psi.jacobian_dets(chi_nodes) * chi_dets
    out = GridMap2D(U, corrected, psi.resolution, None,
                    {"solver": "rectangle-dct-neumann",
                     "mean_defect": mean_defect,
                     "det_grid": dets,
                     "det_grid_max_dev": float(np.abs(dets - 1.0).max()),
                     "flow_steps": flow_steps,
                     "chi": chi})
    out._nodes = nodes
    out._values = kappa * psi.map_fn(chi_nodes)
    return out


def _moser_star(psi: GridMap2D, U: StarShapedDomain, flow_steps: int,
                solve_refine: int = 2) -> GridMap2D:
    flatten = psi.meta.get("flatten") or RadialFlatten(U)
    ns, m = max(64, psi.resolution // 2), psi.resolution
    # solve and field on a refined polar grid, certificate on the coarse one
    nsf, mf = solve_refine * ns, solve_refine * m
    h = 1.0 / nsf
    s = (np.arange(nsf) + 0.5) * h
    th = TWO_PI * np.arange(mf) / mf

    ct, st = np.cos(th), np.sin(th)

    def densities(s_vals):
        # evaluated in row blocks: the bisection inverse holds a dozen
        # grid-sized temporaries, which at deep refinement would not fit
        sig = np.empty((s_vals.size, mf))
        ta = np.empty((s_vals.size, mf))
        block = max(1, int(2_000_000 // mf))
        for lo in range(0, s_vals.size, block):
            sv = s_vals[lo:lo + block, None]
            disc = np.stack([(sv * ct).ravel(), (sv * st).ravel()], axis=1)
            src = flatten.invert(disc)
            rel = src - U.center
            J = flatten.polar_density(np.hypot(rel[:, 0], rel[:, 1]),
                                      np.arctan2(rel[:, 1], rel[:, 0]))
            sig[lo:lo + block] = (1.0 / J).reshape(-1, mf)
            ta[lo:lo + block] = (psi.jacobian_dets(src) / J).reshape(-1, mf)
        return sig, ta

    sigma, tau = densities(s)
    w = (s * h * (TWO_PI / mf))[:, None]
    mass_sigma, mass_tau = float((sigma * w).sum()), float((tau * w).sum())
    mean_defect = abs(mass_tau / mass_sigma - 1.0)
    # as in the rectangle path, psi's mass defect becomes a residual
    # homothety kappa; flowing sigma to the balanced kappa^2*tau makes
    # det D(kappa * psi o chi) = 1 an exact identity
    kappa2 = mass_sigma / mass_tau
    kappa = math.sqrt(kappa2)
    tau = tau * kappa2

    theta = disc_neumann_poisson(tau - sigma, h)
    # boundary data for the cubic ghost rows: theta_sss(1) = F_s - F + 3 theta_tt
    delta = 1e-4
    sig_b, tau_b = densities(np.array([1.0 - delta, 1.0, 1.0 + delta]))
    F_b = tau_b * kappa2 - sig_b
    F_s = (F_b[2] - F_b[0]) / (2 * delta)
    trace = (15 * theta[-1] - 10 * theta[-2] + 3 * theta[-3]) / 8.0
    tr_spec = rfft(trace)
    theta_tt = irfft(tr_spec * -np.arange(tr_spec.size) ** 2, n=mf)
    theta3 = F_s - F_b[1] + 3.0 * theta_tt
    s_outer = 1.0 + (np.arange(_DiscField.PAD) + 0.5) * h
    sig_ext, tau_ext = densities(np.concatenate([s, s_outer]))
    tau_ext = tau_ext * kappa2
    fld = _DiscField(theta, s, th, (sig_ext, tau_ext), theta3)

    def chi(p):
        return flatten.invert(_rk4_flow(flatten(p), fld, flow_steps))

    def corrected(p):
        return kappa * psi.map_fn(chi(p))

    # dense certificate on the polar lattice: flow it once with the
    # variational equation for det(DV), conjugate with the analytic densities
    sc = (np.arange(ns) + 0.5) / ns
    tc = TWO_PI * np.arange(m) / m
    SS, TT = np.meshgrid(sc, tc, indexing="ij")
    y = np.stack([(SS * np.cos(TT)).ravel(), (SS * np.sin(TT)).ravel()], axis=1)
    Vy, V_dets = _rk4_flow_with_jacobian(y, fld, flow_steps)
    nodes = flatten.invert(y)
    chi_nodes = flatten.invert(Vy)
    rel_n, rel_c = nodes - U.center, chi_nodes - U.center
    J_n = flatten.polar_density(np.hypot(rel_n[:, 0], rel_n[:, 1]),
                                np.arctan2(rel_n[:, 1], rel_n[:, 0]))
    J_c = flatten.polar_density(np.hypot(rel_c[:, 0], rel_c[:, 1]),
                                np.arctan2(rel_c[:, 1], rel_c[:, 0]))
    dets = kappa2 * psi.jacobian_dets(chi_nodes) * V_dets * J_n / J_c
    out = GridMap2D(U, corrected, psi.resolution, None,
                    {"solver": "disc-fourier-neumann",
                     "mean_defect": mean_defect,
                     "det_grid": dets,
                     "det_grid_max_dev": float(np.abs(dets - 1.0).max()),
                     "flow_steps": flow_steps,
                     "chi": chi})
    out._nodes = nodes
    out._values = kappa * psi.map_fn(chi_nodes)
    return out


# ---------------------------------------------------------------------------
# the full volume embedding


def volume_embed(U: PlanarDomain, c: float, resolution: int = 512,
                 flow_steps: int = 64, residual_tol: float = 1e-3,
                 solve_refine: int = 2) -> GridMap2D:
    """Area-preserving embedding of U into the open disc of area c > |U|.

    Chains the radial embedding into the disc of area c (whose image covers
    the disc of area |U|), the homothety shrinking the image area back to
    |U| (calibrated against the grid mean of the Jacobian so the Moser step
    sees exactly balanced densities), and the Moser correction.
    """
    area = U.area
    if c <= area:
        raise ValueError(f"target area {c!r} must exceed the domain area {area!r}")
    r, r0 = math.sqrt(c / np.pi), math.sqrt(area / np.pi)
    if isinstance(U, StarShapedDomain) and U.is_disc \
            and np.linalg.norm(U.center) < 1e-12:
        lam = r0 / U.r_min

        def homothety(p):
            return lam * np.atleast_2d(p)

        return GridMap2D(U, homothety, resolution,
                         lambda p: np.full(np.atleast_2d(p).shape[0], lam * lam),
                         {"branch": "homothety", "det_grid_max_dev":
                          abs(lam * lam - 1.0), "fd_spot_max_dev": abs(lam**2 - 1.0)})
    base = radial_embed(U, r, r0, resolution)
    lam = 1.0 / math.sqrt(float(np.mean(base.jacobian_dets())))
    if lam > 1.0 + 1e-9:
        raise RuntimeError("shrink calibration exceeded 1; image would leave the target")
    base_map, base_det = base.map_fn, base.det_fn

    def shrunk(p):
        return lam * base_map(p)

    def shrunk_det(p):
        return lam * lam * base_det(p)

    psi = GridMap2D(U, shrunk, resolution, shrunk_det,
                    {"branch": "radial+shrink", "shrink": lam,
                     "flatten": base.meta.get("flatten")})
    out = moser_correct(psi, U, flow_steps, residual_tol=residual_tol,
                        solve_refine=solve_refine)
    out.meta["target_area"] = c
    out.meta["target_radius"] = r
    out.meta["image_radius"] = out.image_radius()
    if out.meta["image_radius"] > r + 1e-9:
        raise RuntimeError("corrected image left the target disc")
    return out
