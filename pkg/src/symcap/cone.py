"""Cone over generator loops, its sphere quotient, and the assembled union set.

Given loops x_1, ..., x_k on the conjugate-symmetric Lagrangian, the cone map
sends (t, z) in [0, 2k] x S^1 to rho(t - 2i + 2) x_i(z) going up and
rho(2i - t) x_i(z) coming back down on the i-th double segment, where rho is
a smooth step that is exactly 0 near 0 and exactly 1 near 1.  The map is
locally constant (= 0) near even integer t, so collapsing the two boundary
circles yields a smooth map from the 2-sphere whose image is the union of
the straight-line cones [0,1] * image(x_i).

The union set is that sphere image together with a dense sample of the
Lagrangian itself; for odd n every point is pushed through the
middle-to-last coordinate permutation so the polydisc bound applies to the
first n - 1 coordinates.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from .core import Loop, smooth_step
from .lagrangian import (
    PhaseSphereLagrangian,
    conjugate_symmetric_model,
    permute_middle_coordinate,
)

STEP_FLAT = 0.1  # rho is exactly 0 on [0, STEP_FLAT] and 1 on [1 - STEP_FLAT, 1]


def radial_profile(u, flat: float = STEP_FLAT):
    """The cone's radial step rho: C-infinity, exactly 0/1 outside (flat, 1-flat)."""
    return smooth_step(u, flat, 1.0 - flat)


@dataclass
class ConeMap:
    """The double-segment cone over a list of loops sharing a base point."""

    generators: List[Loop]
    rho: Callable = radial_profile
    flat: float = STEP_FLAT

    def __post_init__(self):
        if not self.generators:
            raise ValueError("cone needs at least one generator loop")
        dims = {g.n for g in self.generators}
        if len(dims) != 1:
            raise ValueError("generator loops live in different dimensions")
        base = np.stack([g.points[0] for g in self.generators])
        if np.abs(base - base[0]).max() > 1e-9:
            raise ValueError("generator loops must share a base point")
        self.n = self.generators[0].n

    @property
    def k(self) -> int:
        return len(self.generators)

    def evaluate(self, t, s) -> np.ndarray:
        """Cone points for parameters t in [0, 2k], circle parameter s in [0, 1).

        Broadcasts t against s; on each double segment the radial factor is
        rho of the distance into the segment, so integer-odd t reproduces the
        generator exactly (rho(1) = 1) and even-integer t collapses to 0.
        """
        t = np.asarray(t, dtype=float)
        s = np.asarray(s, dtype=float)
        t, s = np.broadcast_arrays(t, s)
        shape = t.shape
        t, s = t.ravel(), s.ravel()
        if t.min() < -1e-12 or t.max() > 2 * self.k + 1e-12:
            raise ValueError("t outside [0, 2k]")
        seg = np.clip(np.floor(t / 2.0).astype(int), 0, self.k - 1)
        local = t - 2.0 * seg
        radial = self.rho(np.minimum(local, 2.0 - local), self.flat)
        out = np.zeros((t.size, 2 * self.n))
        for i in range(self.k):
            mask = seg == i
            if mask.any():
                out[mask] = radial[mask, None] * self.generators[i].eval_fn(s[mask])
        return out.reshape(shape + (2 * self.n,))


def build_cone(generators: Sequence[Loop]) -> ConeMap:
    """Assemble the cone; validates nonemptiness and the shared base point."""
    return ConeMap(list(generators))


def sphere_map(cone: ConeMap) -> Callable[[np.ndarray], np.ndarray]:
    """Collapse the cylinder's boundary circles: a map from unit vectors in R^3.

    Polar angle theta = arccos(v_3) stretches to t = (2k/pi) theta, azimuth
    gives the circle parameter.  Well-defined at the poles because the cone
    is identically 0 near t in {0, 2k}; that constancy is spot-checked here
    and a broken radial profile raises.
    """
    k = cone.k
    probe_s = np.linspace(0.0, 1.0, 7, endpoint=False)
    for t_end in (0.4 * cone.flat, 2 * k - 0.4 * cone.flat):
        vals = cone.evaluate(np.full_like(probe_s, t_end), probe_s)
        if np.abs(vals).max() > 1e-12:
            raise ValueError("cone is not constant near its ends; sphere map undefined")

    def on_sphere(v: np.ndarray) -> np.ndarray:
        v = np.atleast_2d(np.asarray(v, dtype=float))
        if v.shape[-1] != 3:
            raise ValueError("sphere points must be unit vectors in R^3")
        norms = np.linalg.norm(v, axis=-1)
        if np.abs(norms - 1.0).max() > 1e-9:
            raise ValueError("sphere points must have unit norm")
        theta = np.arccos(np.clip(v[:, 2], -1.0, 1.0))
        t = (2.0 * k / np.pi) * theta
        s = np.mod(np.arctan2(v[:, 1], v[:, 0]) / (2.0 * np.pi), 1.0)
        return cone.evaluate(t, s)

    return on_sphere


# ---------------------------------------------------------------------------
# sampled sets


@dataclass
class SampledSet:
    """Immutable finite sample of a subset of R^{2n} with provenance."""

    n: int
    points: np.ndarray
    meta: Dict
    fill: float

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim != 2 or self.points.shape[1] != 2 * self.n:
            raise ValueError("points must be an (N, 2n) array")
        self.points.setflags(write=False)

    @property
    def count(self) -> int:
        return self.points.shape[0]

    def stratum(self, name: str) -> np.ndarray:
        lo, hi = self.meta["strata"][name]
        return self.points[lo:hi]


def _nearest_neighbor_fill(points: np.ndarray, probes: int = 4096,
                           seed: int = 0) -> float:
    """Max nearest-neighbor gap over a probe subsample: a fill-distance proxy.

    Coincident samples (strata overlap at shared base points) are skipped
    when measuring each probe's gap, otherwise a handful of duplicates would
    report fill 0 for an arbitrarily sparse cloud.
    """
    tree = cKDTree(points)
    rng = np.random.default_rng(seed)
    idx = rng.choice(points.shape[0], size=min(probes, points.shape[0]), replace=False)
    k = min(4, points.shape[0])
    dist, _ = tree.query(points[idx], k=k)
    dist = np.where(dist > 1e-12, dist, np.inf)
    gaps = dist.min(axis=1)
    gaps = gaps[np.isfinite(gaps)]
    return float(gaps.max()) if gaps.size else 0.0


def sphere_net(m: int, count: int, seed: int = 0) -> np.ndarray:
    """Roughly uniform deterministic net on S^{m-1}, (count, m).

    Circle and 2-sphere get uniform / Fibonacci grids; higher spheres fall
    back to seeded normalized Gaussians (still deterministic, but with
    random rather than quasi-uniform gaps).
    """
    if m == 2:
        a = 2 * np.pi * np.arange(count) / count
        return np.stack([np.cos(a), np.sin(a)], axis=1)
    if m == 3:
        i = np.arange(count)
        golden = (1 + np.sqrt(5.0)) / 2
        z = 1 - (2 * i + 1) / count
        r = np.sqrt(np.maximum(0.0, 1 - z * z))
        a = 2 * np.pi * i / golden
        return np.stack([r * np.cos(a), r * np.sin(a), z], axis=1)
    g = np.random.default_rng(seed).normal(size=(count, m))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def sample_lagrangian(model: PhaseSphereLagrangian, phi_count: int,
                      sphere_count: int) -> np.ndarray:
    """Product grid sample of the model: phi_count phases x sphere_count q's.

    Phases run over [0, pi) only: (phi, q) and (phi + pi, -q) give the same
    point, so the half-range is a fundamental domain and the full circle
    would sample everything twice.
    """
    phis = np.pi * np.arange(phi_count) / phi_count
    qs = sphere_net(model.n, sphere_count)
    P, Q = np.meshgrid(np.arange(phi_count), np.arange(sphere_count), indexing="ij")
    return model.sample_many(phis[P.ravel()], qs[Q.ravel()])


def assemble_union_set(n: int, samples_per_stratum: Optional[int] = None,
                       verify_tol: float = 1e-9) -> SampledSet:
    """Sample the union of the sqrt(2)-Lagrangian and the cone sphere over it.

    samples_per_stratum is the per-axis grid resolution m: the Lagrangian
    stratum uses m phases over [0, pi) times 2m circle points (n = 2) or m^2
    Fibonacci sphere points (n >= 3).  The cone stratum is sampled as a
    radius x loop-parameter grid (m/2 radii x 4m parameters per generator):
    that straight-cone grid has the same image as the collapsed sphere map
    but spends no samples on the map's flat plateaus.  For odd n the
    middle-to-last coordinate permutation is applied to every point, after
    which the first n - 1 complex coordinates are trapped in the closed
    unit disc.  Each Lagrangian sample (and each cone generator loop) is
    membership-verified at verify_tol during assembly.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    if samples_per_stratum is None:
        samples_per_stratum = 384 if n == 2 else 96
    m = int(samples_per_stratum)
    if m < 8:
        raise ValueError("samples_per_stratum too small")

    model = conjugate_symmetric_model(n)
    sphere_count = 2 * m if n == 2 else m * m
    lag_points = sample_lagrangian(model, m, sphere_count)
    if not model.membership(lag_points, verify_tol):
        raise RuntimeError("Lagrangian stratum failed its membership check")

    cone = build_cone(model.generator_loops())
    for g in cone.generators:
        if not model.membership(g.points, verify_tol):
            raise RuntimeError("cone generator strays off the Lagrangian")
    radii = np.linspace(0.0, 1.0, max(3, m // 2))[1:]
    s_grid = np.arange(4 * m) / (4 * m)
    blocks = []
    for g in cone.generators:
        on_loop = g.eval_fn(s_grid)
        blocks.append((radii[:, None, None] * on_loop[None, :, :]).reshape(-1, 2 * n))
    cone_points = np.vstack([np.zeros((1, 2 * n))] + blocks)

    points = np.vstack([lag_points, cone_points])
    psi_applied = bool(n % 2)
    if psi_applied:
        points = permute_middle_coordinate(points, n)

    meta = {
        "n": n,
        "strata": {
            "lagrangian": (0, lag_points.shape[0]),
            "cone": (lag_points.shape[0], points.shape[0]),
        },
        "generators": cone.k,
        "samples_per_stratum": m,
        "psi_applied": psi_applied,
        "verified_tol": verify_tol,
    }
    fill = _nearest_neighbor_fill(points)
    return SampledSet(n, points, meta, fill)


# ---------------------------------------------------------------------------
# point-cloud I/O (binary: int64 n, int64 count, then float64 coordinate-major)


def save_pointcloud(path, sampled: SampledSet) -> None:
    path = Path(path)
    with open(path, "wb") as fh:
        np.array([sampled.n, sampled.count], dtype="<i8").tofile(fh)
        np.ascontiguousarray(sampled.points.T, dtype="<f8").tofile(fh)


def load_pointcloud(path) -> SampledSet:
    path = Path(path)
    with open(path, "rb") as fh:
        header = np.fromfile(fh, dtype="<i8", count=2)
        if header.size != 2 or header[0] < 1 or header[1] < 1:
            raise ValueError("malformed point-cloud header")
        n, count = int(header[0]), int(header[1])
        body = np.fromfile(fh, dtype="<f8", count=2 * n * count)
    if body.size != 2 * n * count:
        raise ValueError("truncated point-cloud body")
    points = body.reshape(2 * n, count).T.copy()
    meta = {"n": n, "strata": {"all": (0, count)}, "source": str(path)}
    return SampledSet(n, points, meta, _nearest_neighbor_fill(points))


def pointcloud_csv(sampled: SampledSet) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow([f"q{j+1}" for j in range(sampled.n)]
                    + [f"p{j+1}" for j in range(sampled.n)])
    for row in sampled.points:
        writer.writerow([repr(v) for v in row])
    return buf.getvalue()
