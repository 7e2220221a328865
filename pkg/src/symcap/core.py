"""Core symplectic primitives.

Coordinates on R^{2n} are ordered (q_1, ..., q_n, p_1, ..., p_n) and the
complex identification is z_j = q_j + i p_j.  The standard symplectic form
is w0(u, v) = sum_j (u_qj v_pj - u_pj v_qj) and the Liouville primitive used
for loop areas is alpha = sum_j q_j dp_j.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

DEFAULT_SAMPLES = 2048
QUAD_TOL = 1e-8


# ---------------------------------------------------------------------------
# smooth cutoffs shared across the package


def _exp_ramp(u):
    """exp(-1/u) for u > 0, exactly 0 for u <= 0 (C-infinity)."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    pos = u > 0
    out[pos] = np.exp(-1.0 / u[pos])
    return out


def smooth_step(u, lo: float = 0.0, hi: float = 1.0):
    """C-infinity step: exactly 0 for u <= lo, exactly 1 for u >= hi.

    Uses f(s)/(f(s)+f(1-s)) with f(s) = exp(-1/s), which is monotone on
    [lo, hi] and flat to all orders at both ends.  Vectorized.
    """
    if hi <= lo:
        raise ValueError("smooth_step needs hi > lo")
    s = (np.asarray(u, dtype=float) - lo) / (hi - lo)
    a = _exp_ramp(s)
    b = _exp_ramp(1.0 - s)
    return a / (a + b)


def smooth_step_derivative(u, lo: float = 0.0, hi: float = 1.0):
    """Derivative of smooth_step with respect to u (closed form)."""
    s = (np.asarray(u, dtype=float) - lo) / (hi - lo)
    a = _exp_ramp(s)
    b = _exp_ramp(1.0 - s)
    inside = (s > 0) & (s < 1)
    out = np.zeros_like(s)
    # d/ds exp(-1/s) = exp(-1/s)/s^2
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        da = np.where(inside, a / np.maximum(s, 1e-300) ** 2, 0.0)
        db = np.where(inside, -b / np.maximum(1.0 - s, 1e-300) ** 2, 0.0)
    denom = (a + b) ** 2
    out[inside] = ((da * b - a * db)[inside]) / denom[inside]
    return out / (hi - lo)


def smooth_bump(u, lo: float = 0.0, hi: float = 1.0):
    """C-infinity bump supported exactly on (lo, hi), peak value 1 at midpoint."""
    if hi <= lo:
        raise ValueError("smooth_bump needs hi > lo")
    s = (np.asarray(u, dtype=float) - lo) / (hi - lo)
    out = np.zeros_like(s)
    inside = (s > 0) & (s < 1)
    si = s[inside]
    # normalized so the peak (s = 1/2, exponent -4) has value 1
    out[inside] = np.exp(4.0 - 1.0 / (si * (1.0 - si)))
    return out


# ---------------------------------------------------------------------------
# points, loops, model regions


@dataclass
class PhasePoint:
    """A point of (R^{2n}, w0) with coordinates (q_1..q_n, p_1..p_n)."""

    n: int
    coords: np.ndarray

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=float)
        if self.coords.shape != (2 * self.n,):
            raise ValueError(
                f"expected {2 * self.n} coordinates, got shape {self.coords.shape}"
            )

    @property
    def q(self) -> np.ndarray:
        return self.coords[: self.n]

    @property
    def p(self) -> np.ndarray:
        return self.coords[self.n :]

    @property
    def z(self) -> np.ndarray:
        """Complex view z_j = q_j + i p_j (lossless)."""
        return self.q + 1j * self.p

    @classmethod
    def from_complex(cls, z: np.ndarray) -> "PhasePoint":
        z = np.asarray(z, dtype=complex)
        return cls(z.size, np.concatenate([z.real, z.imag]))

    def norm(self) -> float:
        return float(np.linalg.norm(self.coords))


def complex_to_real(z: np.ndarray) -> np.ndarray:
    """(..., n) complex -> (..., 2n) real in (q, p) ordering."""
    z = np.asarray(z, dtype=complex)
    return np.concatenate([z.real, z.imag], axis=-1)


def real_to_complex(x: np.ndarray) -> np.ndarray:
    """(..., 2n) real -> (..., n) complex."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1] // 2
    if x.shape[-1] != 2 * n:
        raise ValueError("odd number of real coordinates")
    return x[..., :n] + 1j * x[..., n:]


@dataclass
class Loop:
    """Smooth closed curve [0,1] -> R^{2n} with a uniform sample grid.

    Parameters
    ----------
    n : int
        Half the ambient dimension.
    eval_fn : callable
        Vectorized map from a parameter array of shape (M,) to points of
        shape (M, 2n).  Must satisfy eval_fn(0) == eval_fn(1).
    samples : int
        Number of grid intervals (even, so composite Simpson applies).
    deriv_fn : callable, optional
        Analytic derivative with the same vectorized signature.  When absent,
        fourth order periodic central differences on the grid are used.
    """

    n: int
    eval_fn: Callable[[np.ndarray], np.ndarray]
    samples: int = DEFAULT_SAMPLES
    deriv_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    grid: np.ndarray = field(init=False, repr=False)
    points: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.samples < 8 or self.samples % 2:
            raise ValueError("samples must be an even integer >= 8")
        self.grid = np.linspace(0.0, 1.0, self.samples + 1)
        self.points = np.asarray(self.eval_fn(self.grid), dtype=float)
        if self.points.shape != (self.samples + 1, 2 * self.n):
            raise ValueError(
                f"eval_fn returned shape {self.points.shape}, expected "
                f"{(self.samples + 1, 2 * self.n)}"
            )
        if not np.all(np.isfinite(self.points)):
            raise ValueError("loop samples contain non-finite values")
        gap = float(np.linalg.norm(self.points[0] - self.points[-1]))
        if gap > 1e-9:
            raise ValueError(f"loop is not closed: ||x(0) - x(1)|| = {gap:.3e}")

    def scaled(self, c: float) -> "Loop":
        return Loop(
            self.n,
            lambda t, f=self.eval_fn: c * f(t),
            self.samples,
            None if self.deriv_fn is None else (lambda t, d=self.deriv_fn: c * d(t)),
        )

    def transformed(self, A: np.ndarray) -> "Loop":
        """Image loop under a linear map of R^{2n}."""
        A = np.asarray(A, dtype=float)
        return Loop(
            self.n,
            lambda t, f=self.eval_fn: f(t) @ A.T,
            self.samples,
            None if self.deriv_fn is None else (lambda t, d=self.deriv_fn: d(t) @ A.T),
        )


@dataclass(frozen=True)
class BallSpec:
    """Round ball B^{2n}(a) described by its capacity a = pi r^2."""

    capacity: float

    def __post_init__(self):
        if self.capacity <= 0:
            raise ValueError("capacity must be positive")

    @property
    def radius(self) -> float:
        return float(np.sqrt(self.capacity / np.pi))


@dataclass(frozen=True)
class CylinderSpec:
    """Symplectic cylinder Z^{2n}(a) = B^2(a) x R^{2n-2} over the (q1,p1) plane."""

    capacity: float

    def __post_init__(self):
        if self.capacity <= 0:
            raise ValueError("capacity must be positive")

    @property
    def radius(self) -> float:
        return float(np.sqrt(self.capacity / np.pi))


@dataclass(frozen=True)
class PolydiscSpec:
    """Product of discs/planes: |z_j| <= radii[j], None meaning an unbounded factor."""

    radii: tuple

    def __post_init__(self):
        for r in self.radii:
            if r is not None and r <= 0:
                raise ValueError("disc radii must be positive (or None)")

    @classmethod
    def unit_with_free_last(cls, n: int) -> "PolydiscSpec":
        """Unit discs in the first n-1 coordinates, unbounded last factor."""
        return cls(tuple([1.0] * (n - 1) + [None]))

    @classmethod
    def unit(cls, n: int) -> "PolydiscSpec":
        return cls(tuple([1.0] * n))


# ---------------------------------------------------------------------------
# the symplectic form and loop quadrature


def standard_form_matrix(n: int) -> np.ndarray:
    """Matrix J with w0(u, v) = u^T J v in (q, p) ordering."""
    J = np.zeros((2 * n, 2 * n))
    J[:n, n:] = np.eye(n)
    J[n:, :n] = -np.eye(n)
    return J


def omega0(u, v) -> float:
    """Evaluate the standard symplectic form on a pair of tangent vectors.

    Parameters
    ----------
    u, v : array_like or PhasePoint
        Vectors of equal even length (q_1..q_n, p_1..p_n).

    Returns
    -------
    float
        sum_j (u_qj v_pj - u_pj v_qj).
    """
    if isinstance(u, PhasePoint):
        u = u.coords
    if isinstance(v, PhasePoint):
        v = v.coords
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape or u.ndim != 1 or u.size % 2:
        raise ValueError("omega0 expects two equal-length even-dimensional vectors")
    n = u.size // 2
    return float(u[:n] @ v[n:] - u[n:] @ v[:n])


def _simpson_weights(m: int) -> np.ndarray:
    if m % 2:
        raise ValueError("composite Simpson needs an even interval count")
    w = np.ones(m + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w / 3.0


def _periodic_derivative(values: np.ndarray, h: float) -> np.ndarray:
    """Fourth order central differences of periodic samples (first == last)."""
    v = values[:-1]
    d = (
        -np.roll(v, -2, axis=0)
        + 8.0 * np.roll(v, -1, axis=0)
        - 8.0 * np.roll(v, 1, axis=0)
        + np.roll(v, 2, axis=0)
    ) / (12.0 * h)
    return np.vstack([d, d[:1]])


def liouville_integral(loop: Loop) -> float:
    """Area of a loop against the Liouville primitive, int_0^1 q . p' dt.

    Composite Simpson on the loop's uniform grid.  The integrand derivative
    comes from the loop's analytic derivative when present, otherwise from
    fourth order periodic central differences, so both paths converge at
    order four or better on smooth loops.

    Returns
    -------
    float
        The enclosed symplectic area (for contractible loops this equals the
        disc integral of w0 by Stokes).
    """
    m = loop.samples
    h = 1.0 / m
    pts = loop.points
    if loop.deriv_fn is not None:
        dots = np.asarray(loop.deriv_fn(loop.grid), dtype=float)
        if dots.shape != pts.shape:
            raise ValueError("derivative callable returned a mismatched shape")
    else:
        dots = _periodic_derivative(pts, h)
    n = loop.n
    integrand = np.sum(pts[:, :n] * dots[:, n:], axis=1)
    w = _simpson_weights(m)
    return float(h * (w @ integrand))


def symplecticity_defect(map_fn, probes: np.ndarray, h: float = 1e-5) -> float:
    """Largest Frobenius deviation of D(phi)^T J D(phi) from J over probe points.

    map_fn must be vectorized: (N, 2n) -> (N, 2n).  The Jacobian is formed by
    central differences with step h, so the result floors around h^2 for exact
    symplectomorphisms.
    """
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    npts, dim = probes.shape
    if dim % 2:
        raise ValueError("probe dimension must be even")
    n = dim // 2
    J = standard_form_matrix(n)
    # batch all shifted evaluations at once: 2*dim clones per probe
    shifts = np.zeros((2 * dim, dim))
    for k in range(dim):
        shifts[2 * k, k] = h
        shifts[2 * k + 1, k] = -h
    batch = (probes[:, None, :] + shifts[None, :, :]).reshape(-1, dim)
    vals = np.asarray(map_fn(batch), dtype=float).reshape(npts, 2 * dim, dim)
    if not np.all(np.isfinite(vals)):
        raise ValueError("map evaluation produced non-finite values near a probe")
    cols = (vals[:, 0::2, :] - vals[:, 1::2, :]) / (2.0 * h)  # (npts, dim, dim)
    D = np.swapaxes(cols, 1, 2)  # D[i] has d(map)/dx_k in column k
    errs = np.einsum("nij,jk,nkl->nil", np.swapaxes(D, 1, 2), J, D) - J
    return float(np.max(np.sqrt(np.sum(errs**2, axis=(1, 2)))))
