"""Action spectra of the shipped factor families and their products.

Every factor family here (phase-sphere Lagrangian, odd sphere, Lagrangian
torus) has a cyclic area spectrum c*Z, so spectra are stored by their
generator rather than as point sets.  Minkowski sums of cyclic groups reduce
to a gcd over the reals, computed by continued-fraction rational recovery;
incommensurable pairs yield the dense subgroup, encoded as generator 0 with
a non-exact flag (the supremum defining the gcd runs over an empty set).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import List, NamedTuple, Optional

import numpy as np

from .core import DEFAULT_SAMPLES, Loop, complex_to_real, liouville_integral
from .lagrangian import PhaseSphereLagrangian

DEFAULT_GCD_DEPTH = 64
DEFAULT_GCD_TOL = 1e-9


@dataclass(frozen=True)
class ActionSpectrum:
    """Cyclic area spectrum generator * Z.

    generator = 0 encodes the trivial spectrum {0} when exact, or a dense
    subgroup (incommensurable product) when not; in either case the minimal
    positive element is +inf by the inf-of-empty-set convention, though for
    dense products the smallest positive element found in a finite
    enumeration window is reported separately.
    """

    generator: float
    provenance: str = ""
    exact: bool = True
    window_min_positive: Optional[float] = None

    def __post_init__(self):
        if self.generator < 0:
            raise ValueError("spectrum generator must be nonnegative")

    @property
    def min_positive(self) -> float:
        return self.generator if self.generator > 0 else math.inf

    def values(self, kmax: int) -> np.ndarray:
        """The elements k*generator for |k| <= kmax."""
        return self.generator * np.arange(-kmax, kmax + 1)


def ap_spectrum(scale: float, n: int) -> ActionSpectrum:
    """Spectrum (pi/2) scale^2 * Z of the scaled phase-sphere Lagrangian.

    Needs n >= 2: for n = 1 the set degenerates to a pair of circles and the
    half-turn loop is no longer available.
    """
    if n < 2:
        raise ValueError("phase-sphere spectrum requires n >= 2")
    if scale <= 0:
        raise ValueError("scale must be positive")
    return ActionSpectrum(0.5 * np.pi * scale * scale, "AP-Lagrangian")


def sphere_spectrum(radius: float) -> ActionSpectrum:
    """Spectrum pi r^2 * Z of an odd sphere of that radius (Hopf-circle leaves)."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    return ActionSpectrum(np.pi * radius * radius, "sphere")


def torus_spectrum(radius: float) -> ActionSpectrum:
    """Spectrum pi r^2 * Z of the square Lagrangian torus of that radius."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    return ActionSpectrum(np.pi * radius * radius, "torus")


def real_gcd(a: float, b: float, depth: int = DEFAULT_GCD_DEPTH,
             tol: float = DEFAULT_GCD_TOL) -> float:
    """Largest c with a, b both in c*Z, or 0 if none is recoverable.

    The ratio a/b is matched against rationals of denominator <= depth via
    continued fractions; a hit p/q certifies a = p c, b = q c with c = b/q.
    A miss (within tol on the ratio) returns 0 -- the sup over an empty set
    -- without claiming the inputs are genuinely incommensurable.
    """
    if a <= 0 or b <= 0:
        raise ValueError("real_gcd needs strictly positive inputs")
    ratio = a / b
    frac = Fraction(ratio).limit_denominator(depth)
    if frac.numerator == 0 or abs(ratio - float(frac)) > tol:
        return 0.0
    return b / frac.denominator


def product_spectrum(s: ActionSpectrum, s2: ActionSpectrum,
                     window: int = DEFAULT_GCD_DEPTH) -> ActionSpectrum:
    """Minkowski sum of two cyclic spectra.

    Commensurable generators combine to their real gcd.  When the gcd search
    is exhausted the sum is dense: the result carries generator 0, a
    non-exact flag, and the smallest positive combination k c + k' c' found
    with |k|, |k'| <= window as a reported (not certified) minimum.
    """
    exact = s.exact and s2.exact
    if s.generator == 0 or s2.generator == 0:
        g = max(s.generator, s2.generator)
        return ActionSpectrum(g, "product", exact)
    g = real_gcd(s.generator, s2.generator)
    if g > 0:
        return ActionSpectrum(g, "product", exact)
    k = np.arange(-window, window + 1)
    combos = (k[:, None] * s.generator + k[None, :] * s2.generator).ravel()
    positive = combos[combos > DEFAULT_GCD_TOL]
    wmin = float(positive.min()) if positive.size else None
    return ActionSpectrum(0.0, "product", False, wmin)


# ---------------------------------------------------------------------------
# coisotropic products


@dataclass(frozen=True)
class CoisoProductSpec:
    """Product of a scaled phase-sphere Lagrangian with an odd sphere.

    The Lagrangian factor (scale r) fills C^m with m = 2n - d - 1, the
    sphere of radius r' is the unit-norm set of C^{d-n+1}; the product is a
    d-dimensional coisotropic submanifold of C^n whose leaves combine the
    phase circle with the Hopf circles of the sphere factor.
    """

    lagrangian_scale: float
    sphere_radius: float
    ambient_half_dim: int
    coisotropic_dim: int

    def __post_init__(self):
        n, d = self.ambient_half_dim, self.coisotropic_dim
        if self.lagrangian_scale <= 0 or self.sphere_radius <= 0:
            raise ValueError("factor sizes must be positive")
        if not n <= d <= 2 * n - 3:
            raise ValueError("need n <= d <= 2n - 3 for the product to fit")
        if self.lagrangian_half_dim < 2:
            raise ValueError("Lagrangian factor needs half-dimension >= 2")

    @property
    def lagrangian_half_dim(self) -> int:
        return 2 * self.ambient_half_dim - self.coisotropic_dim - 1

    @property
    def sphere_dim(self) -> int:
        return 2 * (self.coisotropic_dim - self.ambient_half_dim) + 1

    @property
    def contained_in_unit_ball(self) -> bool:
        """Every product point has norm sqrt(scale^2 + radius^2)."""
        return self.lagrangian_scale ** 2 + self.sphere_radius ** 2 < 1.0

    @classmethod
    def balanced(cls, n: int, d: int, r: float) -> "CoisoProductSpec":
        """The r-parametrized family with scale sqrt(2/3) r, radius sqrt(1/3) r.

        This split makes the two factor generators coincide (both pi r^2/3),
        which is exactly the gcd-maximizing choice under scale^2 + radius^2
        = r^2.
        """
        return cls(math.sqrt(2.0 / 3.0) * r, math.sqrt(1.0 / 3.0) * r, n, d)


def coiso_product_area(spec: CoisoProductSpec, depth: int = DEFAULT_GCD_DEPTH,
                       tol: float = DEFAULT_GCD_TOL) -> float:
    """Minimal leaf-disc area pi * gcd(scale^2 / 2, radius^2) of the product."""
    return np.pi * real_gcd(0.5 * spec.lagrangian_scale ** 2,
                            spec.sphere_radius ** 2, depth, tol)


class BestSplit(NamedTuple):
    r_squared: float
    r_prime_squared: float
    value: float


def optimal_split(c: float, resolution: int = 10_000) -> BestSplit:
    """Maximize the product area over splits r^2 + r'^2 = c on a rational grid.

    The sweep runs r^2 = (k/K) c with K the resolution rounded up to a
    multiple of 6, so the analytic optimum at r^2 = 2c/3 (where the two
    factor generators coincide, giving value c pi / 3) sits exactly on the
    grid; the gcd depth is widened to 2K so every grid ratio is resolved
    exactly and the sweep scores the true objective at each cell.
    """
    if not 0 < c < 1:
        raise ValueError("need 0 < c < 1")
    if resolution < 6:
        raise ValueError("resolution too small to sweep")
    K = 6 * math.ceil(resolution / 6)
    best = BestSplit(0.0, 0.0, -1.0)
    for k in range(1, K):
        r_sq = (k / K) * c
        rp_sq = c - r_sq
        value = np.pi * real_gcd(0.5 * r_sq, rp_sq, depth=2 * K)
        if value > best.value:
            best = BestSplit(r_sq, rp_sq, value)
    return best


# ---------------------------------------------------------------------------
# quadrature oracles for the factor generators


def hopf_circle_loop(radius: float, half_dim: int = 1,
                     samples: int = DEFAULT_SAMPLES) -> Loop:
    """One closed characteristic of the radius sphere: a complex-line circle."""

    def ev(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        z = np.zeros((t.size, half_dim), dtype=complex)
        z[:, 0] = radius * np.exp(2j * np.pi * t)
        return complex_to_real(z)

    def dv(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        z = np.zeros((t.size, half_dim), dtype=complex)
        z[:, 0] = 2j * np.pi * radius * np.exp(2j * np.pi * t)
        return complex_to_real(z)

    return Loop(half_dim, ev, samples, dv)


def torus_factor_loop(radius: float, samples: int = DEFAULT_SAMPLES) -> Loop:
    """One S^1 factor of the square torus r T^2 in C^2, the other angle frozen."""

    def ev(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        z = np.empty((t.size, 2), dtype=complex)
        z[:, 0] = radius * np.exp(2j * np.pi * t)
        z[:, 1] = radius
        return complex_to_real(z)

    def dv(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        z = np.zeros((t.size, 2), dtype=complex)
        z[:, 0] = 2j * np.pi * radius * np.exp(2j * np.pi * t)
        return complex_to_real(z)

    return Loop(2, ev, samples, dv)


# ---------------------------------------------------------------------------
# the capacity ledger


@dataclass(frozen=True)
class LedgerRow:
    n: int
    d: int
    lower: float
    lower_provenance: str
    upper: float
    upper_provenance: str
    certified_value: Optional[float] = None
    certified_r: Optional[float] = None


def _certify_lagrangian_bound(n: int, r: float) -> float:
    """Quadrature area of the half-turn loop on the scale-r model; must hit (pi/2) r^2."""
    model = PhaseSphereLagrangian(n, r)
    area = liouville_integral(model.half_turn_loop())
    expected = 0.5 * np.pi * r * r
    if abs(area - expected) > 1e-9:
        raise RuntimeError(
            f"ledger certification failed: quadrature {area!r} vs analytic {expected!r}")
    return area


def _certify_coiso_bound(n: int, d: int, r: float) -> float:
    """Product generator from quadrature-computed factor generators at size r.

    Both factor loops are integrated numerically (half-turn loop of the
    sqrt(2/3) r Lagrangian, Hopf circle of the sqrt(1/3) r sphere) and fed
    through the gcd; the balanced split makes both come out at pi r^2 / 3.
    """
    spec = CoisoProductSpec.balanced(n, d, r)
    lag = PhaseSphereLagrangian(spec.lagrangian_half_dim, spec.lagrangian_scale)
    g_lag = liouville_integral(lag.half_turn_loop())
    g_sph = liouville_integral(
        hopf_circle_loop(spec.sphere_radius, (spec.sphere_dim + 1) // 2))
    value = real_gcd(g_lag, g_sph)
    expected = np.pi * r * r / 3.0
    if abs(value - expected) > 1e-9:
        raise RuntimeError(
            f"ledger certification failed: gcd {value!r} vs analytic {expected!r}")
    return value


def capacity_ledger(n: int, certify_r: float = 0.99) -> List[LedgerRow]:
    """Best known bounds on the d-coisotropic capacity of the unit ball.

    For each d in {n, ..., 2n-1} the lower bound is the best one our
    constructions produce -- pi/2 at d = n from the scaled Lagrangian family,
    pi/3 for n+1 <= d <= 2n-3 from balanced coisotropic products -- with the
    open-limit bound certified by an actual spectrum computation at size
    certify_r; the remaining rows (d = 2n-2 at pi/2, d = 2n-1 at pi) and all
    upper bounds (pi, from the cylinder) are carried as cited constants.
    """
    if n < 2:
        raise ValueError("ledger needs n >= 2")
    if not 0 < certify_r < 1:
        raise ValueError("certification size must lie in (0, 1)")
    rows: List[LedgerRow] = []
    for d in range(n, 2 * n):
        candidates = []  # (lower, provenance, certified value)
        if d == n:
            candidates.append(
                (0.5 * np.pi, "computed", _certify_lagrangian_bound(n, certify_r)))
        if n + 1 <= d <= 2 * n - 3:
            candidates.append(
                (np.pi / 3.0, "computed", _certify_coiso_bound(n, d, certify_r)))
        if d == 2 * n - 2:
            candidates.append((0.5 * np.pi, "cited", None))
        if d == 2 * n - 1:
            candidates.append((np.pi, "cited", None))
        lower, prov, cert = max(candidates,
                                key=lambda row: (row[0], row[1] == "computed"))
        rows.append(LedgerRow(n, d, lower, prov, np.pi, "cited",
                              cert, certify_r if cert is not None else None))
    return rows


def ledger_to_csv(rows: List[LedgerRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["n", "d", "lower", "lower-provenance", "upper", "upper-provenance"])
    for row in rows:
        writer.writerow([row.n, row.d, repr(row.lower), row.lower_provenance,
                         repr(row.upper), row.upper_provenance])
    return buf.getvalue()


def ledger_to_json(rows: List[LedgerRow]) -> str:
    return json.dumps([asdict(row) for row in rows], indent=2, sort_keys=True)
