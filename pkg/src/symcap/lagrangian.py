"""The circle-times-sphere Lagrangian family and its loop lifts.

The base model is L = {e^{i phi} q : phi in R, q in S^{n-1}} inside C^n.
Scaled and unitarily rotated copies are part of the model; the distinguished
variant used downstream is the sqrt(2)-scaled copy rotated so that every
point w satisfies the pairing w_{n+1-j} = conj(w_j), which traps each
coordinate except the middle one inside the closed unit disc.

Loops on a model lift to a phase function phi and a sphere path q with
x(t) = scale * rotation(e^{i phi(t)} q(t)); the loop area then depends only
on the phase increment, int x*alpha = (phi(1) - phi(0)) / 2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .core import (
    DEFAULT_SAMPLES,
    Loop,
    PhasePoint,
    complex_to_real,
    real_to_complex,
    smooth_bump,
    smooth_step,
    smooth_step_derivative,
)

STEP_EDGE = 0.1  # smooth steps/bumps are flat outside (STEP_EDGE, 1 - STEP_EDGE)


def _as_complex_points(x) -> np.ndarray:
    if isinstance(x, PhasePoint):
        return x.z[None, :]
    x = np.asarray(x)
    if np.iscomplexobj(x):
        return np.atleast_2d(x)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return real_to_complex(x)


@dataclass
class PhaseSphereLagrangian:
    """A scaled, unitarily rotated copy of {e^{i phi} q : q in S^{n-1}}."""

    n: int
    scale: float = 1.0
    rotation: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("the model needs n >= 2 (n = 1 degenerates to a circle)")
        if self.scale <= 0:
            raise ValueError("scale must be positive")
        if self.rotation is None:
            self.rotation = np.eye(self.n, dtype=complex)
        else:
            self.rotation = np.asarray(self.rotation, dtype=complex)
            if self.rotation.shape != (self.n, self.n):
                raise ValueError("rotation must be an n x n complex matrix")
            defect = np.abs(self.rotation.conj().T @ self.rotation - np.eye(self.n)).max()
            if defect > 1e-10:
                raise ValueError(f"rotation is not unitary (defect {defect:.2e})")

    # -- points ------------------------------------------------------------

    def sample(self, phi: float, q: np.ndarray) -> PhasePoint:
        """Point scale * rotation(e^{i phi} q) for a unit vector q."""
        q = np.asarray(q, dtype=float)
        if q.shape != (self.n,) or abs(np.linalg.norm(q) - 1.0) > 1e-9:
            raise ValueError("q must be a unit vector in R^n")
        z = self.scale * (self.rotation @ (np.exp(1j * phi) * q))
        return PhasePoint.from_complex(z)

    def sample_many(self, phis: np.ndarray, qs: np.ndarray) -> np.ndarray:
        """Vectorized sampling: (M,) phases and (M, n) unit vectors -> (M, 2n)."""
        phis = np.asarray(phis, dtype=float)
        qs = np.asarray(qs, dtype=float)
        z = np.exp(1j * phis)[:, None] * qs
        w = self.scale * (z @ self.rotation.T)
        return complex_to_real(w)

    def membership(self, x, tol: float) -> bool:
        """True iff rotation^{-1}(x / scale) lies on the base model within tol.

        The base-model test is ||z|| = 1 together with |sum_j z_j^2| = 1; the
        second condition forces all z_j^2 onto a common phase ray, i.e.
        z = e^{i phi} q with q real.
        """
        z = _as_complex_points(x) @ self.rotation.conj() / self.scale
        norms = np.linalg.norm(z, axis=1)
        squares = np.abs(np.sum(z * z, axis=1))
        ok = (np.abs(norms - 1.0) <= tol) & (np.abs(squares - 1.0) <= tol)
        return bool(np.all(ok))

    # -- distinguished loops ------------------------------------------------

    def _lifted_loop(self, phi_fn, q_fn, dphi_fn=None, dq_fn=None,
                     samples: int = DEFAULT_SAMPLES) -> Loop:
        """Loop t -> scale * rotation(e^{i phi(t)} q(t)) with optional derivative."""
        R = self.rotation
        s = self.scale

        def ev(t):
            t = np.atleast_1d(np.asarray(t, dtype=float))
            z = np.exp(1j * phi_fn(t))[:, None] * q_fn(t)
            return complex_to_real(s * (z @ R.T))

        dv = None
        if dphi_fn is not None and dq_fn is not None:
            def dv(t):
                t = np.atleast_1d(np.asarray(t, dtype=float))
                e = np.exp(1j * phi_fn(t))[:, None]
                z = e * (1j * dphi_fn(t)[:, None] * q_fn(t) + dq_fn(t))
                return complex_to_real(s * (z @ R.T))

        return Loop(self.n, ev, samples, dv)

    def half_turn_loop(self, samples: int = DEFAULT_SAMPLES) -> Loop:
        """Phase advances by pi while q crosses to the antipode; area pi/2 * scale^2.

        The sphere path runs along the great circle through q0 = e_1 and
        q1 = e_2, reparametrized by a smooth step so it is constant near the
        ends; the loop closes because e^{i pi}(-q0) = q0.
        """
        q0, q1 = np.eye(self.n)[0], np.eye(self.n)[1]

        def phi(t):
            return np.pi * t

        def dphi(t):
            return np.pi * np.ones_like(t)

        def qp(t):
            s = np.pi * smooth_step(t, STEP_EDGE, 1.0 - STEP_EDGE)
            return np.cos(s)[:, None] * q0 + np.sin(s)[:, None] * q1

        def dqp(t):
            s = np.pi * smooth_step(t, STEP_EDGE, 1.0 - STEP_EDGE)
            ds = np.pi * smooth_step_derivative(t, STEP_EDGE, 1.0 - STEP_EDGE)
            return ds[:, None] * (-np.sin(s)[:, None] * q0 + np.cos(s)[:, None] * q1)

        return self._lifted_loop(phi, qp, dphi, dqp, samples)

    def sphere_loop(self, samples: int = DEFAULT_SAMPLES) -> Loop:
        """Great circle in the sphere factor at frozen phase; area 0."""
        q0, q1 = np.eye(self.n)[0], np.eye(self.n)[1]

        def phi(t):
            return np.zeros_like(t)

        def dphi(t):
            return np.zeros_like(t)

        def qp(t):
            a = 2.0 * np.pi * t
            return np.cos(a)[:, None] * q0 + np.sin(a)[:, None] * q1

        def dqp(t):
            a = 2.0 * np.pi * t
            return 2.0 * np.pi * (-np.sin(a)[:, None] * q0 + np.cos(a)[:, None] * q1)

        return self._lifted_loop(phi, qp, dphi, dqp, samples)

    def full_turn_loop(self, samples: int = DEFAULT_SAMPLES) -> Loop:
        """Full phase rotation over a frozen q0; area pi * scale^2."""
        q0 = np.eye(self.n)[0]

        def phi(t):
            return 2.0 * np.pi * t

        def dphi(t):
            return 2.0 * np.pi * np.ones_like(t)

        def qp(t):
            return np.repeat(q0[None, :], t.size, axis=0)

        def dqp(t):
            return np.zeros((t.size, self.n))

        return self._lifted_loop(phi, qp, dphi, dqp, samples)

    def generator_loops(self, samples: int = DEFAULT_SAMPLES) -> List[Loop]:
        """Default generating set for the area spectrum.

        The half-turn loop generates (pi/2) scale^2 Z on its own once the
        sphere factor is simply connected (n >= 3); for n = 2 the sphere
        factor is a circle, so its great-circle loop is kept as a second,
        area-zero generator.
        """
        loops = [self.half_turn_loop(samples)]
        if self.n == 2:
            loops.append(self.sphere_loop(samples))
        return loops


# ---------------------------------------------------------------------------
# the conjugate-symmetric variant


def conjugate_pairing_unitary(n: int) -> np.ndarray:
    """Unitary U with U(R^n) = {w in C^n : w_{n+1-j} = conj(w_j)}.

    For each index pair (j, n+1-j) the columns are (e_j + e_{n+1-j})/sqrt(2)
    and i(e_j - e_{n+1-j})/sqrt(2); for odd n the middle column is the plain
    middle basis vector.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    U = np.zeros((n, n), dtype=complex)
    for j in range(n // 2):
        k = n - 1 - j
        U[j, j] = 1.0 / np.sqrt(2.0)
        U[k, j] = 1.0 / np.sqrt(2.0)
        U[j, k] = 1j / np.sqrt(2.0)
        U[k, k] = -1j / np.sqrt(2.0)
    if n % 2:
        m = n // 2
        U[m, m] = 1.0
    return U


def conjugate_symmetric_model(n: int) -> PhaseSphereLagrangian:
    """The sqrt(2)-scaled copy rotated into conjugate-paired coordinates.

    Its points are sqrt(2) e^{i phi} w with w a unit vector obeying
    w_{n+1-j} = conj(w_j), so 2|w_j|^2 = |w_j|^2 + |w_{n+1-j}|^2 <= 1 puts
    every coordinate except the middle one (odd n) inside the unit disc,
    while the whole set sits on the sphere of radius sqrt(2).
    """
    return PhaseSphereLagrangian(n, np.sqrt(2.0), conjugate_pairing_unitary(n))


def middle_coordinate_order(n: int) -> np.ndarray:
    """Complex-coordinate permutation moving the middle coordinate last (odd n)."""
    if n % 2 == 0:
        raise ValueError("the permutation is only defined for odd n")
    k = n // 2
    return np.array(list(range(k)) + list(range(k + 1, n)) + [k])


def permute_middle_coordinate(x, n: int):
    """Apply the middle-to-last complex coordinate swap to points of R^{2n}.

    Accepts a PhasePoint or an (..., 2n) array; permuting complex coordinates
    is a unitary, hence symplectic, change of frame.
    """
    order = middle_coordinate_order(n)
    if isinstance(x, PhasePoint):
        return PhasePoint(n, np.concatenate([x.q[order], x.p[order]]))
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 2 * n:
        raise ValueError("point dimension does not match n")
    return np.concatenate([x[..., order], x[..., n:][..., order]], axis=-1)


# ---------------------------------------------------------------------------
# lifting loops through the covering (phi, q) -> e^{i phi} q


@dataclass
class LoopLift:
    """Continuous phase/sphere factorization of a loop on the model."""

    model: PhaseSphereLagrangian
    grid: np.ndarray
    phi_values: np.ndarray
    q_values: np.ndarray
    winding: int
    _phi_spline: CubicSpline = field(init=False, repr=False)
    _q_spline: CubicSpline = field(init=False, repr=False)

    def __post_init__(self):
        self._phi_spline = CubicSpline(self.grid, self.phi_values)
        self._q_spline = CubicSpline(self.grid, self.q_values)

    def phi(self, t):
        return self._phi_spline(np.asarray(t, dtype=float))

    def q(self, t):
        """Sphere path, renormalized after interpolation."""
        v = self._q_spline(np.asarray(t, dtype=float))
        return v / np.linalg.norm(v, axis=-1, keepdims=True)

    def reconstruct(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        z = np.exp(1j * self.phi(t))[:, None] * self.q(t)
        w = self.model.scale * (z @ self.model.rotation.T)
        return complex_to_real(w)


def lift(model: PhaseSphereLagrangian, loop: Loop, tol: float = 1e-6) -> LoopLift:
    """Factor a loop on the model through the phase covering.

    The bilinear square b(t) = sum_j z_j(t)^2 = e^{2 i phi(t)} recovers the
    phase up to the half-period ambiguity; unwrapping b's argument along the
    grid fixes a continuous branch and the winding number is the integer
    (phi(1) - phi(0)) / pi.

    Raises
    ------
    ValueError
        If a sample fails membership at `tol`, or the grid is too coarse to
        unwrap (a phase jump above pi/2 between adjacent samples), or the
        residual imaginary part of e^{-i phi} z exceeds 1e-6.
    """
    if not model.membership(loop.points, tol):
        raise ValueError("loop samples do not lie on the model within tol")
    Z = real_to_complex(loop.points) @ model.rotation.conj() / model.scale
    b = np.sum(Z * Z, axis=1)
    psi = np.unwrap(np.angle(b))
    phi = 0.5 * psi
    steps = np.abs(np.diff(phi))
    if steps.max() > 0.5 * np.pi * 0.999:
        raise ValueError("grid too coarse to unwrap the phase (jump > pi/2)")
    q = np.exp(-1j * phi)[:, None] * Z
    resid = float(np.abs(q.imag).max())
    if resid > 1e-6:
        raise ValueError(f"lift residual {resid:.2e}: samples stray off the model")
    total = phi[-1] - phi[0]
    winding = int(np.round(total / np.pi))
    if abs(total - winding * np.pi) > 1e-6:
        raise ValueError("phase increment is not an integer multiple of pi")
    return LoopLift(model, loop.grid, phi, q.real, winding)


# ---------------------------------------------------------------------------
# randomized loops with prescribed winding (oracle fodder)


def random_area_loop(
    model: PhaseSphereLagrangian,
    winding: int,
    rng: np.random.Generator,
    samples: int = DEFAULT_SAMPLES,
    amplitude: float = 0.35,
) -> Loop:
    """Random smooth loop on the model with a prescribed phase winding.

    The phase is winding * pi * step(t) plus a random trigonometric
    polynomial; the sphere path is a great-circle crossing (odd winding) or
    a contractible wobble (even winding), perturbed inside a bump window so
    the seam stays smooth to all orders.  Its area must come out to
    winding * pi/2 * scale^2, whatever the random detail.
    """
    n = model.n
    q0, q1 = np.eye(n)[0], np.eye(n)[1]
    a = rng.uniform(-amplitude, amplitude, size=3)
    bcoef = rng.uniform(-amplitude, amplitude, size=3)
    phi0 = rng.uniform(-np.pi, np.pi)
    pert = rng.uniform(-0.2, 0.2, size=(2, 3, n))

    def phi_fn(t):
        out = phi0 + winding * np.pi * smooth_step(t, STEP_EDGE, 1.0 - STEP_EDGE)
        for m in range(3):
            out = out + a[m] * np.sin(2 * np.pi * (m + 1) * t)
            out = out + bcoef[m] * (np.cos(2 * np.pi * (m + 1) * t) - 1.0)
        return out

    def q_fn(t):
        if winding % 2:
            s = np.pi * smooth_step(t, STEP_EDGE, 1.0 - STEP_EDGE)
            base = np.cos(s)[:, None] * q0 + np.sin(s)[:, None] * q1
        else:
            base = np.repeat(q0[None, :], t.size, axis=0)
        wob = np.zeros((t.size, n))
        for m in range(3):
            wob += np.outer(np.cos(2 * np.pi * (m + 1) * t), pert[0, m])
            wob += np.outer(np.sin(2 * np.pi * (m + 1) * t), pert[1, m])
        v = base + smooth_bump(t, 0.05, 0.95)[:, None] * wob
        return v / np.linalg.norm(v, axis=1, keepdims=True)

    R, s = model.rotation, model.scale

    def ev(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        z = np.exp(1j * phi_fn(t))[:, None] * q_fn(t)
        return complex_to_real(s * (z @ R.T))

    return Loop(n, ev, samples)
