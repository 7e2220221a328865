"""Verification suites behind the ``symcap`` console entry point.

Each suite rebuilds the relevant construction from scratch, re-measures its
certificates, and emits one pass/fail check per claim.  Artifacts land in the
output directory: ``report.json`` (stable key order; the ``generated``
timestamp is the only field allowed to differ between identical runs), CSV
tables, and optional SVG plots rendered with a pinned hash salt so reruns are
byte-identical.  Wall-clock timings go to stdout only.  The process exit code
is 0 exactly when every check passed.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from .cone import (SampledSet, _nearest_neighbor_fill, assemble_union_set,
                   sample_lagrangian, save_pointcloud)
from .core import BallSpec, PolydiscSpec, complex_to_real, liouville_integral
from .embed2d import RectangleDomain, volume_embed
from .energy import (Hamiltonian, candidate_family, cylinder_energy_probe,
                     displacement_check, flow_points, linear_ramp_hamiltonian)
from .lagrangian import (PhaseSphereLagrangian, conjugate_symmetric_model,
                         lift, random_area_loop)
from .measure import box_dimension, containment
from .spectra import (ActionSpectrum, CoisoProductSpec, ap_spectrum,
                      capacity_ledger, coiso_product_area, hopf_circle_loop,
                      ledger_to_csv, optimal_split, product_spectrum,
                      real_gcd, torus_factor_loop)
from .squeeze import squeeze_pipeline


# ---------------------------------------------------------------------------
# configuration and check records


@dataclass
class RunConfig:
    """Knobs for a suite run; every resolution has a full-strength default."""

    suite: str = "all"
    n: int = 2
    out_dir: str = "symcap-out"
    seed: int = 0
    loops_per_class: int = 100
    loop_samples: int = 2048
    samples_per_stratum: Optional[int] = None
    box_levels: int = 8
    grid: int = 512
    flow_steps: int = 64
    solve_refine: int = 8
    squeeze_probes: int = 1000
    energy_m: int = 48
    cylinder_samples: int = 262_144
    cylinder_radius: float = 1.5
    plots: bool = True

    def __post_init__(self):
        known = set(SUITE_ORDER) | {"all"}
        if self.suite not in known:
            raise ValueError(f"unknown suite {self.suite!r}; "
                             f"choose from {sorted(known)}")
        if self.n < 2:
            raise ValueError("need n >= 2")
        positive = ["loops_per_class", "loop_samples", "box_levels", "grid",
                    "flow_steps", "solve_refine", "squeeze_probes",
                    "energy_m", "cylinder_samples"]
        for name in positive:
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.samples_per_stratum is not None and self.samples_per_stratum <= 0:
            raise ValueError("samples_per_stratum must be positive")
        if self.cylinder_radius <= 1.0:
            raise ValueError("cylinder_radius must exceed 1")


@dataclass
class CheckResult:
    name: str
    claim: str
    passed: bool
    observed: object
    expected: str
    detail: str = ""


def _safe(x):
    """JSON-safe scalar: finite floats stay floats, the rest become text."""
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x) if math.isfinite(float(x)) else repr(float(x))
    return str(x)


def _within(name: str, claim: str, observed: float, target: float,
            tol: float, detail: str = "") -> CheckResult:
    err = abs(float(observed) - target)
    return CheckResult(name, claim, err <= tol, float(observed),
                       f"{target!r} +/- {tol:g}", detail)


def _below(name: str, claim: str, observed: float, bound: float,
           detail: str = "") -> CheckResult:
    return CheckResult(name, claim, float(observed) <= bound, float(observed),
                       f"<= {bound:g}", detail)


def _at_least(name: str, claim: str, observed: float, bound: float,
              detail: str = "") -> CheckResult:
    return CheckResult(name, claim, float(observed) >= bound, float(observed),
                       f">= {bound:g}", detail)


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_safe(x) for x in row])


def _pyplot():
    import matplotlib
    matplotlib.use("Agg", force=True)
    matplotlib.rcParams["svg.hashsalt"] = "symcap"
    import matplotlib.pyplot as plt
    return plt


def _save_svg(fig, path: Path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    import matplotlib.pyplot as plt
    plt.close(fig)


# ---------------------------------------------------------------------------
# suites


def _suite_spectrum(cfg: RunConfig, out: Path) -> List[CheckResult]:
    """Loop actions on the phase-sphere models quantize as claimed."""
    checks = []
    model = PhaseSphereLagrangian(cfg.n, 1.0)
    half = liouville_integral(model.half_turn_loop(cfg.loop_samples))
    checks.append(_within(
        "half-turn-area", "half-turn generator loop action equals pi/2",
        half, math.pi / 2, 1e-6))

    rng = np.random.default_rng(cfg.seed)
    rows, worst, lift_ok = [], 0.0, True
    for k in range(-4, 5):
        errs = []
        loop = None
        for _ in range(cfg.loops_per_class):
            loop = random_area_loop(model, k, rng, samples=cfg.loop_samples)
            errs.append(abs(liouville_integral(loop) - k * math.pi / 2))
        lift_ok = lift_ok and lift(model, loop).winding == k
        rows.append([k, cfg.loops_per_class, max(errs)])
        worst = max(worst, max(errs))
    _write_csv(out / "winding_areas.csv",
               ["winding", "loops", "max_abs_error"], rows)
    checks.append(_below(
        "winding-quantization",
        "random loop actions lie on the lattice (pi/2) * winding",
        worst, 1e-6, f"{9 * cfg.loops_per_class} loops over windings -4..4"))
    checks.append(CheckResult(
        "winding-index", "phase-lift winding matches the prescribed class",
        lift_ok, "match" if lift_ok else "mismatch", "exact integer match"))

    scaled = conjugate_symmetric_model(cfg.n)
    area2 = liouville_integral(scaled.half_turn_loop(cfg.loop_samples))
    checks.append(_within(
        "scaled-minimal-area",
        "sqrt(2)-scaled model has minimal positive loop action pi",
        area2, math.pi, 1e-6))
    checks.append(_within(
        "scaled-generator", "scaled spectrum generator equals pi",
        ap_spectrum(math.sqrt(2.0), cfg.n).generator, math.pi, 1e-12))

    r = 0.8
    checks.append(_within(
        "hopf-circle-area",
        "closed characteristic of the radius-r sphere has action pi r^2",
        liouville_integral(hopf_circle_loop(r, cfg.n)),
        math.pi * r * r, 1e-9))
    checks.append(_within(
        "torus-factor-area", "square-torus factor loop has action pi r^2",
        liouville_integral(torus_factor_loop(r)), math.pi * r * r, 1e-9))
    return checks


def _suite_build_x(cfg: RunConfig, out: Path) -> List[CheckResult]:
    """The union set samples densely and fits in the stated regions."""
    checks = []
    X = assemble_union_set(cfg.n, cfg.samples_per_stratum)
    checks.append(_at_least(
        "sample-count", "union-set sampling produces at least 1e5 points",
        X.count, 1e5, f"fill distance {X.fill:.5f}"))

    ball = containment(X, BallSpec(2.0 * math.pi), 1e-9)
    checks.append(CheckResult(
        "ball-containment",
        "every sample lies in the closed ball of radius sqrt(2)",
        ball.passed, float(ball.max_violation), "violation <= 1e-9"))

    if cfg.n % 2 == 0:
        region, claim = PolydiscSpec.unit(cfg.n), \
            "every sample lies in the closed unit-polydisc product"
    else:
        region, claim = PolydiscSpec.unit_with_free_last(cfg.n), \
            "samples lie in the unit polydisc in the first n - 1 factors"
    poly = containment(X, region, 1e-9)
    checks.append(CheckResult(
        "polydisc-containment", claim, poly.passed,
        float(poly.max_violation), "violation <= 1e-9"))

    save_pointcloud(out / "x_points.cloud", X)
    strata = X.meta.get("strata", {})
    _write_csv(out / "x_strata.csv", ["stratum", "start", "stop"],
               [[name, a, b] for name, (a, b) in sorted(strata.items())])
    return checks


def _calibration_sets(n: int):
    # fixed instruments: dense enough that the finest counted octave still
    # sits above the sampling scale at 9 levels
    t = np.linspace(0.0, 2 * np.pi, 20_000, endpoint=False)
    circle = np.zeros((t.size, 2 * n))
    circle[:, 0], circle[:, n] = np.cos(t), np.sin(t)
    g = (np.arange(1024) + 0.5) / 1024.0
    square = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1).reshape(-1, 2)
    return (SampledSet(n, circle, {}, _nearest_neighbor_fill(circle)),
            SampledSet(1, square, {}, _nearest_neighbor_fill(square)))


def _suite_dimension(cfg: RunConfig, out: Path) -> List[CheckResult]:
    """Box-counting recovers dim = n for the union set, with calibrations."""
    checks = []
    X = assemble_union_set(cfg.n, cfg.samples_per_stratum)
    rep = box_dimension(X, levels=cfg.box_levels, seed=cfg.seed)
    tol = 0.15 if cfg.n == 2 else 0.2
    checks.append(_within(
        "union-set-dimension",
        "box-counting slope of the union set equals n",
        rep.slope, float(cfg.n), tol, rep.note))
    checks.append(_at_least(
        "regression-quality", "box-count regression r^2 is at least 0.99",
        rep.r_squared, 0.99))

    circle, square = _calibration_sets(cfg.n)
    crep = box_dimension(circle, levels=9, seed=cfg.seed)
    checks.append(_within(
        "curve-calibration", "box-counting slope of a smooth circle equals 1",
        crep.slope, 1.0, 0.1))
    srep = box_dimension(square, levels=9, seed=cfg.seed)
    checks.append(_within(
        "square-calibration", "box-counting slope of a filled square equals 2",
        srep.slope, 2.0, 0.05))

    _write_csv(out / "box_counts.csv", ["scale", "count"],
               list(zip(rep.scales, rep.counts)))
    if cfg.plots:
        plt = _pyplot()
        scales = np.asarray(rep.scales, dtype=float)
        x = np.log2(1.0 / scales)
        y = np.log2(np.asarray(rep.counts, dtype=float))
        eps_min, eps_max = rep.window
        used = (scales >= eps_min - 1e-15) & (scales <= eps_max + 1e-15)
        b = float(np.mean(y[used] - rep.slope * x[used]))
        fig, ax = plt.subplots(figsize=(5, 4))
        ax.plot(x, y, "o", label="counts")
        ax.plot(x[used], rep.slope * x[used] + b, "-",
                label=f"slope {rep.slope:.3f}")
        ax.set_xlabel("log2(1/scale)")
        ax.set_ylabel("log2 N(scale)")
        ax.legend()
        fig.tight_layout()
        _save_svg(fig, out / "box_dimension.svg")
    return checks


def _suite_ledger(cfg: RunConfig, out: Path) -> List[CheckResult]:
    """Capacity bounds table, with the certified rows re-derived."""
    checks = []
    rows = capacity_ledger(cfg.n, certify_r=0.99)
    (out / "capacity_ledger.csv").write_text(ledger_to_csv(rows))
    r2 = 0.99 ** 2

    diag = next(row for row in rows if row.d == row.n)
    checks.append(_within(
        "diagonal-lower", "the d = n lower bound equals pi/2",
        diag.lower, math.pi / 2, 1e-12, diag.lower_provenance))
    ok = (diag.certified_value is not None
          and diag.certified_value >= 0.49 * math.pi
          and abs(diag.certified_value - 0.5 * math.pi * r2) <= 1e-9)
    checks.append(CheckResult(
        "diagonal-certificate",
        "a scale-0.99 model loop certifies more than 0.49 pi at d = n",
        ok, _safe(diag.certified_value), "(pi/2) 0.99^2 +/- 1e-9"))

    mids = [row for row in rows if row.n < row.d <= 2 * row.n - 3]
    if mids:
        err = max(max(abs(row.lower - math.pi / 3),
                      abs((row.certified_value or np.inf)
                          - math.pi * r2 / 3)) for row in mids)
        checks.append(_below(
            "intermediate-certificates",
            "balanced products certify pi/3-level bounds for n < d <= 2n-3",
            err, 1e-9, f"{len(mids)} rows"))
    else:
        checks.append(CheckResult(
            "intermediate-certificates",
            "balanced products certify pi/3-level bounds for n < d <= 2n-3",
            True, "vacuous", "no such d", f"no rows with n < d <= 2n-3 at n={cfg.n}"))

    top = next(row for row in rows if row.d == 2 * row.n - 1)
    checks.append(_within(
        "hypersurface-lower", "the d = 2n-1 lower bound equals pi",
        top.lower, math.pi, 1e-12, top.lower_provenance))
    checks.append(_below(
        "upper-bounds", "every row's upper bound equals pi",
        max(abs(row.upper - math.pi) for row in rows), 1e-12))

    row5 = next(row for row in capacity_ledger(4, certify_r=0.99) if row.d == 5)
    checks.append(_within(
        "product-row", "at n = 4, d = 5 the certified bound is (pi/3) 0.99^2",
        row5.certified_value, math.pi * r2 / 3, 1e-9))
    direct = coiso_product_area(CoisoProductSpec.balanced(4, 5, 0.99))
    checks.append(_within(
        "product-area-direct",
        "the balanced product's minimal leaf-disc area is (pi/3) r^2",
        direct, math.pi * r2 / 3, 1e-9))
    return checks


def _suite_gcd_sweep(cfg: RunConfig, out: Path) -> List[CheckResult]:
    """Product-spectrum optimization lands on the analytic optimum."""
    checks, rows = [], []
    worst_v = worst_r = 0.0
    for c in (0.3, 0.6, 0.9):
        s = optimal_split(c)
        rows.append([c, s.r_squared, s.r_prime_squared, s.value, c * math.pi / 3])
        worst_v = max(worst_v, abs(s.value - c * math.pi / 3))
        worst_r = max(worst_r, abs(s.r_squared - 2 * c / 3))
    _write_csv(out / "best_splits.csv",
               ["c", "r_squared", "r_prime_squared", "value", "analytic_value"],
               rows)
    checks.append(_below(
        "split-values", "the optimal product value equals c pi / 3",
        worst_v, 1e-6, "c in {0.3, 0.6, 0.9}"))
    checks.append(_below(
        "split-locations", "the optimum sits at r^2 = 2c/3 on the sweep grid",
        worst_r, 1e-9))

    rng = np.random.default_rng(cfg.seed)
    worst = 0.0
    for _ in range(50):
        u = rng.uniform(0.2, 1.2)
        a, b = (int(v) for v in rng.integers(1, 13, size=2))
        got = product_spectrum(ActionSpectrum(a * u, "synthetic", True),
                               ActionSpectrum(b * u, "synthetic", True))
        worst = max(worst, abs(got.generator - u * math.gcd(a, b)))
    checks.append(_below(
        "product-gcd", "commensurable spectra combine to their gcd lattice",
        worst, 1e-9, "50 random integer-ratio pairs"))

    dense = product_spectrum(ActionSpectrum(1.0, "synthetic", True),
                             ActionSpectrum(math.sqrt(2.0), "synthetic", True))
    ok = (dense.generator == 0.0 and not dense.exact
          and (dense.window_min_positive or 0.0) > 0.0)
    checks.append(CheckResult(
        "incommensurable-product",
        "incommensurable generators give a dense spectrum (generator 0)",
        ok, float(dense.generator), "generator 0, non-exact",
        f"window minimum {_safe(dense.window_min_positive)}"))

    if cfg.plots:
        plt = _pyplot()
        c = 0.6
        K = 600
        xs = np.array([(k / K) * c for k in range(1, K)])
        ys = np.array([math.pi * real_gcd(0.5 * x, c - x, depth=2 * K)
                       for x in xs])
        fig, ax = plt.subplots(figsize=(5, 4))
        ax.plot(xs / c, ys, ".", markersize=2)
        ax.axvline(2 / 3, linestyle="--", linewidth=0.8)
        ax.axhline(c * math.pi / 3, linestyle="--", linewidth=0.8)
        ax.set_xlabel("r^2 / c")
        ax.set_ylabel("product value")
        ax.set_title(f"split sweep at c = {c}")
        fig.tight_layout()
        _save_svg(fig, out / "gcd_sweep.svg")
    return checks


def _suite_embed2d(cfg: RunConfig, out: Path) -> List[CheckResult]:
    """Unit square embeds area-preservingly into the disc of area 1.1."""
    checks = []
    U = RectangleDomain(0.0, 1.0, 0.0, 1.0)
    t0 = time.perf_counter()
    fine = volume_embed(U, 1.1, resolution=cfg.grid, flow_steps=cfg.flow_steps)
    dt = time.perf_counter() - t0
    print(f"  volume_embed at {cfg.grid}^2: {dt:.1f}s")
    # the coarse run only feeds the refinement ratio; don't gate its residual
    coarse = volume_embed(U, 1.1, resolution=cfg.grid // 2,
                          flow_steps=cfg.flow_steps, residual_tol=1.0)

    dev_f = fine.meta["det_grid_max_dev"]
    dev_c = coarse.meta["det_grid_max_dev"]
    checks.append(_below(
        "jacobian-deviation",
        "grid Jacobian determinant stays within 1e-4 of unity",
        dev_f, 1e-4, f"resolution {cfg.grid}"))
    checks.append(_below(
        "independent-spot-check",
        "finite-difference spot determinants stay within 1e-3 of unity",
        fine.meta["fd_spot_max_dev"], 1e-3))
    target_r = math.sqrt(1.1 / math.pi)
    checks.append(_below(
        "image-containment",
        "the embedded square stays inside the disc of area 1.1",
        fine.meta["image_radius"], target_r + 1e-9,
        f"target radius {target_r:.6f}"))
    checks.append(_at_least(
        "refinement-order",
        "halving the grid spacing cuts the residual at least 3x",
        dev_c / dev_f, 3.0, f"{dev_c:.3e} -> {dev_f:.3e}"))

    _write_csv(out / "embed_certificates.csv",
               ["resolution", "det_grid_max_dev", "fd_spot_max_dev",
                "image_radius", "target_radius"],
               [[cfg.grid, dev_f, fine.meta["fd_spot_max_dev"],
                 fine.meta["image_radius"], target_r],
                [cfg.grid // 2, dev_c, coarse.meta["fd_spot_max_dev"],
                 coarse.meta["image_radius"], target_r]])
    if cfg.plots:
        plt = _pyplot()
        fig, ax = plt.subplots(figsize=(5, 4))
        ax.hist(fine.meta["det_grid"] - 1.0, bins=60)
        ax.set_xlabel("det - 1 on the certificate grid")
        ax.set_ylabel("cells")
        ax.set_yscale("log")
        fig.tight_layout()
        _save_svg(fig, out / "jacobian_hist.svg")
    return checks


def _thin_slice_curve(samples: int = 6000) -> SampledSet:
    """Closed curve on S^3 transverse to the slicing circles."""
    t = np.linspace(0.0, 2 * np.pi, samples, endpoint=False)
    beta = 0.8 + 0.15 * np.sin(t)
    z = np.stack([np.cos(beta) * np.exp(1j * t),
                  np.sin(beta) * np.exp(2j * t)], axis=1)
    pts = complex_to_real(z)
    return SampledSet(2, pts, {"kind": "s3-curve"}, _nearest_neighbor_fill(pts))


def _small_shadow_curve(samples: int = 6000) -> SampledSet:
    """Closed curve whose (q1, p1) shadow is a radius-0.05 circle."""
    t = np.linspace(0.0, 2 * np.pi, samples, endpoint=False)
    pts = np.stack([0.05 * np.cos(t), np.cos(t),
                    0.05 * np.sin(t), np.sin(2 * t)], axis=1)
    return SampledSet(2, pts, {"kind": "thin-curve"},
                      _nearest_neighbor_fill(pts))


def _suite_squeeze(cfg: RunConfig, out: Path) -> List[CheckResult]:
    """Both squeezing routes succeed on thin curves and fail on the union set."""
    checks, rows = [], []

    def record(case, rep):
        rows.append([case, rep.route, rep.success, rep.symplecticity_defect,
                     rep.image_capacity, rep.neighborhood_area,
                     rep.failure_reason or ""])

    rep = squeeze_pipeline(_thin_slice_curve(), math.pi, route="slice",
                           probes=cfg.squeeze_probes,
                           solve_refine=cfg.solve_refine,
                           flow_steps=cfg.flow_steps, seed=cfg.seed)
    record("s3-curve", rep)
    checks.append(CheckResult(
        "slice-success",
        "a thin transverse curve squeezes into the capacity-pi cylinder",
        rep.success, str(rep.success), "True", rep.failure_reason or ""))
    checks.append(_below(
        "slice-defect", "slice-route symplecticity defect is within 1e-5",
        rep.symplecticity_defect, 1e-5,
        f"{cfg.squeeze_probes} probes"))
    checks.append(_below(
        "slice-image-capacity",
        "the slice-route image sits strictly inside the cylinder",
        rep.image_capacity, math.pi - 1e-9))

    rep2 = squeeze_pipeline(_small_shadow_curve(), 0.5, route="shadow",
                            probes=cfg.squeeze_probes,
                            solve_refine=cfg.solve_refine,
                            flow_steps=cfg.flow_steps, seed=cfg.seed)
    record("thin-curve", rep2)
    checks.append(CheckResult(
        "shadow-success",
        "a small-shadow curve squeezes into the capacity-0.5 cylinder",
        rep2.success, str(rep2.success), "True", rep2.failure_reason or ""))
    checks.append(_below(
        "shadow-defect", "shadow-route symplecticity defect is within 1e-5",
        rep2.symplecticity_defect, 1e-5))
    checks.append(_below(
        "shadow-image-capacity",
        "the shadow-route image sits strictly inside the cylinder",
        rep2.image_capacity, 0.5 - 1e-9))

    X = assemble_union_set(2, 96)
    repx_s = squeeze_pipeline(X, math.pi, route="slice", seed=cfg.seed)
    record("union-set", repx_s)
    checks.append(CheckResult(
        "union-set-slice-blocked",
        "the slice route reports failure on the non-squeezable set",
        not repx_s.success, str(repx_s.failure_reason), "a failure reason"))
    repx_h = squeeze_pipeline(X, math.pi, route="shadow", seed=cfg.seed)
    record("union-set", repx_h)
    checks.append(CheckResult(
        "union-set-shadow-blocked",
        "the shadow route reports failure on the non-squeezable set",
        not repx_h.success, str(repx_h.failure_reason), "a failure reason"))

    _write_csv(out / "squeeze_runs.csv",
               ["case", "route", "success", "defect", "image_capacity",
                "neighborhood_area", "failure_reason"], rows)
    return checks


def _p1_hamiltonian(n: int) -> Hamiltonian:
    def val(t, x):
        return np.atleast_2d(np.asarray(x, dtype=float))[:, n].copy()

    def grad(t, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        g = np.zeros_like(x)
        g[:, n] = 1.0
        return g

    return Hamiltonian(n=n, value_fn=val, grad_fn=grad, autonomous=True,
                       label="p1")


def _suite_energy(cfg: RunConfig, out: Path) -> List[CheckResult]:
    """Displacement energetics: exact flows, sharp norms, both probe results."""
    checks = []

    rng = np.random.default_rng(cfg.seed)
    x0 = rng.uniform(-1.2, 1.2, size=(32, 4))
    final = flow_points(_p1_hamiltonian(2), x0, steps=64)
    target = x0.copy()
    target[:, 0] += 1.0
    checks.append(_below(
        "translation-flow",
        "the flow of H = p1 translates q1 at unit speed, exactly",
        float(np.abs(final - target).max()), 1e-10))

    g = np.linspace(0.005, 0.995, 100)
    rect = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1).reshape(-1, 2)
    rset = SampledSet(1, rect, {}, _nearest_neighbor_fill(rect))
    Hr = linear_ramp_hamiltonian(1, slope=1.03, lo=-0.01, hi=1.01,
                                 taper=0.01, rin=4.0, rout=6.0)
    cert = displacement_check(Hr, rset, steps=128)
    checks.append(CheckResult(
        "rectangle-displaced", "a uniform ramp displaces the unit square",
        cert.displaced, float(cert.min_separation),
        f"> {2 * rset.fill:.4f}"))
    checks.append(_below(
        "rectangle-energy",
        "the square's displacement energy is within 1.1 x its area",
        cert.hofer_norm, 1.1))

    model = conjugate_symmetric_model(2)
    pts = sample_lagrangian(model, cfg.energy_m, 2 * cfg.energy_m)
    lset = SampledSet(2, pts, {}, _nearest_neighbor_fill(pts))
    rows, displaced_any, max_norm = [], False, 0.0
    for H in candidate_family(2, seed=cfg.seed):
        c = displacement_check(H, lset, steps=128)
        rows.append([H.label, c.hofer_norm, c.displaced,
                     c.min_separation, c.separation_scale])
        displaced_any = displaced_any or c.displaced
        max_norm = max(max_norm, c.hofer_norm)
    _write_csv(out / "energy_candidates.csv",
               ["label", "hofer_norm", "displaced", "min_separation",
                "separation_scale"], rows)
    checks.append(CheckResult(
        "subcritical-family-blocked",
        "no candidate below energy 0.9 pi displaces the scaled model",
        not displaced_any, "none displaced" if not displaced_any else "displaced",
        "no displacement", f"{len(rows)} candidates, max norm {max_norm:.6f}"))
    checks.append(_below(
        "family-budget", "every candidate's measured norm is below 0.9 pi",
        max_norm, 0.9 * math.pi))

    t0 = time.perf_counter()
    probe = cylinder_energy_probe(math.pi, cfg.cylinder_radius, n=2,
                                  samples=cfg.cylinder_samples, seed=cfg.seed)
    print(f"  cylinder probe: {time.perf_counter() - t0:.1f}s")
    entries = probe.entries
    if entries:
        _write_csv(out / "cylinder_probe.csv", sorted(entries[0]),
                   [[e[k] for k in sorted(e)] for e in entries])
    checks.append(CheckResult(
        "cylinder-displaced",
        "the truncated cylinder is displaced near its capacity",
        probe.success, str(probe.success), "True", probe.message))
    checks.append(_below(
        "cylinder-overhead",
        "certified displacement-energy overhead is at most 1/4",
        probe.achieved_overhead, 0.25,
        f"fill {probe.fill:.4f} at R = {cfg.cylinder_radius}"))
    return checks


SUITE_ORDER = ["spectrum", "build-x", "dimension", "ledger", "gcd-sweep",
               "embed2d", "squeeze", "energy"]
SUITES = {
    "spectrum": _suite_spectrum,
    "build-x": _suite_build_x,
    "dimension": _suite_dimension,
    "ledger": _suite_ledger,
    "gcd-sweep": _suite_gcd_sweep,
    "embed2d": _suite_embed2d,
    "squeeze": _suite_squeeze,
    "energy": _suite_energy,
}


# ---------------------------------------------------------------------------
# driver


def run_suite(cfg: RunConfig) -> dict:
    """Run the configured suite(s), write artifacts, return the report dict."""
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = SUITE_ORDER if cfg.suite == "all" else [cfg.suite]
    entries = []
    for name in names:
        t0 = time.perf_counter()
        print(f"[{name}] running ...")
        results = SUITES[name](cfg, out)
        print(f"[{name}] {len(results)} checks in "
              f"{time.perf_counter() - t0:.1f}s")
        for c in results:
            mark = "PASS" if c.passed else "FAIL"
            print(f"  {mark} {c.name}: {c.claim} "
                  f"(observed {_safe(c.observed)}, expected {c.expected})")
            entries.append({"suite": name, "name": c.name, "claim": c.claim,
                            "passed": bool(c.passed),
                            "observed": _safe(c.observed),
                            "expected": c.expected, "detail": c.detail})
    config = {k: _safe(v) if v is not None else None
              for k, v in asdict(cfg).items()}
    report = {
        "schema": 1,
        "suite": cfg.suite,
        "n": cfg.n,
        "seed": cfg.seed,
        "config": config,
        "generated": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "checks": entries,
        "passed": all(e["passed"] for e in entries),
    }
    (out / "report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n")
    status = "all checks passed" if report["passed"] else "FAILURES present"
    print(f"report: {out / 'report.json'} ({status})")
    return report


_CONFIG_COERCE = {
    "suite": str, "n": int, "out_dir": str, "seed": int,
    "loops_per_class": int, "loop_samples": int, "samples_per_stratum": int,
    "box_levels": int, "grid": int, "flow_steps": int, "solve_refine": int,
    "squeeze_probes": int, "energy_m": int, "cylinder_samples": int,
    "cylinder_radius": float, "plots": bool,
}
_TRUE, _FALSE = {"1", "true", "yes", "on"}, {"0", "false", "no", "off"}


def load_config_file(path: str) -> Dict[str, object]:
    """key = value lines; '#' comments; keys match RunConfig fields."""
    out: Dict[str, object] = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"bad config line (need key = value): {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _CONFIG_COERCE:
            raise ValueError(f"unknown config key {key!r}")
        if key == "samples_per_stratum" and val.lower() in {"none", "default"}:
            out[key] = None
            continue
        kind = _CONFIG_COERCE[key]
        if kind is bool:
            low = val.lower()
            if low not in _TRUE | _FALSE:
                raise ValueError(f"bad boolean for {key!r}: {val!r}")
            out[key] = low in _TRUE
        else:
            out[key] = kind(val)
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="symcap",
        description="Build the models and run named verification suites.")
    p.add_argument("suite", choices=SUITE_ORDER + ["all"],
                   help="which suite to run")
    p.add_argument("--config", help="key = value file overriding any flag")
    flag = dict(default=argparse.SUPPRESS)
    p.add_argument("--n", type=int, help="complex dimension (default 2)", **flag)
    p.add_argument("--out", dest="out_dir", help="artifact directory", **flag)
    p.add_argument("--seed", type=int, **flag)
    p.add_argument("--loops-per-class", type=int, **flag)
    p.add_argument("--loop-samples", type=int, **flag)
    p.add_argument("--samples-per-stratum", type=int, **flag)
    p.add_argument("--box-levels", type=int, **flag)
    p.add_argument("--grid", type=int, help="embedding grid resolution", **flag)
    p.add_argument("--flow-steps", type=int, **flag)
    p.add_argument("--solve-refine", type=int, **flag)
    p.add_argument("--squeeze-probes", type=int, **flag)
    p.add_argument("--energy-m", type=int,
                   help="phase grid density for the displacement survey", **flag)
    p.add_argument("--cylinder-samples", type=int, **flag)
    p.add_argument("--cylinder-radius", type=float, **flag)
    p.add_argument("--no-plots", action="store_true", help="skip SVG output")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    settings = {k: v for k, v in vars(args).items()
                if k not in {"config", "no_plots"}}
    if args.no_plots:
        settings["plots"] = False
    if args.config:
        try:
            settings.update(load_config_file(args.config))
        except (OSError, ValueError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
    try:
        cfg = RunConfig(**settings)
    except (TypeError, ValueError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return 2
    report = run_suite(cfg)
    return 0 if report["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
