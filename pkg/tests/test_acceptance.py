"""Acceptance criteria 1 to 9.

Each test records one pass/fail line (shown in the terminal summary) and
fails if its criterion is not met. Thresholds are the published ones; see
``notes/decisions.md`` for the analysis of criteria that do not hold.
"""

import math
import time

import numpy as np
import pytest

from tikhcurv.fem import assemble_vector, interpolate, make_space, mass_matrix
from tikhcurv.levelset import (
    brute_force_signed_distance,
    circle_levelset,
    extract_interface,
    fmm_signed_distance,
    inside_circle,
    narrow_band,
)
from tikhcurv.mesh import Pattern, build_rect_mesh, h_max
from tikhcurv.projection import AnalyticField, project
from tikhcurv.reconstruction import ReconstructionConfig, equivalent_unscaled_config, reconstruct

from conftest import LEVELS


def _order(e0, e1, h0, h1):
    return math.log(e0 / e1) / math.log(h0 / h1)


def _last_two_orders(report, alpha, column):
    rows = [r for r in report.rows if r.alpha == alpha]
    return [getattr(r, "order_" + column) for r in rows[-2:]]


def test_criterion_1_projection_identities(acceptance):
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    mesh = build_rect_mesh(-1, 1, -1, 1, 8, 8, Pattern.CROSSED)
    spaces = {m: make_space(mesh, m) for m in (1, 2, 3)}
    worst_identity, worst_bound = 0.0, -math.inf
    for trial in range(20):
        k = rng.integers(0, 3, size=(4, 2))
        c = rng.standard_normal(4)
        ph = rng.uniform(0, 2 * np.pi, size=4)
        field = AnalyticField(lambda x, k=k, c=c, ph=ph: np.cos(np.pi / 2 * np.einsum("...i,ti->...t", x, k) + ph) @ c)
        V = spaces[1 + trial % 3]
        A = project(V, field)
        aa = A.coeffs @ (mass_matrix(V) @ A.coeffs)
        pa = assemble_vector(V, lambda geo, v: field(geo.points)[:, :, None] * v.val, 12) @ A.coeffs
        pp = assemble_vector(V, lambda geo, v: field(geo.points)[:, :, None] ** 2 * v.val, 12).sum()
        worst_identity = max(worst_identity, abs(aa - pa) / abs(aa))
        worst_bound = max(worst_bound, math.sqrt(aa) / math.sqrt(pp) - 1.0)
    elapsed = time.perf_counter() - start
    ok = worst_identity <= 1e-9 and worst_bound <= 1e-9 and elapsed < 10
    acceptance(1, ok, f"max rel |<A,A>-<P,A>| = {worst_identity:.2e}, max ||A||/||P||-1 = {worst_bound:.2e}, "
                      f"{elapsed:.1f} s")


@pytest.mark.slow
def test_criterion_2_laplacian_h3_second_order(laplace_h3_sweep, acceptance):
    report = laplace_h3_sweep.report
    orders = {a: _last_two_orders(report, a, "domain") for a in report.alphas()}
    best = max(orders, key=lambda a: min(orders[a]))
    detail = ", ".join(f"alpha={a:g}: {o[0]:.2f} {o[1]:.2f}" for a, o in orders.items())
    acceptance(2, min(orders[best]) >= 1.7, f"last two orders {detail}; best alpha={best:g}")


@pytest.mark.slow
def test_criterion_3_weak_method_contrast(laplace_weak_sweeps, acceptance):
    e1 = [r.err_domain for r in laplace_weak_sweeps["weak_p1"].rows]
    ratios = [b / a for a, b in zip(e1, e1[1:])]
    p2_orders = _last_two_orders(laplace_weak_sweeps["weak_p2"], 0.0, "domain")
    ok = min(ratios) >= 0.9 and min(p2_orders) >= 1.7
    acceptance(3, ok, "weak_p1 ratios " + " ".join(f"{r:.3f}" for r in ratios)
               + "; weak_p2 last two orders " + " ".join(f"{o:.2f}" for o in p2_orders))


@pytest.mark.slow
def test_criterion_4_droplet_curvature(droplet_h3_exact, acceptance):
    report = droplet_h3_exact.report
    finest = min(r.h for r in report.rows)
    monotone, means = {}, {}
    for alpha in report.alphas():
        _, errs = report.series(alpha, "err_interface")
        monotone[alpha] = all(b < a for a, b in zip(errs, errs[1:]))
        means[alpha] = droplet_h3_exact.means[(finest, alpha)]
    ok = all(monotone.values()) and all(abs(m - 2.0) <= 0.05 * 2.0 for m in means.values())
    detail = ", ".join(f"alpha={a:g}: {'monotone' if monotone[a] else 'NOT monotone'}, mean {means[a]:.4f}"
                       for a in report.alphas())
    acceptance(4, ok, detail)


@pytest.mark.slow
def test_criterion_5_noise_robustness(droplet_noisy, acceptance):
    weak = [r.err_interface for r in droplet_noisy["weak_p2"].rows]
    h3 = [r.err_interface for r in droplet_noisy["h3"].rows]
    weak_ok = all(b >= a for a, b in zip(weak, weak[1:]))
    reduction = h3[0] / h3[-1]
    acceptance(5, weak_ok and reduction >= 2.0,
               "weak_p2 errors " + " ".join(f"{e:.3g}" for e in weak) + f"; H3 alpha=10 reduction {reduction:.2f}x")


@pytest.mark.slow
def test_criterion_6_h2_boundary_pathology(sharp_wetting_finest, acceptance):
    e2 = sharp_wetting_finest["h2"].rows[-1].err_interface
    e3 = sharp_wetting_finest["h3"].rows[-1].err_interface
    acceptance(6, e2 >= 2.0 * e3, f"finest mesh alpha=0.01: H2 {e2:.3g}, H3 {e3:.3g}, ratio {e2 / e3:.1f}")


def test_criterion_7_fmm_validity(acceptance):
    sign = inside_circle()
    band_gap, linf, hs = 0.0, [], []
    for n in LEVELS:
        mesh = build_rect_mesh(-1, 1, -1, 1, n, n, Pattern.CROSSED)
        V = make_space(mesh, 1)
        gamma = extract_interface(interpolate(V, circle_levelset()))
        bf = brute_force_signed_distance(mesh, gamma, sign).coeffs
        fm = fmm_signed_distance(mesh, gamma, sign).coeffs
        band = narrow_band(V, gamma)
        band_gap = max(band_gap, float(np.abs(fm[band] - bf[band]).max()))
        linf.append(float(np.abs(fm - bf).max()))
        hs.append(h_max(mesh))
    order = _order(linf[0], linf[-1], hs[0], hs[-1])
    acceptance(7, band_gap <= 1e-12 and order >= 0.8,
               f"narrow band max gap {band_gap:.1e}; L-inf errors " + " ".join(f"{e:.3g}" for e in linf)
               + f", observed order {order:.2f}")


@pytest.mark.slow
def test_criterion_8_optimality(laplace_h3_sweep, droplet_h3_exact, acceptance):
    checks = {("laplace", *k): v for k, v in laplace_h3_sweep.optimality.items()}
    checks.update({("droplet", *k): v for k, v in droplet_h3_exact.optimality.items()})
    failed = {k: v for k, v in checks.items() if not v.passed}
    detail = f"{len(checks) - len(failed)}/{len(checks)} configurations pass"
    if failed:
        detail += "; failing " + ", ".join(
            f"{case} h={h:.3g} alpha={a:g} (relative margin {v.worst_margin / abs(v.value):.1e})"
            for (case, h, a), v in sorted(failed.items()))
    acceptance(8, not failed and len(checks) == 4 * (3 + 4), detail)


def test_criterion_9_rescaling_equivalence(acceptance):
    rel = lambda a, b: np.linalg.norm(a - b) / np.linalg.norm(b)
    same, transformed = [], []
    for half_width, n in ((2.0, 8), (4.0, 8), (8.0, 8)):
        mesh = build_rect_mesh(-half_width, half_width, -half_width, half_width, n, n, Pattern.CROSSED)
        phi = interpolate(make_space(mesh, 1), circle_levelset(R=half_width / 2))
        for cfg in (ReconstructionConfig.h3(0.1), ReconstructionConfig.h2(0.1)):
            on = reconstruct(phi, cfg)
            off = reconstruct(phi, ReconstructionConfig(**{**cfg.__dict__, "rescale": False}))
            eq = reconstruct(phi, equivalent_unscaled_config(cfg, on.r_used))
            same.append((h_max(mesh), cfg.k, rel(on.phi2.coeffs, off.phi2.coeffs)))
            transformed.append(rel(on.phi2.coeffs, eq.phi2.coeffs))
    worst = max(d for _, _, d in same)
    detail = ", ".join(f"h_max={h:g} k={k}: {d:.1e}" for h, k, d in same)
    acceptance(9, worst <= 1e-6, f"same weights {detail}; with transformed weights max {max(transformed):.1e}")
