"""Property battery: every desk-scale check the theory admits, in one place.

Both the CLI `verify` subcommand and the acceptance test suite run these
checks, so the command line and CI see the same verdicts.  Each check
returns PASS/FAIL with the measured values and its tolerance; checks that
need a resolved time grid SKIP (with the reason) when the configured n is
too coarse, rather than failing spuriously.

The battery drives its own ensembles from the configured sizes: Brownian
ensembles for the isometry/difference/area/spectrum checks, a bridge
ensemble for the closed-filament check, triples for the multi-vortex check,
and a reduced ensemble for the O(n^2) kernel-space cross-validation.
"""

from dataclasses import dataclass, replace

import numpy as np

from . import gibbs as gb
from .energy import (SmoothCurve, area_lower_bound, energy, energy_smooth_curve,
                     energy_tilde, total_energy)
from .integrals import transform
from .local_time import energy_tilde_decomposed
from .paths import SeedSpec, TimeGrid, sample_bm

__all__ = ["CheckResult", "VerifyContext", "ALL_CHECKS", "run_checks", "check_names"]

MIN_RESOLVED_STEPS = 512      # convergence-gated checks need at least this n


@dataclass
class CheckResult:
    name: str
    status: str          # PASS | FAIL | SKIP
    detail: str

    @property
    def failed(self):
        return self.status == "FAIL"

    def line(self):
        return f"[{self.status}] {self.name}: {self.detail}"


def _result(name, ok, detail):
    return CheckResult(name, "PASS" if ok else "FAIL", detail)


def _skip(name, reason):
    return CheckResult(name, "SKIP", reason)


class VerifyContext:
    """Lazily built shared data for the check battery."""

    def __init__(self, run_config, progress=None):
        self.cfg = run_config
        self.progress = progress or (lambda msg: None)
        self.cs = run_config.cross_section()
        self.kgrid = run_config.kgrid(self.cs)
        self.spec = run_config.ensemble_spec(self.cs, self.kgrid)
        self.vcfg = dict(run_config.raw.get("verify", {}))
        self._cache = {}

    def size(self, key, default):
        val = int(self.vcfg.get(key, 0) or 0)
        return val if val > 0 else default

    def _get(self, key, build):
        if key not in self._cache:
            self.progress(f"building {key} ...")
            self._cache[key] = build()
        return self._cache[key]

    # -- shared ensembles ---------------------------------------------------

    def bm_spec(self):
        return replace(self.spec, process="bm")

    def bm_records(self):
        return self._get("bm_records", lambda: gb.run_ensemble(self.bm_spec()))

    def bridge_records(self):
        spec = replace(self.spec, process="bridge")
        return self._get("bridge_records", lambda: gb.run_ensemble(spec))

    def _map(self, fn, ctx, n_items):
        return gb.parallel_sample_map(fn, ctx, n_items, self.spec.workers)

    def light_transforms(self, key, n_samples, k_vectors, process="bm", seed_tag=1):
        """||p_k Y^W||^2 of the Ito transform at a few k's, many samples."""
        K = np.asarray(k_vectors, dtype=float)
        khat = K / np.linalg.norm(K, axis=1, keepdims=True)
        spec = replace(self.spec, process=process,
                       master_seed=self.spec.master_seed + seed_tag)
        return self._get(key, lambda: np.array(
            self._map(_light_task, (spec, K, khat), n_samples)))

    def decomp_pairs(self):
        n_dec = self.size("decomp_samples", 2000)
        return self._get("decomp_pairs", lambda: np.array(
            self._map(_decomp_task, self.bm_spec(), n_dec)))

    def mv_data(self):
        n_mv = self.size("mv_samples", self.spec.n_samples)
        return self._get("mv_data", lambda: np.array(
            self._map(_mv_task, self.bm_spec(), n_mv)))

    def area_data(self):
        records = self.bm_records()
        bounds = self._get("area_bounds", lambda: np.array(
            self._map(_area_task, self.bm_spec(), len(records))))
        H = np.array([r.H for r in records])
        return H, bounds


# module-level task functions so the sample maps can run in worker processes

def _light_task(bundle, i):
    spec, K, khat = bundle
    path = gb.sample_path(spec, i)
    phases = (path.points[:-1] @ K.T).astype(np.float32)
    c, sn = np.cos(phases), np.sin(phases)
    yr = c.T @ path.increments
    yi = sn.T @ path.increments
    par_r = np.einsum("mc,mc->m", yr, khat)
    par_i = np.einsum("mc,mc->m", yi, khat)
    pr = yr - par_r[:, None] * khat
    pi = yi - par_i[:, None] * khat
    return np.einsum("mc,mc->m", pr, pr) + np.einsum("mc,mc->m", pi, pi)


def _decomp_task(spec, i):
    path = gb.sample_path(spec, i)
    h_spec = energy_tilde(transform(path, spec.kgrid, "stratonovich"))
    h_dec = energy_tilde_decomposed(path, spec.cross_section).total
    return h_spec, h_dec


_MV_ORIGINS = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])


def _mv_task(spec, i):
    trs = []
    for f in range(3):
        seed = SeedSpec(spec.master_seed, i).rng(f)
        path = sample_bm(spec.grid, _MV_ORIGINS[f], seed)
        trs.append(transform(path, spec.kgrid, "stratonovich"))
    rep = total_energy(trs)
    return (rep.H_total, rep.H_total_pairwise,
            rep.H_matrix[0, 0] + rep.H_matrix[1, 1] + rep.H_matrix[2, 2])


def _area_task(spec, i):
    return area_lower_bound(gb.sample_path(spec, i), spec.kgrid)


# -- the checks -----------------------------------------------------------------

def check_ito_isometry(ctx):
    """Mean ||p_k Y^W||^2 equals 2T at representative nodes (3 SE), below 4T + 2 C_b."""
    name = "ito_isometry"
    T = ctx.spec.grid.horizon
    nodes = ctx.kgrid.representative_nodes(10)
    K = np.array([ctx.kgrid.node(i, a) for i, a in nodes])
    n_samp = ctx.size("samples", ctx.spec.n_samples)
    vals = ctx.light_transforms("isometry", n_samp, K)
    mean = vals.mean(axis=0)
    se = vals.std(axis=0, ddof=1) / np.sqrt(vals.shape[0])
    dev = np.abs(mean - 2.0 * T) / se
    ok = bool(np.all(dev <= 3.0) and np.all(mean <= 4.0 * T))
    return _result(name, ok,
                   f"max |mean - 2T|/SE = {dev.max():.2f} (tol 3), "
                   f"max mean = {mean.max():.4f} <= 4T = {4 * T}")


def check_positivity_ordering(ctx):
    """H >= 0 and H~ >= H for every sample, exactly."""
    name = "positivity_ordering"
    rec = ctx.bm_records()
    h = np.array([r.H for r in rec])
    ht = np.array([r.H_tilde for r in rec])
    bad = int(np.sum(~((h >= 0) & (ht >= h))))
    return _result(name, bad == 0, f"{bad}/{len(rec)} violations of 0 <= H <= H~")


def check_difference_formula(ctx):
    """Per-path spectral H~ - H vs closed form (1% median); bound D||X_T - X_0||."""
    name = "difference_formula"
    if ctx.spec.grid.steps < MIN_RESOLVED_STEPS:
        return _skip(name, f"needs n >= {MIN_RESOLVED_STEPS} (got {ctx.spec.grid.steps})")
    rec = ctx.bm_records()
    ds = np.array([r.diff_spectral for r in rec])
    dc = np.array([r.diff_closed_form for r in rec])
    bound = np.array([r.bound_D * r.displacement_norm for r in rec])
    rel = np.abs(ds - dc) / dc
    med = float(np.median(rel))
    n_over = int(np.sum(ds > bound))
    ok = med <= 0.01 and n_over == 0
    return _result(name, ok,
                   f"median rel err = {med:.4%} (tol 1%), {n_over} samples above D*||disp||")


def check_closed_filament(ctx):
    """Bridge ensemble: median (H~ - H)/H~ < 1e-3, improving when n doubles."""
    name = "closed_filament"
    if ctx.spec.grid.steps < MIN_RESOLVED_STEPS:
        return _skip(name, f"needs n >= {MIN_RESOLVED_STEPS} (got {ctx.spec.grid.steps})")
    rec = ctx.bridge_records()
    ratio = np.array([r.diff_spectral / r.H_tilde for r in rec])
    med = float(np.median(ratio))
    n_ref = ctx.size("refine_samples", 256)
    grid2 = TimeGrid(ctx.spec.grid.horizon, 2 * ctx.spec.grid.steps)
    spec2 = replace(ctx.spec, process="bridge", grid=grid2, n_samples=n_ref)
    rec2 = gb.run_ensemble(spec2)
    med2 = float(np.median([r.diff_spectral / r.H_tilde for r in rec2]))
    ok = med < 1e-3 and med2 < med
    return _result(name, ok,
                   f"median (H~-H)/H~ = {med:.3e} (tol 1e-3), after doubling {med2:.3e}")


def check_decomposition(ctx):
    """Kernel-space H~ vs spectral H~: means within 5%, correlation > 0.99."""
    name = "decomposition_cross_check"
    if ctx.spec.grid.steps < MIN_RESOLVED_STEPS:
        return _skip(name, f"needs n >= {MIN_RESOLVED_STEPS} (got {ctx.spec.grid.steps})")
    if not ctx.cs.isotropic or ctx.cs.variant == "point":
        return _skip(name, "kernel tables need a bounded isotropic cross-section")
    pairs = ctx.decomp_pairs()
    spec_mean, dec_mean = pairs.mean(axis=0)
    rel = abs(spec_mean - dec_mean) / spec_mean
    corr = float(np.corrcoef(pairs[:, 0], pairs[:, 1])[0, 1])
    ok = rel <= 0.05 and corr > 0.99
    return _result(name, ok,
                   f"mean gap = {rel:.3%} (tol 5%), per-path corr = {corr:.5f} (tol 0.99)")


def check_tail_bound(ctx):
    """Empirical survival of ||p_k Y^W||^2 under 8 exp(-level/8T) at all levels."""
    name = "tail_bound"
    T = ctx.spec.grid.horizon
    levels = np.array(ctx.vcfg.get("levels") or [1, 2, 4, 8, 16], dtype=float)
    picks = [0, ctx.kgrid.n_radial // 2, ctx.kgrid.n_radial - 1]
    A = ctx.kgrid.n_angular
    K = np.array([ctx.kgrid.node(i, a % A) for i, a in
                  [(picks[0], 0), (picks[1], 3), (picks[1], 117), (picks[2], 31), (picks[2], 200)]])
    n_samp = ctx.size("tail_samples", 100000)
    vals = ctx.light_transforms("tail", n_samp, K, seed_tag=2)
    worst = 0.0
    for lvl in levels:
        surv = (vals >= lvl).mean(axis=0)
        bound = 8.0 * np.exp(-lvl / (8.0 * T))
        worst = max(worst, float((surv / bound).max()))
    return _result(name, worst <= 1.0,
                   f"max survival/bound over levels {levels.astype(int).tolist()} = {worst:.3f}")


def check_partition_function(ctx):
    """Z_0 = 1; Z monotone and log-convex on the ladder; Z~ <= Z for beta >= 0."""
    name = "partition_function"
    rec = ctx.bm_records()
    gamma_low, _ = gb.gamma_thresholds(ctx.cs, ctx.spec.grid.horizon, ctx.kgrid)
    betas = [-0.5 * gamma_low, 0.0, 1.0, 2.0, 5.0]
    zs = [gb.partition_function(rec, b) for b in betas]
    z0 = gb.partition_function(rec, 0.0)
    ok_z0 = z0.Z == 1.0 and z0.effective_sample_size == len(rec)
    logz = np.array([e.log_Z for e in zs])
    mono = bool(np.all(np.diff(logz) <= 0.0))
    b = np.array(betas)
    slopes = np.diff(logz) / np.diff(b)
    convex = bool(np.all(np.diff(slopes) >= -1e-12))
    ztilde_ok = all(
        gb.partition_function(rec, beta, "H_tilde").log_Z
        <= gb.partition_function(rec, beta, "H").log_Z + 1e-12
        for beta in (0.0, 1.0, 2.0, 5.0))
    ok = ok_z0 and mono and convex and ztilde_ok
    return _result(name, ok,
                   f"Z(0) = {z0.Z}, monotone = {mono}, log-convex = {convex}, "
                   f"Ztilde <= Z = {ztilde_ok}")


def check_thresholds(ctx):
    """gamma_high/gamma_low = pi^2 exactly; A(quadrature) vs pair-sampling MC (1%)."""
    name = "gamma_thresholds"
    lo, hi = gb.gamma_thresholds(ctx.cs, ctx.spec.grid.horizon, ctx.kgrid)
    ratio_exact = hi == lo * np.pi**2
    n_pairs = ctx.size("mc_pairs", 1000000)
    rng = SeedSpec(ctx.spec.master_seed, 0).rng(99)
    x = ctx.cs.sample(rng, n_pairs)
    y = ctx.cs.sample(rng, n_pairs)
    inv = 1.0 / np.linalg.norm(x - y, axis=1)
    a_mc = ctx.cs.mass**2 * float(inv.mean()) / (8.0 * np.pi)
    se = ctx.cs.mass**2 * float(inv.std(ddof=1)) / np.sqrt(n_pairs) / (8.0 * np.pi)
    a_quad = ctx.kgrid.mass
    rel = abs(a_quad - a_mc) / a_mc
    ok = ratio_exact and rel <= 0.01
    return _result(name, ok,
                   f"ratio == pi^2: {ratio_exact}; A quad {a_quad:.6f} vs MC "
                   f"{a_mc:.6f} (+-{se:.2g}), rel gap {rel:.3%} (tol 1%)")


def check_multivortex(ctx):
    """3 filaments: H_N >= 0, H_N <= 3 sum H_nn, assemblies agree to 1e-10."""
    name = "multivortex"
    data = ctx.mv_data()
    h_tot, h_pair, h_diag = data.T
    neg = int(np.sum(h_tot < 0))
    over = int(np.sum(h_tot > 3.0 * h_diag * (1 + 1e-12)))
    rel = np.abs(h_tot - h_pair) / np.maximum(h_tot, 1e-300)
    worst = float(rel.max())
    ok = neg == 0 and over == 0 and worst <= 1e-10
    return _result(name, ok,
                   f"{neg} negative H_N, {over} above 3*sum(H_nn), "
                   f"max assembly gap {worst:.2e} (tol 1e-10)")


def check_area_bound(ctx):
    """H + 1% >= stochastic-area lower bound for at least 99% of samples."""
    name = "area_lower_bound"
    if ctx.spec.grid.steps < MIN_RESOLVED_STEPS:
        return _skip(name, f"needs n >= {MIN_RESOLVED_STEPS} (got {ctx.spec.grid.steps})")
    H, bounds = ctx.area_data()
    ok_frac = float(np.mean(H * 1.01 >= bounds))
    viol = np.flatnonzero(H * 1.01 < bounds)
    detail = f"pass fraction {ok_frac:.4f} (tol 0.99)"
    if viol.size:
        detail += f"; violating samples {viol[:10].tolist()}"
    return _result(name, ok_frac >= 0.99, detail)


def check_smooth_curve(ctx):
    """Unit-circle energy below (2 pi)^2 A and stable to 0.5% under n-doubling."""
    name = "smooth_curve"
    circle = SmoothCurve(
        gamma=lambda t: np.array([np.cos(t), np.sin(t), 0.0]),
        gammadot=lambda t: np.array([-np.sin(t), np.cos(t), 0.0]),
        horizon=2.0 * np.pi)
    h1 = energy_smooth_curve(circle, ctx.kgrid, n=2048)
    h2 = energy_smooth_curve(circle, ctx.kgrid, n=4096)
    bound = (2.0 * np.pi) ** 2 * ctx.kgrid.mass
    drift = abs(h2 - h1) / h2
    ok = h2 <= bound and drift <= 0.005
    return _result(name, ok,
                   f"H = {h2:.6f} <= (2pi)^2 A = {bound:.6f}; refinement drift "
                   f"{drift:.3%} (tol 0.5%)")


def check_spectrum(ctx):
    """Shell reassembly reproduces the Gibbs energy (1e-8); gaussian envelope."""
    name = "spectrum_consistency"
    rec = ctx.bm_records()
    beta = float(ctx.cfg.raw["spectrum"]["beta"])
    q, E, _ = gb.energy_spectrum(rec, beta, ctx.kgrid)
    reassembled = gb.spectrum_reassembly(ctx.kgrid, E)
    h_mean = gb.gibbs_expectation(rec, beta, "H").value
    ht_minus_diff = gb.gibbs_expectation(
        rec, beta, lambda r: r.H_tilde - r.diff_spectral).value
    rel_h = abs(reassembled - h_mean) / h_mean
    rel_ht = abs(reassembled - ht_minus_diff) / h_mean
    ok_identity = rel_h <= 1e-8 and rel_ht <= 1e-8 and bool(np.all(E >= 0))
    if ctx.cs.variant != "gaussian":
        status = _result(name, ok_identity,
                         f"reassembly rel gap {rel_h:.2e} (tol 1e-8); envelope skipped "
                         "(non-gaussian cross-section)")
        return status
    if ctx.spec.grid.steps < MIN_RESOLVED_STEPS:
        return _skip(name, f"envelope fit needs n >= {MIN_RESOLVED_STEPS}")
    sel = (q * ctx.cs.sigma >= 1.0) & (q * ctx.cs.sigma <= 3.5) & (E > 0)
    slope = np.polyfit(q[sel] ** 2, np.log(E[sel]), 1)[0]
    rel_slope = abs(slope + ctx.cs.sigma**2) / ctx.cs.sigma**2
    ok = ok_identity and rel_slope <= 0.10
    return _result(name, ok,
                   f"reassembly rel gap {max(rel_h, rel_ht):.2e} (tol 1e-8); envelope "
                   f"slope {slope:.4f} vs -sigma^2 = {-ctx.cs.sigma**2} "
                   f"(rel {rel_slope:.2%}, tol 10%)")


ALL_CHECKS = [
    ("ito_isometry", check_ito_isometry),
    ("positivity_ordering", check_positivity_ordering),
    ("difference_formula", check_difference_formula),
    ("closed_filament", check_closed_filament),
    ("decomposition_cross_check", check_decomposition),
    ("tail_bound", check_tail_bound),
    ("partition_function", check_partition_function),
    ("gamma_thresholds", check_thresholds),
    ("multivortex", check_multivortex),
    ("area_lower_bound", check_area_bound),
    ("smooth_curve", check_smooth_curve),
    ("spectrum_consistency", check_spectrum),
]


def check_names():
    return [name for name, _ in ALL_CHECKS]


def run_checks(ctx, names=None):
    wanted = set(names) if names else None
    results = []
    for name, fn in ALL_CHECKS:
        if wanted and name not in wanted:
            continue
        results.append(fn(ctx))
    return results
