"""Ensemble runner, partition-function estimation and the energy spectrum.

Records carry everything Gibbs reweighting needs per sample: the energies
H and H~ (H~ >= H >= 0 exactly), the endpoint displacement, the difference
formula, and the per-radial-shell spectrum contributions

    S_i = sum_a v_a rhohat(q_i w_a)^2 ||p_k Y||^2.

The reweighted ensemble at inverse temperature beta uses plain importance
sampling from the Wiener reference: weights e^{-beta H} in log space with
max-subtraction, jackknife standard errors, effective sample size
(sum w)^2 / sum w^2, and a heavy-tail flag when the top 1% of weights
carries more than half the total mass.  Negative-beta results are reported
with these diagnostics rather than asserted finite: Monte Carlo cannot
certify integrability, only flag its breakdown.

The guaranteed-finite threshold is gamma_low = 1/(2AT); divergence is proven
only beyond gamma_high = pi^2/(2AT), so log Z over (-gamma_low, 0) is
trustworthy while the window between the two thresholds is open.
"""

from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass, field
import os
import pickle

import numpy as np
from scipy.special import logsumexp

from .energy import energy_report
from .integrals import transform
from .local_time import spectral_mass
from .paths import SeedSpec, TimeGrid, DriftModel, sample_bm, sample_bridge, sample_sde_euler

__all__ = [
    "EnsembleRecord", "EnsembleSpec", "GibbsEstimate", "GibbsValue",
    "run_ensemble", "partition_function", "gibbs_expectation",
    "energy_spectrum", "spectrum_reassembly", "gamma_thresholds",
    "default_workers", "EnsembleError",
]


class EnsembleError(RuntimeError):
    """Failure inside one sample, annotated with its index."""


@dataclass
class EnsembleRecord:
    """Per-sample observables; one JSONL line (schema documented in cli)."""

    sample_index: int
    H: float
    H_tilde: float
    diff_spectral: float
    diff_closed_form: float
    displacement: np.ndarray
    displacement_norm: float
    bound_D: float
    shells: np.ndarray


@dataclass
class EnsembleSpec:
    """Everything run_ensemble needs; built by the CLI from its config."""

    process: str                  # bm | bridge | sde
    grid: TimeGrid
    cross_section: object
    kgrid: object
    n_samples: int
    master_seed: int
    x0: np.ndarray = field(default_factory=lambda: np.zeros(3))
    drift: object = None          # DriftModel for process == "sde"
    workers: int = 0              # 0 -> default_workers()


def default_workers():
    env = os.environ.get("FILAMENT_MC_THREADS")
    if env:
        return max(1, int(env))
    return max(1, os.cpu_count() or 1)


def sample_path(spec, index):
    """The path of sample `index`; pure in (spec, index)."""
    seed = SeedSpec(spec.master_seed, index)
    if spec.process == "bm":
        return sample_bm(spec.grid, spec.x0, seed)
    if spec.process == "bridge":
        return sample_bridge(spec.grid, spec.x0, seed)
    if spec.process == "sde":
        drift = spec.drift or DriftModel.zero()
        return sample_sde_euler(spec.grid, spec.x0, drift, seed)
    raise ValueError(f"unknown process {spec.process!r}")


def compute_record(spec, index):
    """Sample one path and reduce it to its EnsembleRecord."""
    try:
        path = sample_path(spec, index)
        tr = transform(path, spec.kgrid, "stratonovich")
        rep = energy_report(tr, spec.cross_section)
    except Exception as exc:
        raise EnsembleError(f"sample {index}: {exc}") from exc
    return EnsembleRecord(
        sample_index=index, H=rep.H, H_tilde=rep.H_tilde,
        diff_spectral=rep.diff_spectral, diff_closed_form=rep.diff_closed_form,
        displacement=rep.displacement, displacement_norm=rep.displacement_norm,
        bound_D=rep.bound_D, shells=rep.shells)


# worker-process state: the task context is shipped once per worker through
# the pool initializer instead of once per sample
_POOL_CTX = None


def _pool_init(payload):
    global _POOL_CTX
    _POOL_CTX = pickle.loads(payload)


def _pool_call(i):
    ctx, fn = _POOL_CTX
    return fn(ctx, i)


def parallel_sample_map(fn, ctx, n_items, workers, progress=None):
    """[fn(ctx, i) for i in range(n_items)], fanned out over worker processes.

    fn must be a module-level function and (ctx, results) picklable; anything
    else falls back to threads.  Results keep index order, and every sample
    is computed by the same pure code path, so the output is identical for
    any worker count.
    """
    workers = workers or default_workers()
    if workers == 1 or n_items < 4:
        out = []
        for i in range(n_items):
            out.append(fn(ctx, i))
            if progress:
                progress(i)
        return out
    try:
        payload = pickle.dumps((ctx, fn))
    except Exception:
        payload = None
    if payload is None:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda i: fn(ctx, i), range(n_items)))
    chunk = max(1, n_items // (workers * 16))
    with ProcessPoolExecutor(max_workers=workers, initializer=_pool_init,
                             initargs=(payload,)) as pool:
        out = []
        for i, rec in enumerate(pool.map(_pool_call, range(n_items), chunksize=chunk)):
            out.append(rec)
            if progress:
                progress(i)
    return out


def run_ensemble(spec, progress=None):
    """All records of the ensemble, ordered by sample index.

    Samples are independent and seeded by (master_seed, index), so the
    result is identical for any worker count.
    """
    return parallel_sample_map(compute_record, spec, spec.n_samples,
                               spec.workers, progress)


# -- Gibbs estimation ----------------------------------------------------------


@dataclass
class GibbsEstimate:
    beta: float
    Z: float
    log_Z: float
    standard_error: float
    effective_sample_size: float
    flag_heavy_tail: bool


@dataclass
class GibbsValue:
    value: float
    standard_error: float
    effective_sample_size: float
    unreliable: bool


def _weights(records, beta, energy_field):
    vals = np.array([getattr(r, energy_field) for r in records])
    lw = -beta * vals
    m = float(lw.max())
    return np.exp(lw - m), m, lw


def partition_function(records, beta, energy_field="H"):
    """Z_beta = E e^{-beta H} with jackknife SE, ESS and heavy-tail flag.

    Computed in log space; Z in (0, 1] whenever beta >= 0 since H >= 0.
    """
    if not records:
        raise ValueError("partition_function needs at least one record")
    w, m, lw = _weights(records, beta, energy_field)
    n = w.size
    log_z = float(logsumexp(lw) - np.log(n))
    s = float(w.sum())
    with np.errstate(over="ignore"):
        z = float(np.exp(log_z))
        scale = np.exp(m)
        se = float(scale * np.std(w, ddof=1) / np.sqrt(n)) if n > 1 else float("nan")
    ess = s * s / float(w @ w)
    top = max(1, int(np.ceil(0.01 * n)))
    heavy = float(np.sort(w)[-top:].sum()) > 0.5 * s
    return GibbsEstimate(beta=float(beta), Z=z, log_Z=log_z, standard_error=se,
                         effective_sample_size=float(ess), flag_heavy_tail=bool(heavy))


def gibbs_expectation(records, beta, observable, energy_field="H", ess_min=50.0):
    """Self-normalized importance-sampling mean of an observable under mu_beta.

    observable: record attribute name or callable(record) -> float.  The
    estimate always comes back; it is flagged unreliable when the effective
    sample size drops below ess_min.
    """
    if not records:
        raise ValueError("gibbs_expectation needs at least one record")
    get = observable if callable(observable) else lambda r: getattr(r, observable)
    g = np.array([get(r) for r in records], dtype=float)
    w, _, _ = _weights(records, beta, energy_field)
    n = w.size
    s = float(w.sum())
    sg = float(w @ g)
    value = sg / s
    if n > 1:
        denom = s - w
        ratio_i = (sg - w * g) / np.where(denom > 0, denom, np.nan)
        mean_i = np.nanmean(ratio_i)
        se = float(np.sqrt((n - 1) / n * np.nansum((ratio_i - mean_i) ** 2)))
    else:
        se = float("nan")
    ess = s * s / float(w @ w)
    return GibbsValue(value=float(value), standard_error=se,
                      effective_sample_size=float(ess),
                      unreliable=bool(ess < ess_min))


def energy_spectrum(records, beta, kgrid, energy_field="H", ess_min=50.0):
    """Gibbs-weighted energy spectrum: E_i at each radial node q_i.

    E_i is the mu_beta mean of the shell sums S_i; all E_i >= 0.  Returns
    (q, E, meta) with meta the GibbsValue diagnostics of the reweighting.
    """
    if not records:
        raise ValueError("energy_spectrum needs at least one record")
    shells = np.array([r.shells for r in records], dtype=float)   # (N, R)
    w, _, _ = _weights(records, beta, energy_field)
    s = float(w.sum())
    E = (w @ shells) / s
    ess = s * s / float(w @ w)
    meta = GibbsValue(value=float("nan"), standard_error=float("nan"),
                      effective_sample_size=float(ess),
                      unreliable=bool(ess < ess_min))
    return kgrid.q.copy(), E, meta


def spectrum_reassembly(kgrid, spectrum):
    """Radial reassembly of shell means; reproduces the Gibbs mean of H."""
    return float(np.asarray(spectrum) @ kgrid.radial_weights / (2.0 * (2.0 * np.pi) ** 3))


def gamma_thresholds(cs, horizon, kgrid=None):
    """(gamma_low, gamma_high) = (1/(2AT), pi^2/(2AT)).

    Z_beta is finite for all beta >= -gamma_low; divergence is proven only
    for beta < -gamma_high, the window in between is open.
    """
    if cs.variant == "point":
        raise ValueError("thresholds need finite spectral mass A")
    a = kgrid.mass if kgrid is not None else spectral_mass(cs)
    low = 1.0 / (2.0 * a * horizon)
    return low, float(np.pi**2) * low
