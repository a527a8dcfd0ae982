"""Time grids and samplers for the filament core processes.

The core of a filament is a 3-D Brownian semimartingale

    X_t = W_t + int_0^t b_s ds,    t in [0, T],

sampled on a uniform grid t_j = j*dt, dt = T/n.  Three drift models are
supported: none (plain Brownian motion), the bridge drift
b(t, x) = (x0 - x)/(T - t) that pins the path back to its starting point,
and an arbitrary user-supplied f(t, x) integrated by Euler-Maruyama.

The Brownian bridge itself is sampled by the exact transform
B_t - (t/T) B_T of a Brownian path rather than by integrating the drift,
which is singular at t -> T; the drift form is kept only so that its L1
moment can be estimated.

Seeding is counter-based: the generator of sample i is derived by hashing
(master_seed, i) through numpy's SeedSequence.  Identical inputs give
bitwise-identical paths regardless of execution order or worker count.
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "TimeGrid", "Path", "DriftModel", "SeedSpec",
    "sample_bm", "sample_bridge", "sample_sde_euler", "drift_l1_moment",
]


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid of n steps over [0, T]."""

    horizon: float
    steps: int

    def __post_init__(self):
        if not (self.horizon > 0 and np.isfinite(self.horizon)):
            raise ValueError(f"horizon must be a positive real, got {self.horizon}")
        if not (isinstance(self.steps, (int, np.integer)) and self.steps >= 1):
            raise ValueError(f"steps must be a positive integer, got {self.steps}")

    @property
    def dt(self):
        return self.horizon / self.steps

    @property
    def times(self):
        """Node times t_0 .. t_n with t_n == horizon exactly."""
        return np.linspace(0.0, self.horizon, self.steps + 1)


@dataclass(frozen=True)
class SeedSpec:
    """Counter-based seed: (master_seed, sample_index) -> independent stream."""

    master_seed: int
    sample_index: int = 0

    def __post_init__(self):
        if not (0 <= int(self.master_seed) < 2**64):
            raise ValueError("master_seed must fit in 64 bits")
        if int(self.sample_index) < 0:
            raise ValueError("sample_index must be nonnegative")

    def rng(self, *subkeys):
        """Generator for this sample; extra subkeys split further substreams."""
        entropy = [int(self.master_seed), int(self.sample_index), *map(int, subkeys)]
        return np.random.default_rng(entropy)


@dataclass(frozen=True)
class Path:
    """Discretized core trajectory: n+1 points in 3-space anchored at x0."""

    grid: TimeGrid
    points: np.ndarray
    x0: np.ndarray
    process: str = field(default="custom", compare=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        x0 = np.asarray(self.x0, dtype=float).reshape(3)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "x0", x0)
        if pts.shape != (self.grid.steps + 1, 3):
            raise ValueError(f"points must have shape {(self.grid.steps + 1, 3)}, got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("path contains non-finite coordinates")
        if not np.array_equal(pts[0], x0):
            raise ValueError("points[0] must equal x0")

    @property
    def increments(self):
        return np.diff(self.points, axis=0)

    @property
    def midpoints(self):
        return 0.5 * (self.points[:-1] + self.points[1:])

    @property
    def displacement(self):
        return self.points[-1] - self.points[0]


class DriftModel:
    """Drift b(t, x) of the semimartingale; variants zero | bridge | table."""

    def __init__(self, variant, f=None, horizon=None, x0=None):
        if variant not in ("zero", "bridge", "table"):
            raise ValueError(f"unknown drift variant {variant!r}")
        if variant == "table" and f is None:
            raise ValueError("table drift needs an evaluable f(t, x)")
        if variant == "bridge" and horizon is None:
            raise ValueError("bridge drift needs its matching horizon T")
        self.variant = variant
        self._f = f
        self.horizon = horizon
        self.x0 = np.zeros(3) if x0 is None else np.asarray(x0, dtype=float)

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def bridge(cls, horizon, x0=None):
        return cls("bridge", horizon=horizon, x0=x0)

    @classmethod
    def table(cls, f):
        return cls("table", f=f)

    def __call__(self, t, x):
        if self.variant == "zero":
            return np.zeros(3)
        if self.variant == "bridge":
            if t >= self.horizon:
                raise ValueError(f"bridge drift is singular at t={t} >= T={self.horizon}")
            return (self.x0 - np.asarray(x)) / (self.horizon - t)
        return np.asarray(self._f(t, x), dtype=float)


def _gaussian_increments(grid, seed):
    rng = seed.rng() if isinstance(seed, SeedSpec) else seed
    return rng.standard_normal((grid.steps, 3)) * np.sqrt(grid.dt)


def sample_bm(grid, x0, seed):
    """Brownian motion: i.i.d. N(0, dt) increments per component."""
    x0 = np.asarray(x0, dtype=float).reshape(3)
    pts = np.empty((grid.steps + 1, 3))
    pts[0] = x0
    np.cumsum(_gaussian_increments(grid, seed), axis=0, out=pts[1:])
    pts[1:] += x0
    return Path(grid, pts, x0, process="bm")


def sample_bridge(grid, x0, seed):
    """Brownian bridge via the transform B_t - (t/T) B_T, pinned at x0.

    The endpoint equals the start bitwise: the transform factor times[-1]/T
    is exactly 1, so points[n] = x0 by construction.
    """
    x0 = np.asarray(x0, dtype=float).reshape(3)
    bm = np.vstack([np.zeros(3), np.cumsum(_gaussian_increments(grid, seed), axis=0)])
    frac = (grid.times / grid.horizon)[:, None]
    pts = bm - frac * bm[-1] + x0
    return Path(grid, pts, x0, process="bridge")


def sample_sde_euler(grid, x0, drift, seed):
    """Euler-Maruyama with left-point drift: X_{j+1} = X_j + f(t_j, X_j) dt + dW_j.

    Consumes the noise stream exactly like sample_bm, so a zero drift
    reproduces sample_bm bitwise under the same seed.
    """
    x0 = np.asarray(x0, dtype=float).reshape(3)
    dW = _gaussian_increments(grid, seed)
    dt = grid.dt
    times = grid.times
    pts = np.empty((grid.steps + 1, 3))
    pts[0] = x0
    for j in range(grid.steps):
        b = np.asarray(drift(times[j], pts[j]), dtype=float)
        if not np.all(np.isfinite(b)):
            raise FloatingPointError(
                f"drift evaluation non-finite at step j={j}, t={times[j]:.6g}")
        pts[j + 1] = pts[j] + b * dt + dW[j]
    return Path(grid, pts, x0, process="bm" if drift.variant == "zero" else "sde")


def refine_path(path, seed):
    """Dyadic refinement of a sampled path: insert conditional midpoints.

    Given neighbours, the midpoint of a Brownian(-bridge) path is
    N((X_j + X_{j+1})/2, dt/4 I); the refined path has the same law as a
    direct 2n-step sample and converges to the same trajectory.  Exact for
    bm and bridge paths (the conditioning is local), not for Euler paths.
    """
    if path.process not in ("bm", "bridge"):
        raise ValueError(f"refinement is exact only for bm/bridge paths, got {path.process!r}")
    grid = path.grid
    rng = seed.rng() if isinstance(seed, SeedSpec) else seed
    fine = TimeGrid(grid.horizon, 2 * grid.steps)
    pts = np.empty((fine.steps + 1, 3))
    pts[0::2] = path.points
    mid = 0.5 * (path.points[:-1] + path.points[1:])
    pts[1::2] = mid + rng.standard_normal((grid.steps, 3)) * np.sqrt(grid.dt / 4.0)
    return Path(fine, pts, path.x0, process=path.process)


def drift_l1_moment(paths_with_drifts):
    """Monte Carlo estimate of C_b = E (int_0^T ||b_t|| dt)^2.

    Left-point Riemann sum over each path; the j = n node is never touched,
    which keeps the bridge drift finite.
    """
    vals = []
    for path, drift in paths_with_drifts:
        dt = path.grid.dt
        times = path.grid.times[:-1]
        left = path.points[:-1]
        if drift.variant == "zero":
            norms = np.zeros(path.grid.steps)
        elif drift.variant == "bridge":
            norms = np.linalg.norm((drift.x0 - left) / (drift.horizon - times)[:, None], axis=1)
        else:
            norms = np.array([np.linalg.norm(drift(t, x)) for t, x in zip(times, left)])
        vals.append((np.sum(norms) * dt) ** 2)
    if not vals:
        raise ValueError("drift_l1_moment needs at least one (path, drift) pair")
    return float(np.mean(vals))
