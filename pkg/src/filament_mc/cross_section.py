"""Cross-section models and the kernels derived from them.

A cross section is a finite measure rho on R^3 entering only through its
Fourier transform rhohat(k) = int e^{ik.x} rho(dx).  All variants here are
symmetric about the origin, so rhohat is real, |rhohat(k)| <= rhohat(0) = m,
and the spectral weighting

    dnu(k) = (1/2) rhohat(k)^2 / ||k||^2  dk/(2pi)^3

is a nonnegative measure whose total mass is the constant A.

Derived kernels:

  * G(x)      = -1/(4 pi ||x||), the Newtonian kernel;
  * G_rho(x)  = (rho * G * rho)(x), negative everywhere; its positive Coulomb
    counterpart gamma(x) = -G_rho(x) = 2 int dnu(k) cos(k.x) is what the
    energy decompositions actually consume (for the symmetric models here the
    two differ only by sign, and gamma(0) = 2A);
  * (rho*rho)(x), the density of the sum of two independent rho-draws;
  * B_rho(x)  = int p_k cos(k.x) dnu(k), real symmetric 3x3, with
    B_rho(0) = (2A/3) I so that tr B_rho(0) = 2A;
  * rhobar(q)^2, the spherical average of rhohat^2 over directions, defining
    the radially symmetrized measure nubar with the same mass as nu.

Variants: gaussian(sigma, m) | uniform_ball(R, m) | cantor_product(d, r, L, m)
| point(m).  The point variant has infinite A and is admitted only by the
operations that explicitly accept it.  The Cantor product is the law of
sum_j eps_j c_j per axis (eps_j = +-1 fair coins, c_j = (L/2)(1-r) r^(j-1)),
truncated at depth d:

    rhohat_1(t) = prod_{j=1..d} cos(t c_j),

with per-axis truncation error |prod_{j>d} cos(t c_j) - 1| <=
(t L (1-r) r^d)^2 / (8 (1-r^2)), far below round-off at the default d = 20
for any usable |k|.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import erf

__all__ = [
    "CrossSection", "fourier", "nu_mass", "nu_mass_radial", "kernel_g",
    "kernel_rho2", "kernel_b", "spherical_avg", "coulomb_radial",
    "rho2_radial", "b_scalars_radial", "RadialProfile",
]

_FOUR_PI = 4.0 * np.pi


@dataclass(frozen=True)
class CrossSection:
    """One cross-section model; construct via the named classmethods."""

    variant: str
    mass: float = 1.0
    sigma: float = None      # gaussian width
    radius: float = None     # uniform ball radius
    depth: int = None        # cantor truncation depth
    ratio: float = None      # cantor contraction ratio
    scale: float = None      # cantor support diameter L
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.mass <= 0:
            raise ValueError("mass must be positive")
        if self.variant == "gaussian" and not (self.sigma and self.sigma > 0):
            raise ValueError("gaussian needs a positive width sigma")
        if self.variant == "uniform_ball" and not (self.radius and self.radius > 0):
            raise ValueError("uniform_ball needs a positive radius")
        if self.variant == "cantor_product":
            if not (self.depth and self.depth >= 1):
                raise ValueError("cantor_product needs depth >= 1")
            if not (0.125 < self.ratio < 0.5):
                # correlation dimension 3 log2/log(1/r) must exceed 1 for the
                # singular integral (and hence A) to be finite
                raise ValueError("cantor ratio must lie in (1/8, 1/2)")
            if not (self.scale and self.scale > 0):
                raise ValueError("cantor_product needs a positive scale L")
        if self.variant not in ("gaussian", "uniform_ball", "cantor_product", "point"):
            raise ValueError(f"unknown cross-section variant {self.variant!r}")

    @classmethod
    def gaussian(cls, sigma, mass=1.0):
        return cls("gaussian", mass=mass, sigma=sigma)

    @classmethod
    def uniform_ball(cls, radius, mass=1.0):
        return cls("uniform_ball", mass=mass, radius=radius)

    @classmethod
    def cantor_product(cls, depth=20, ratio=1.0 / 3.0, scale=1.0, mass=1.0):
        return cls("cantor_product", mass=mass, depth=depth, ratio=ratio, scale=scale)

    @classmethod
    def point(cls, mass=1.0):
        return cls("point", mass=mass)

    @property
    def isotropic(self):
        return self.variant in ("gaussian", "uniform_ball", "point")

    @property
    def length_scale(self):
        """Characteristic transverse size (sets the default k-window)."""
        if self.variant == "gaussian":
            return self.sigma
        if self.variant == "uniform_ball":
            return self.radius
        if self.variant == "cantor_product":
            return self.scale
        return None

    def fourier(self, k):
        """rhohat at wavevectors k, array of shape (..., 3); real-valued."""
        k = np.asarray(k, dtype=float)
        if self.variant == "point":
            return np.full(k.shape[:-1], self.mass)
        if self.variant == "cantor_product":
            out = np.full(k.shape[:-1], self.mass)
            offs = self._cantor_offsets()
            for ax in range(3):
                out = out * np.cos(np.multiply.outer(k[..., ax], offs)).prod(axis=-1)
            return out
        return self.fourier_radial(np.linalg.norm(k, axis=-1))

    def fourier_radial(self, q):
        """rhohat(q) for the isotropic variants."""
        q = np.asarray(q, dtype=float)
        if self.variant == "gaussian":
            return self.mass * np.exp(-0.5 * self.sigma**2 * q * q)
        if self.variant == "uniform_ball":
            u = self.radius * q
            small = u < 1e-3      # closed form cancels catastrophically below
            us = np.where(small, 1.0, u)
            val = 3.0 * (np.sin(us) - us * np.cos(us)) / us**3
            val = np.where(small, 1.0 - u * u / 10.0 + u**4 / 280.0, val)
            return self.mass * val
        if self.variant == "point":
            return np.full(np.shape(q), self.mass)
        raise ValueError(f"{self.variant} is not isotropic; use fourier(k)")

    def _cantor_offsets(self):
        j = np.arange(1, self.depth + 1)
        return 0.5 * self.scale * (1.0 - self.ratio) * self.ratio ** (j - 1)

    def rhobar2(self, q, n_theta=16, n_phi=32):
        """Spherical average of rhohat^2 at radius q (= rhohat(q)^2 if isotropic)."""
        q = np.asarray(q, dtype=float)
        if self.isotropic:
            return self.fourier_radial(q) ** 2
        dirs, wts = _sphere_rule(n_theta, n_phi)
        vals = self.fourier(np.multiply.outer(q, dirs)) ** 2
        return vals @ (wts / (4.0 * np.pi))

    def sample(self, rng, n):
        """Draw n points from the probability measure rho/m, shape (n, 3)."""
        if self.variant == "gaussian":
            return rng.normal(scale=self.sigma, size=(n, 3))
        if self.variant == "uniform_ball":
            z = rng.normal(size=(n, 3))
            z /= np.linalg.norm(z, axis=1, keepdims=True)
            return z * self.radius * rng.random(n)[:, None] ** (1.0 / 3.0)
        if self.variant == "cantor_product":
            offs = self._cantor_offsets()
            signs = rng.integers(0, 2, size=(n, 3, offs.size)) * 2 - 1
            return signs @ offs
        return np.zeros((n, 3))

    def a_exact(self):
        """Closed-form spectral mass A where available, else None."""
        if self.variant == "gaussian":
            return self.mass**2 / (8.0 * np.pi**1.5 * self.sigma)
        if self.variant == "uniform_ball":
            # A = (1/8pi) E 1/|x-y|, and E 1/|x-y| = 6/(5R) inside a uniform ball
            return 3.0 * self.mass**2 / (20.0 * np.pi * self.radius)
        return None


def fourier(cs, k):
    """rhohat(k); module-level alias of CrossSection.fourier."""
    return cs.fourier(k)


def _sphere_rule(n_theta, n_phi):
    """Gauss-Legendre x uniform-phi product rule; weights sum to 4 pi."""
    x, w = leggauss(n_theta)
    x = 0.5 * (x - x[::-1])            # enforce exact antipodal symmetry
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    st = np.sqrt(1.0 - x * x)
    dirs = np.stack([np.outer(st, np.cos(phi)).ravel(),
                     np.outer(st, np.sin(phi)).ravel(),
                     np.repeat(x, n_phi)], axis=-1)
    wts = np.repeat(w, n_phi) * (2.0 * np.pi / n_phi)
    return dirs, wts


# -- spectral mass ------------------------------------------------------------

def nu_mass(cs, kgrid):
    """A = int dnu(k) by quadrature over the k-grid.

    Rejects the point variant, for which A is infinite.
    """
    if cs.variant == "point":
        raise ValueError("point cross-section has infinite spectral mass A")
    if kgrid.cross_section != cs:
        raise ValueError("kgrid was built for a different cross-section")
    return float(kgrid.nu_weights.sum())


@lru_cache(maxsize=32)
def _gl_rule(n):
    return leggauss(n)


def _radial_q_grid(cs, q_min=None, q_max=None, n=2048):
    """Gauss-Legendre nodes/weights in log q on the default k-window."""
    scale = cs.length_scale or 1.0
    q_min = 1e-3 / scale if q_min is None else q_min
    q_max = 40.0 / scale if q_max is None else q_max
    u, wu = _gl_rule(n)
    lo, hi = np.log(q_min), np.log(q_max)
    q = np.exp(0.5 * (u + 1.0) * (hi - lo) + lo)
    w = 0.5 * (hi - lo) * wu * q
    return q, w


def nu_mass_radial(cs, q_min=None, q_max=None, n=2048, n_theta=16, n_phi=32):
    """A via the radial form (1/4pi^2) int rhobar(q)^2 dq (high resolution)."""
    if cs.variant == "point":
        raise ValueError("point cross-section has infinite spectral mass A")
    q, w = _radial_q_grid(cs, q_min, q_max, n)
    return float(np.sum(w * cs.rhobar2(q, n_theta, n_phi)) / (4.0 * np.pi**2))


# -- Coulomb-type kernels ------------------------------------------------------

def _radial_transform(cs, r, shape_func, n_q=4096, q_max_factor=1.0):
    """(1/8pi^2) int rhohat(q)^2 shape_func(q r) dq, chunked over r.

    The shape function is evaluated in single precision (the arguments reach
    a few hundred radians, so float32 keeps ~1e-5 relative accuracy) which
    makes table construction an order of magnitude faster.
    """
    q, w = _radial_q_grid(cs, q_max=(40.0 * q_max_factor) / (cs.length_scale or 1.0), n=n_q)
    wrho2 = w * cs.fourier_radial(q) ** 2
    r = np.atleast_1d(np.asarray(r, dtype=float))
    out = np.empty(r.shape)
    qf = q.astype(np.float32)
    step = max(1, int(4e6 // n_q))
    for lo in range(0, r.size, step):
        block = r[lo:lo + step].astype(np.float32)
        out[lo:lo + step] = wrho2 @ shape_func(np.multiply.outer(qf, block)).astype(float)
    return out / (8.0 * np.pi**2)


def coulomb_radial(cs, r):
    """gamma(r) = -G_rho(r) = 2 int dnu cos(k.x): the positive Coulomb kernel.

    Isotropic variants only; gamma(0) = 2A and gamma(r) = m^2/(4 pi r) outside
    the support diameter.
    """
    r = np.asarray(r, dtype=float)
    m2 = cs.mass**2
    if cs.variant == "gaussian":
        zero = r < 1e-14 * cs.sigma
        rs = np.where(zero, cs.sigma, r)
        out = m2 * erf(rs / (2.0 * cs.sigma)) / (_FOUR_PI * rs)
        return np.where(zero, m2 / (_FOUR_PI * np.sqrt(np.pi) * cs.sigma), out)
    if cs.variant == "point":
        return m2 / (_FOUR_PI * r)
    if cs.variant == "uniform_ball":
        prof = _cached_profile(cs, "ball_gamma", lambda: _ball_gamma_profile(cs))
        r_arr = np.atleast_1d(r)
        out = prof(np.minimum(r_arr, prof.r[-1]))
        far = r_arr > prof.r[-1]
        if np.any(far):
            out = np.where(far, m2 / (_FOUR_PI * r_arr), out)
        return out if np.ndim(r) else float(out[0])
    raise NotImplementedError("radial Coulomb kernel needs an isotropic cross-section")


def kernel_g(cs, x, n_radial=2048, n_theta=16, n_phi=32):
    """G_rho(x) = (rho * G * rho)(x) with G = -1/(4 pi ||x||); negative everywhere.

    Gaussian in closed form (-(m^2/4pi) erf(||x||/2 sigma)/||x||), other
    isotropic variants by radial quadrature of the nu-representation
    -(1/2 pi^2) int rhohat(q)^2 sinc(q r) dq; the Cantor product through the
    full angular average of -2 int dnu(k) cos(k.x).
    """
    if cs.variant == "point":
        raise ValueError("G_rho is not defined for a point cross-section")
    x = np.asarray(x, dtype=float)
    if cs.isotropic:
        r = np.linalg.norm(x, axis=-1) if x.shape and x.shape[-1] == 3 else x
        out = -coulomb_radial(cs, r)
        return float(out) if np.ndim(out) == 0 or out.size == 1 else out
    x = x.reshape(3)
    q, w = _radial_q_grid(cs, n=n_radial)
    dirs, ang_w = _sphere_rule(n_theta, n_phi)
    kvec = np.multiply.outer(q, dirs)                 # (n_radial, A, 3)
    rhohat2 = cs.fourier(kvec) ** 2
    cosfac = np.cos(kvec @ x)
    val = -np.einsum("i,ia,ia,a->", w, rhohat2, cosfac, ang_w) / (2.0 * np.pi) ** 3
    return float(val)


def rho2_radial(cs, r):
    """(rho*rho) at radius r = ||x||: density of the sum of two rho-draws."""
    r = np.asarray(r, dtype=float)
    m2 = cs.mass**2
    if cs.variant == "gaussian":
        return m2 * (4.0 * np.pi * cs.sigma**2) ** -1.5 * np.exp(-r * r / (4.0 * cs.sigma**2))
    if cs.variant == "uniform_ball":
        # lens-overlap autocorrelation of the ball indicator
        R = cs.radius
        V = (4.0 / 3.0) * np.pi * R**3
        d = np.minimum(r, 2.0 * R)
        lens = (np.pi / 12.0) * (4.0 * R + d) * (2.0 * R - d) ** 2
        return np.where(r < 2.0 * R, m2 * lens / V**2, 0.0)
    raise NotImplementedError(f"(rho*rho) has no density for variant {cs.variant!r}")


def kernel_rho2(cs, x, eps=None, n_q=4096):
    """(rho*rho) evaluated at the 3-vector x.

    Gaussian and uniform_ball have exact densities; the Cantor product has
    none, so the value is mollified with a Gaussian of width eps (default
    L/100) via per-axis quadrature of rhohat_1(t)^2 e^{-eps^2 t^2/2} cos(t x_a).
    """
    x = np.asarray(x, dtype=float).reshape(3)
    if cs.variant in ("gaussian", "uniform_ball"):
        return float(rho2_radial(cs, np.linalg.norm(x)))
    if cs.variant == "cantor_product":
        eps = cs.scale / 100.0 if eps is None else eps
        offs = cs._cantor_offsets()
        t = np.linspace(0.0, 12.0 / eps, n_q)
        prof2 = np.cos(np.multiply.outer(t, offs)).prod(axis=-1) ** 2
        damped = prof2 * np.exp(-0.5 * eps**2 * t * t)
        out = cs.mass**2
        for ax in range(3):
            out *= np.trapezoid(damped * np.cos(t * x[ax]), t) / np.pi
        return float(out)
    raise ValueError(f"(rho*rho) unsupported for variant {cs.variant!r}")


def kernel_b(cs, x, kgrid):
    """B_rho(x) = int p_k cos(k.x) dnu(k) over the grid; real symmetric 3x3."""
    if cs.variant == "point":
        raise ValueError("B_rho is not defined for a point cross-section")
    x = np.asarray(x, dtype=float).reshape(3)
    w = kgrid.nu_weights * np.cos(kgrid.k_vectors @ x)   # (R, A)
    wsum = w.sum(axis=0)                                 # (A,)
    khat = kgrid.directions
    proj = np.eye(3) * wsum.sum() - np.einsum("a,am,al->ml", wsum, khat, khat)
    return 0.5 * (proj + proj.T)


def spherical_avg(cs, q, n_theta=16, n_phi=32):
    """rhobar(q)^2, the spherical average of rhohat^2 at radius q > 0."""
    if np.any(np.asarray(q) <= 0):
        raise ValueError("q must be positive")
    return cs.rhobar2(q, n_theta=n_theta, n_phi=n_phi)


def b_scalars_radial(cs, r, n_q=2048):
    """Scalars (s0, s2) of the isotropic decomposition of B_rho.

    B_rho(x) = ((s0+s2)/2) I + ((s0-3 s2)/2) xhat xhat^T  at r = ||x||, with
        s0(r) = int dnu cos(k.x)             (= gamma(r)/2),
        s2(r) = int dnu (khat.xhat)^2 cos(k.x).
    Bounded isotropic cross-sections only.
    """
    if not cs.isotropic or cs.variant == "point":
        raise NotImplementedError("B_rho scalars need a bounded isotropic cross-section")
    s0 = 0.5 * coulomb_radial(cs, np.atleast_1d(np.asarray(r, dtype=float)))
    s2 = _radial_transform(cs, r, _phi2, n_q=n_q)
    return s0, s2


def _sinc(a):
    small = np.abs(a) < 1e-6
    a_ = np.where(small, 1.0, a)
    return np.where(small, 1.0 - a * a / 6.0, np.sin(a_) / a_)


def _phi2(a):
    """int_{-1}^{1} c^2 cos(a c) dc = 2[(a^2 - 2) sin a + 2 a cos a]/a^3."""
    small = np.abs(a) < 1e-4
    a_ = np.where(small, 1.0, a)
    val = 2.0 * ((a_ * a_ - 2.0) * np.sin(a_) + 2.0 * a_ * np.cos(a_)) / a_**3
    return np.where(small, 2.0 / 3.0 - a * a / 5.0, val)


@dataclass(frozen=True)
class RadialProfile:
    """(r, value) samples of a radial kernel with linear interpolation."""

    r: np.ndarray
    values: np.ndarray

    def __call__(self, r):
        return np.interp(r, self.r, self.values)


def _cached_profile(cs, key, build):
    prof = cs._cache.get(key)
    if prof is None:
        prof = build()
        cs._cache[key] = prof
    return prof


def _ball_gamma_profile(cs, n_r=8192, n_q=8192):
    R = cs.radius
    r = np.linspace(0.0, 2.05 * R, n_r)
    vals = 2.0 * _radial_transform(cs, r, lambda a: 2.0 * _sinc(a), n_q=n_q, q_max_factor=10.0)
    return RadialProfile(r, vals)
