"""Wavenumber quadrature grid carrying the spectral nu-weights.

Radial nodes are log-spaced on [q_min, q_max] with trapezoid weights in
log q (so no node sits at k = 0; the integrand of nu is integrable there and
the first node picks up the small-q mass).  Angular nodes are a
Gauss-Legendre rule in cos(theta) crossed with a uniform phi rule; the
angular weights sum to 4 pi exactly.

The node weight of the measure dnu = (1/2) rhohat^2/||k||^2 dk/(2pi)^3 at
(q_i, omega_a) is

    nu_w[i, a] = rhohat(q_i omega_a)^2 * w_i * v_a / (2 (2pi)^3),

the q^2 surface element cancelling against the 1/||k||^2 of nu.  The grid is
antipodally symmetric by construction, which the transform kernels exploit:
Y(-k) = conj(Y(k)), so only half the angular nodes are ever evaluated.

Defaults follow the cross-section length scale s: 64 radial nodes on
[1e-3/s, 40/s], 16 x 32 angular nodes.  A tail estimate for the neglected
|k| > q_max mass is attached to every grid.
"""

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import erfc

__all__ = ["KGrid", "build_kgrid"]


@dataclass(frozen=True, eq=False)
class KGrid:
    cross_section: object
    q: np.ndarray                 # (R,) radial nodes
    radial_weights: np.ndarray    # (R,) dq-weights (trapezoid in log q)
    directions: np.ndarray        # (A, 3) unit vectors
    angular_weights: np.ndarray   # (A,) surface weights, sum = 4 pi
    rhohat2: np.ndarray           # (R, A) rhohat(q_i w_a)^2
    nu_weights: np.ndarray        # (R, A) quadrature weights of dnu
    half_index: np.ndarray        # (A/2,) unique angular nodes
    anti_index: np.ndarray        # (A/2,) their antipodes
    n_theta: int
    n_phi: int
    _k_vectors: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def n_radial(self):
        return self.q.size

    @property
    def n_angular(self):
        return self.directions.shape[0]

    @property
    def k_vectors(self):
        """All nodes q_i * omega_a, shape (R, A, 3)."""
        return self._k_vectors

    @property
    def mass(self):
        """Quadrature value of A = int dnu."""
        return float(self.nu_weights.sum())

    @property
    def nu_weights_half2(self):
        """2 x nu-weights on the unique angular nodes (antipodes folded in)."""
        return 2.0 * self.nu_weights[:, self.half_index]

    @property
    def rhohat2_half(self):
        return self.rhohat2[:, self.half_index]

    @property
    def angular_weights_half2(self):
        return 2.0 * self.angular_weights[self.half_index]

    def node(self, i, a):
        return self.q[i] * self.directions[a]

    def compatible(self, other):
        """Same quadrature: identical nodes, weights and cross-section."""
        return self is other or (
            self.cross_section == other.cross_section
            and np.array_equal(self.q, other.q)
            and np.array_equal(self.directions, other.directions)
            and np.array_equal(self.radial_weights, other.radial_weights)
            and np.array_equal(self.angular_weights, other.angular_weights))

    def representative_nodes(self, count=10):
        """Deterministic spread of (radial, angular) index pairs."""
        R, A = self.n_radial, self.n_angular
        ii = np.linspace(0, R - 1, count).round().astype(int)
        aa = (np.arange(count) * (A // count + 7)) % A
        return list(zip(ii.tolist(), aa.tolist()))

    def tail_estimate(self):
        """Bound/estimate of the neglected nu-mass outside [q_min, q_max].

        Analytic bounds for gaussian and uniform_ball; an empirical probe of
        (1/4pi^2) int_{qmax}^{10 qmax} rhobar^2 dq for the Cantor product.
        The low-q side uses |rhohat| <= m exactly.
        """
        cs = self.cross_section
        q_min, q_max = float(self.q[0]), float(self.q[-1])
        low = cs.mass**2 * q_min / (4.0 * np.pi**2)
        if cs.variant == "gaussian":
            high = cs.mass**2 * np.sqrt(np.pi) * erfc(cs.sigma * q_max) / (8.0 * np.pi**2 * cs.sigma)
        elif cs.variant == "uniform_ball":
            high = 3.0 * cs.mass**2 / (4.0 * np.pi**2 * cs.radius**4 * q_max**3)
        else:
            qq = np.geomspace(q_max, 10.0 * q_max, 64)
            vals = cs.rhobar2(qq, self.n_theta, self.n_phi)
            high = float(np.trapezoid(vals, qq) / (4.0 * np.pi**2))
        return {"low_q": float(low), "high_q": float(high)}


def build_kgrid(cs, n_radial=64, n_theta=16, n_phi=32, q_min=None, q_max=None):
    """Build the nu-weighted quadrature grid for a cross-section."""
    if cs.variant == "point":
        raise ValueError("the point cross-section has no integrable nu; no grid")
    if n_phi % 2 or n_phi < 2:
        raise ValueError("n_phi must be even (antipodal symmetry)")
    if n_radial < 2 or n_theta < 1:
        raise ValueError("need n_radial >= 2 and n_theta >= 1")
    scale = cs.length_scale or 1.0
    q_min = 1e-3 / scale if q_min is None else float(q_min)
    q_max = 40.0 / scale if q_max is None else float(q_max)
    if not (0.0 < q_min < q_max):
        raise ValueError("need 0 < q_min < q_max")

    u = np.linspace(np.log(q_min), np.log(q_max), n_radial)
    q = np.exp(u)
    h = u[1] - u[0]
    wu = np.full(n_radial, h)
    wu[0] = wu[-1] = 0.5 * h
    w_radial = wu * q

    x, wgl = leggauss(n_theta)
    x = 0.5 * (x - x[::-1])            # antipodal-exact cos(theta) nodes
    wgl = 0.5 * (wgl + wgl[::-1])
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    st = np.sqrt(1.0 - x * x)
    dirs = np.stack([np.outer(st, np.cos(phi)).ravel(),
                     np.outer(st, np.sin(phi)).ravel(),
                     np.repeat(x, n_phi)], axis=-1)
    v = np.repeat(wgl, n_phi) * (2.0 * np.pi / n_phi)

    t_idx = np.repeat(np.arange(n_theta), n_phi)
    p_idx = np.tile(np.arange(n_phi), n_theta)
    half = np.flatnonzero(p_idx < n_phi // 2)
    anti = (n_theta - 1 - t_idx[half]) * n_phi + (p_idx[half] + n_phi // 2)
    dirs[anti] = -dirs[half]           # antipodes bitwise-exact

    kvec = q[:, None, None] * dirs[None, :, :]
    rhohat2 = np.asarray(cs.fourier(kvec)) ** 2
    nu_w = rhohat2 * w_radial[:, None] * v[None, :] / (2.0 * (2.0 * np.pi) ** 3)

    return KGrid(cross_section=cs, q=q, radial_weights=w_radial,
                 directions=dirs, angular_weights=v, rhohat2=rhohat2,
                 nu_weights=nu_w, half_index=half, anti_index=anti,
                 n_theta=n_theta, n_phi=n_phi, _k_vectors=kvec)
