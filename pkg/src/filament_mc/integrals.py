"""Discrete stochastic line integrals along a path and the filament transform.

For a path (X_j) and wavevector k the basic object is

    Y_k = int_0^T e^{ik.X_t} (*) dX_t,

discretized as a left-point sum (Ito), a midpoint-of-state sum
(Stratonovich), or a right-point sum against the backward displacement
(backward Ito).  The transform evaluates Y on every node of a KGrid in one
pass through the compiled kernel, exploiting Y(-k) = conj(Y(k)) on the
grid's antipodal pairs, and caches the transverse/parallel split

    Y = p_k Y + khat (khat . Y),    p_k v = v - khat (khat . v),

from which all spectral energies are assembled.  The transverse part is
convention-independent in the limit (the Ito/Stratonovich midpoint gap
decays like sqrt(dt)), while khat . Y_strat converges at O(dt) to
-i (e^{ik.X_T} - e^{ik.X_0})/||k||.
"""

from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels as _k

__all__ = [
    "ito_integral", "strat_integral", "backward_ito_integral",
    "project_transverse", "transform", "FilamentTransform",
]


def project_transverse(k, v):
    """Component of v orthogonal to k; idempotent; k must be nonzero."""
    k = np.asarray(k, dtype=float)
    v = np.asarray(v)
    k2 = k @ k
    if k2 == 0.0:
        raise ValueError("transverse projection undefined at k = 0")
    return v - np.multiply.outer(v @ k, k / k2).reshape(v.shape)


def _phase_sum(points_eval, deltas, k):
    phases = points_eval @ np.asarray(k, dtype=float)
    return np.exp(1j * phases) @ deltas


def ito_integral(path, k):
    """Left-point sum  sum_j e^{ik.X_j} dX_j  (complex 3-vector)."""
    return _phase_sum(path.points[:-1], path.increments, k)


def strat_integral(path, k):
    """Midpoint sum  sum_j e^{ik.(X_j + X_{j+1})/2} dX_j."""
    return _phase_sum(path.midpoints, path.increments, k)


def backward_ito_integral(path, k, t_index):
    """Right-point backward sum  sum_{i < t_index} e^{ik.(X_t - X_{i+1})} dX_i."""
    n = path.grid.steps
    if not 0 <= t_index <= n:
        raise ValueError(f"t_index must lie in [0, {n}], got {t_index}")
    if t_index == 0:
        return np.zeros(3, dtype=complex)
    x_t = path.points[t_index]
    disp = x_t - path.points[1:t_index + 1]
    return _phase_sum(disp, path.increments[:t_index], k)


@dataclass(eq=False)
class FilamentTransform:
    """Per-node values of Y over a KGrid for one path.

    Internally Y lives on the unique (half) angular nodes as real/imaginary
    parts; the antipodal partners carry the conjugate values, so every
    nodewise energy reduction is done once on the half set in real
    arithmetic.  Full-grid complex views are materialized on first access.
    """

    kgrid: object
    convention: str
    y_re_h: np.ndarray = None     # (R, A/2, 3) on kgrid.half_index nodes
    y_im_h: np.ndarray = None
    displacement: np.ndarray = None
    _values: np.ndarray = field(default=None, repr=False)
    _par_h: tuple = field(default=None, repr=False)
    _perp_h: tuple = field(default=None, repr=False)
    _perp2_h: np.ndarray = field(default=None, repr=False)

    def _expand(self, half_arr, sign=1.0):
        g = self.kgrid
        out = np.empty((g.n_radial, g.n_angular) + half_arr.shape[2:])
        out[:, g.half_index] = half_arr
        out[:, g.anti_index] = sign * half_arr
        return out

    @property
    def values(self):
        """Complex Y at each node, shape (R, A, 3)."""
        if self._values is None:
            self._values = self._expand(self.y_re_h) + 1j * self._expand(self.y_im_h, -1.0)
        return self._values

    @property
    def parallel_parts_half(self):
        """(Re, Im) of khat . Y on the half nodes, each (R, A/2)."""
        if self._par_h is None:
            d = self.kgrid.directions[self.kgrid.half_index]
            self._par_h = (np.einsum("ram,am->ra", self.y_re_h, d),
                           np.einsum("ram,am->ra", self.y_im_h, d))
        return self._par_h

    @property
    def parallel(self):
        """khat . Y at each node, shape (R, A) complex.

        Note khat(-k) . Y(-k) = -conj(khat . Y): the parallel scalar picks a
        sign from the direction flip.
        """
        pr, pi = self.parallel_parts_half
        return self._expand(pr, -1.0) + 1j * self._expand(pi)

    @property
    def par2(self):
        """|khat . Y|^2 per node, shape (R, A)."""
        pr, pi = self.parallel_parts_half
        return self._expand(pr * pr + pi * pi)

    @property
    def perp_parts_half(self):
        """(Re, Im) of p_k Y on the half nodes, each (R, A/2, 3)."""
        if self._perp_h is None:
            pr, pi = self.parallel_parts_half
            d = self.kgrid.directions[self.kgrid.half_index][None, :, :]
            self._perp_h = (self.y_re_h - pr[:, :, None] * d,
                            self.y_im_h - pi[:, :, None] * d)
        return self._perp_h

    @property
    def perp(self):
        """p_k Y at each node, shape (R, A, 3) complex."""
        qr, qi = self.perp_parts_half
        return self._expand(qr) + 1j * self._expand(qi, -1.0)

    @property
    def perp2_half(self):
        """||p_k Y||^2 on the half nodes; nonnegative in floating point."""
        if self._perp2_h is None:
            qr, qi = self.perp_parts_half
            self._perp2_h = (np.einsum("ram,ram->ra", qr, qr)
                             + np.einsum("ram,ram->ra", qi, qi))
        return self._perp2_h

    @property
    def perp2(self):
        """||p_k Y||^2 per node, shape (R, A)."""
        return self._expand(self.perp2_half)

    @property
    def par2_half(self):
        pr, pi = self.parallel_parts_half
        return pr * pr + pi * pi


def transform(path_or_points, kgrid, convention="stratonovich"):
    """Evaluate Y on every grid node; convention "ito" | "stratonovich".

    Accepts a Path or a raw (n+1, 3) array of points.
    """
    pts = getattr(path_or_points, "points", path_or_points)
    pts = np.asarray(pts, dtype=float)
    if convention == "ito":
        ev = pts[:-1]
    elif convention == "stratonovich":
        ev = 0.5 * (pts[:-1] + pts[1:])
    else:
        raise ValueError(f"convention must be ito|stratonovich, got {convention!r}")
    deltas = np.ascontiguousarray(np.diff(pts, axis=0))
    return _transform_eval(ev, deltas, kgrid, convention,
                           displacement=pts[-1] - pts[0])


def transform_curve(points_eval, weighted_tangents, kgrid):
    """Deterministic-curve transform: Y = sum_j e^{ik.gamma_j} gammadot_j dt."""
    ev = np.asarray(points_eval, dtype=float)
    deltas = np.ascontiguousarray(np.asarray(weighted_tangents, dtype=float))
    return _transform_eval(ev, deltas, kgrid, "curve",
                           displacement=np.zeros(3))


def _transform_eval(ev, deltas, kgrid, convention, displacement):
    half = kgrid.half_index
    dirs_half = np.ascontiguousarray(kgrid.directions[half])
    dots = np.ascontiguousarray((ev @ dirs_half.T).T)      # (A/2, n)
    y_re_h, y_im_h = _k.transform_sums(dots, np.ascontiguousarray(kgrid.q), deltas)
    return FilamentTransform(kgrid=kgrid, convention=convention,
                             y_re_h=y_re_h, y_im_h=y_im_h,
                             displacement=np.asarray(displacement, dtype=float))
