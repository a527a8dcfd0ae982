"""Pure-numpy implementations of the hot kernels.

Reference semantics for the compiled extension in _core.pyx: identical
signatures, identical math, no compiled dependency.  Selected automatically
when the extension is unavailable (or forced via FILAMENT_MC_BACKEND=python).
Expect roughly an order of magnitude less throughput on the transform and
pair kernels; see benchmarks/compare_backends.py.
"""

import numpy as np

BACKEND = "python"


def transform_sums(dots, qs, deltas):
    """Phase sums  Y[i, a] = sum_j exp(1j * q_i * dots[a, j]) * deltas[j].

    dots:   (A, n) projections of the evaluation points on the directions
    qs:     (R,) radial magnitudes
    deltas: (n, 3) path increments
    returns (Y_re, Y_im), each (R, A, 3)
    """
    A, n = dots.shape
    R = qs.size
    y_re = np.empty((R, A, 3))
    y_im = np.empty((R, A, 3))
    for a in range(A):
        phases = np.multiply.outer(qs, dots[a])        # (R, n)
        y_re[:, a, :] = np.cos(phases) @ deltas
        y_im[:, a, :] = np.sin(phases) @ deltas
    return y_re, y_im


def pair_sums(points, deltas, table_r, table_g, table_rho2):
    """Ordered-pair kernel sums for the energy decomposition.

    For i < j accumulates
      double_g:  gamma(||X_j - X_{i+1}||) (dX_i . dX_j)   [backward-right point]
      lt_off:    (rho*rho)(||X_j - X_i||)                  [node pairs]
    Radial kernels are linear tables on the uniform grid table_r.
    Returns (double_g, lt_off); caller adds the diagonal of the local time.
    """
    n = deltas.shape[0]
    dbl = 0.0
    lt = 0.0
    left = points[:-1]
    right = points[1:]
    block = max(1, int(2**22 // max(n, 1)))
    for j0 in range(1, n, block):
        j1 = min(n, j0 + block)
        jj = np.arange(j0, j1)
        # distances to all i < j; mask the upper triangle
        d_back = left[jj, None, :] - right[None, :j1, :]     # X_j - X_{i+1}
        d_node = left[jj, None, :] - left[None, :j1, :]      # X_j - X_i
        mask = np.arange(j1)[None, :] < jj[:, None]
        r_back = np.linalg.norm(d_back, axis=-1)
        r_node = np.linalg.norm(d_node, axis=-1)
        g = np.interp(r_back, table_r, table_g)
        rho2 = np.interp(r_node, table_r, table_rho2)
        dots = deltas[jj] @ deltas[:j1].T
        dbl += float(np.sum(g * dots * mask))
        lt += float(np.sum(rho2 * mask))
    return dbl, lt


def pair_sums_b(points, deltas, table_r, table_bi, table_bu):
    """Ordered-pair sums against the matrix kernel B_rho (backward-right point).

    Accumulates sum_{i<j} dX_i . B(X_j - X_{i+1}) dX_j with
    B(u) = b_i(r) I + b_u(r) uhat uhat^T.
    """
    n = deltas.shape[0]
    total = 0.0
    left = points[:-1]
    right = points[1:]
    block = max(1, int(2**21 // max(n, 1)))
    for j0 in range(1, n, block):
        j1 = min(n, j0 + block)
        jj = np.arange(j0, j1)
        d = left[jj, None, :] - right[None, :j1, :]
        mask = np.arange(j1)[None, :] < jj[:, None]
        r = np.linalg.norm(d, axis=-1)
        bi = np.interp(r, table_r, table_bi)
        bu = np.interp(r, table_r, table_bu)
        dots = deltas[jj] @ deltas[:j1].T
        du_j = np.einsum("jbm,jm->jb", d, deltas[jj])
        du_i = np.einsum("jbm,bm->jb", d, deltas[:j1])
        r2 = np.where(r > 0, r * r, 1.0)
        total += float(np.sum((bi * dots + bu * du_j * du_i / r2) * mask))
    return total


def cross_pair_sums(pts_x, del_x, pts_y, del_y, dt, eps, min_dist):
    """All-pairs sums between two paths for the point-like interaction.

    Returns (coulomb, tanaka_vec_dot, mollified, excluded):
      coulomb     = sum_{t,s} (1/||X_t - Y_s||) (dY_s . dX_t)
      tanaka      = sum_t dX_t . sum_s (X_t - Y_s)/||X_t - Y_s||^3 * dt
      mollified   = sum_{t,s} phi_eps(X_t - Y_s) dt^2,  phi_eps the gaussian
      excluded    = number of pairs with distance < min_dist (skipped)
    Left-point nodes on both paths (pts_* already hold the n left nodes).
    """
    lx = np.asarray(pts_x)
    ly = np.asarray(pts_y)
    n = del_x.shape[0]
    coulomb = 0.0
    tanaka = 0.0
    moll = 0.0
    excluded = 0
    norm_eps = (2.0 * np.pi * eps * eps) ** -1.5
    block = max(1, int(2**21 // max(n, 1)))
    for j0 in range(0, n, block):
        j1 = min(n, j0 + block)
        d = lx[j0:j1, None, :] - ly[None, :, :]
        r = np.linalg.norm(d, axis=-1)
        ok = r >= min_dist
        excluded += int(np.sum(~ok))
        inv_r = np.where(ok, 1.0 / np.where(ok, r, 1.0), 0.0)
        coulomb += float(np.einsum("jb,bm,jm->", inv_r, del_y, del_x[j0:j1]))
        vec = np.einsum("jbm,jb->jm", d, inv_r**3) * dt
        tanaka += float(np.sum(vec * del_x[j0:j1]))
        moll += float(np.sum(np.exp(-0.5 * (r / eps) ** 2) * ok)) * norm_eps * dt * dt
    return coulomb, tanaka, moll, excluded


def area_sums(radii, wedge, qs):
    """V[i] = sum_j Psi(q_i * r_j) * wedge[j]  with the shape function
    Psi(z) = cos(z)/z - sin(z)/z^2  (Psi ~ -z/3 near zero).

    radii: (n,) node distances from the origin (zero entries pre-filtered)
    wedge: (n, 3) (X_j ^ dX_j)/||X_j||
    """
    out = np.empty((qs.size, 3))
    for i, q in enumerate(qs):
        z = q * radii
        small = z < 1e-4
        zs = np.where(small, 1.0, z)
        psi = np.where(small, -z / 3.0, np.cos(zs) / zs - np.sin(zs) / zs**2)
        out[i] = psi @ wedge
    return out
