import numpy as np
import pytest
from scipy import integrate

import filament_mc as fm
from filament_mc.integrals import transform_curve

from conftest import MASTER, make_bm, make_bridge

K = np.array([1.3, -0.7, 2.1])


def test_project_transverse_properties():
    rng = np.random.default_rng(0)
    k = rng.normal(size=3)
    assert np.allclose(fm.project_transverse(k, k), 0.0, atol=1e-15)
    v_perp = np.cross(k, rng.normal(size=3))
    assert np.allclose(fm.project_transverse(k, v_perp), v_perp, rtol=1e-12)
    for _ in range(20):
        v = rng.normal(size=3) + 1j * rng.normal(size=3)
        pv = fm.project_transverse(k, v)
        assert np.allclose(fm.project_transverse(k, pv), pv, rtol=1e-12, atol=1e-15)
        assert np.linalg.norm(pv) <= np.linalg.norm(v) + 1e-15
    with pytest.raises(ValueError):
        fm.project_transverse(np.zeros(3), v)


def test_integrals_at_k_zero_and_single_step():
    path = make_bm(0, steps=64)
    disp = path.points[-1] - path.points[0]
    assert np.allclose(fm.ito_integral(path, np.zeros(3)), disp, rtol=1e-14)
    assert np.allclose(fm.strat_integral(path, np.zeros(3)), disp, rtol=1e-14)

    one = make_bm(1, steps=1, x0=(0.5, 0.0, -0.5))
    x0 = one.points[0]
    expect = np.exp(1j * (K @ x0)) * (one.points[-1] - x0)
    assert np.allclose(fm.ito_integral(one, K), expect, rtol=1e-14)


def test_ito_isometry_projected():
    # oracle: discrete Ito isometry is exact: E ||p_k Y^W||^2 = 2T at any n
    T, n_paths = 1.0, 4000
    khat = K / np.linalg.norm(K)
    vals = np.empty(n_paths)
    for i in range(n_paths):
        y = fm.ito_integral(make_bm(i, steps=64, T=T), K)
        vals[i] = np.linalg.norm(y - (y @ khat) * khat) ** 2
    se = vals.std(ddof=1) / np.sqrt(n_paths)
    assert abs(vals.mean() - 2 * T) < 3 * se
    assert vals.mean() < 4 * T   # Theorem-level moment bound, C_b = 0


def test_strat_correction_and_chain_rule_rates():
    # strat - ito - (ik/2) sum e^{ik X} dt -> 0 like sqrt(dt);
    # ik.Y_strat - (e^{ik X_T} - e^{ik X_0}) -> 0 like dt
    steps = np.array([2**7, 2**9, 2**11])
    n_paths = 160
    resid = np.zeros(steps.size)
    chain = np.zeros(steps.size)
    for si, n in enumerate(steps):
        acc_r, acc_c = 0.0, 0.0
        for i in range(n_paths):
            path = make_bm(1000 * si + i, steps=int(n))
            ito = fm.ito_integral(path, K)
            strat = fm.strat_integral(path, K)
            corr = 0.5j * K * np.sum(np.exp(1j * (path.points[:-1] @ K))) * path.grid.dt
            acc_r += np.linalg.norm(strat - ito - corr) ** 2
            eb = np.exp(1j * (K @ path.points[-1])) - np.exp(1j * (K @ path.points[0]))
            acc_c += abs(1j * (K @ strat) - eb) ** 2
        resid[si] = np.sqrt(acc_r / n_paths)
        chain[si] = np.sqrt(acc_c / n_paths)
    r_slope = np.polyfit(np.log(steps), np.log(resid), 1)[0]
    c_slope = np.polyfit(np.log(steps), np.log(chain), 1)[0]
    assert -0.75 < r_slope < -0.3      # measured order: ~ dt^(1/2)
    assert -1.3 < c_slope < -0.75      # measured order: ~ dt


def test_backward_integral():
    path = make_bm(3, steps=128)
    assert np.array_equal(fm.backward_ito_integral(path, K, 0), np.zeros(3, dtype=complex))
    j = 77
    assert np.allclose(fm.backward_ito_integral(path, np.zeros(3), j),
                       path.points[j] - path.points[0], rtol=1e-14)
    with pytest.raises(ValueError):
        fm.backward_ito_integral(path, K, 129)
    # direct right-point evaluation oracle
    direct = sum(np.exp(1j * (K @ (path.points[j] - path.points[i + 1]))) * path.increments[i]
                 for i in range(j))
    assert np.allclose(fm.backward_ito_integral(path, K, j), direct, rtol=1e-12)


def test_backward_strat_consistency():
    # the backward-Ito sum plus the (ik/2) dt correction approaches the
    # backward midpoint evaluation as the grid refines (measured sign: the
    # midpoint state sits half an increment above the right point)
    rms = []
    for steps in (2**7, 2**9):
        gaps = []
        for i in range(20):
            path = make_bm(700 + i, steps=steps)
            j = steps
            x_t = path.points[j]
            mid = 0.5 * (path.points[:-1] + path.points[1:])
            back_mid = np.exp(1j * ((x_t - mid) @ K)) @ path.increments
            corr = 0.5j * K * np.sum(np.exp(1j * ((x_t - path.points[1:]) @ K))) * path.grid.dt
            gaps.append(np.linalg.norm(fm.backward_ito_integral(path, K, j) + corr - back_mid))
        rms.append(np.mean(gaps))
    assert rms[1] < 0.75 * rms[0]


def test_transform_matches_single_k_integrals(kgrid_small):
    path = make_bm(8, steps=256)
    for conv, ref in (("ito", fm.ito_integral), ("stratonovich", fm.strat_integral)):
        tr = fm.transform(path, kgrid_small, conv)
        for (i, a) in [(0, 0), (5, 3), (12, 17), (23, 63)]:
            k = kgrid_small.node(i, a)
            assert np.allclose(tr.values[i, a], ref(path, k), rtol=2e-5, atol=2e-6)


def test_transform_antipodal_conjugation(kgrid_small):
    tr = fm.transform(make_bm(9, steps=128), kgrid_small)
    h, anti = kgrid_small.half_index, kgrid_small.anti_index
    assert np.array_equal(tr.values[:, anti, :], tr.values[:, h, :].conj())


def test_transform_straight_line_vs_quadrature(kgrid_small):
    x0 = np.array([0.1, -0.2, 0.3])
    v = np.array([0.8, 0.5, -0.4])
    grid = fm.TimeGrid(1.0, 2**12)
    pts = x0 + grid.times[:, None] * v
    path = fm.Path(grid, pts, x0)
    tr = fm.transform(path, kgrid_small, "stratonovich")
    for (i, a) in [(3, 5), (15, 40)]:
        k = kgrid_small.node(i, a)

        def f_re(t, m):
            return np.cos(k @ (x0 + v * t)) * v[m]

        def f_im(t, m):
            return np.sin(k @ (x0 + v * t)) * v[m]

        oracle = np.array([
            integrate.quad(f_re, 0, 1, args=(m,), limit=200)[0]
            + 1j * integrate.quad(f_im, 0, 1, args=(m,), limit=200)[0]
            for m in range(3)])
        assert np.max(np.abs(tr.values[i, a] - oracle)) < 1e-6


def test_transform_translation_phase():
    # fallback backend is double precision end to end: machine-level check
    from filament_mc import _kernels_fallback as fb
    path = make_bm(11, steps=128)
    shift = np.array([0.4, -1.0, 0.2])
    cs = fm.CrossSection.gaussian(0.5)
    kg = fm.build_kgrid(cs, n_radial=8, n_theta=4, n_phi=4)

    def tr_fb(points):
        ev = 0.5 * (points[:-1] + points[1:])
        dots = np.ascontiguousarray((ev @ kg.directions[kg.half_index].T).T)
        yr, yi = fb.transform_sums(dots, kg.q, np.diff(points, axis=0))
        return yr + 1j * yi

    y0 = tr_fb(path.points)
    y1 = tr_fb(path.points + shift)
    phase = np.exp(1j * np.outer(kg.q, kg.directions[kg.half_index] @ shift))[:, :, None]
    assert np.allclose(y1, phase * y0, rtol=1e-11, atol=1e-13)

    # compiled backend trades ~1e-7 trig accuracy for speed
    t0 = fm.transform(path, kg)
    t1 = fm.transform(fm.Path(path.grid, path.points + shift, path.x0 + shift), kg)
    assert np.allclose(np.abs(t1.values), np.abs(t0.values), rtol=1e-4, atol=1e-6)


def test_closed_path_parallel_component_vanishes(kgrid_small):
    meds = []
    for steps in (2**7, 2**9):
        vals = []
        for i in range(12):
            tr = fm.transform(make_bridge(i, steps=steps), kgrid_small)
            vals.append(np.max(np.abs(tr.parallel) * kgrid_small.q[:, None]))
        meds.append(np.median(vals))
    assert meds[1] < meds[0]


def test_transverse_convention_gap_rate(kgrid_small):
    # the transverse parts of the two conventions converge to each other:
    # at fixed resolved k the gap decays like sqrt(dt) (ratio ~ 2 per 4x
    # refinement), and the nu-weighted node rms decays monotonically.  At
    # unresolved nodes (q^2 dt >~ 1, the top of the default k-window) the
    # gap saturates, so no max-over-nodes rate exists at desk-scale n;
    # see the decisions ledger.
    k_fix = np.array([2.0, 1.5, -1.0])
    khat = k_fix / np.linalg.norm(k_fix)
    w = kgrid_small.nu_weights
    fixed, weighted = [], []
    for steps in (2**7, 2**9):
        acc_f, acc_w = [], []
        for i in range(24):
            path = make_bm(300 + i, steps=steps)
            yi_ = fm.ito_integral(path, k_fix)
            ys_ = fm.strat_integral(path, k_fix)
            gap = (yi_ - ys_) - khat * ((yi_ - ys_) @ khat)
            acc_f.append(np.linalg.norm(gap) ** 2)
            ti = fm.transform(path, kgrid_small, "ito")
            ts = fm.transform(path, kgrid_small, "stratonovich")
            d = ti.perp - ts.perp
            acc_w.append(np.sum(w * np.einsum("ram,ram->ra", d, d.conj()).real))
        fixed.append(np.sqrt(np.mean(acc_f)))
        weighted.append(np.sqrt(np.mean(acc_w)))
    ratio = fixed[0] / fixed[1]
    assert 1.4 < ratio < 3.0
    assert weighted[1] < weighted[0]


def test_perp_norm_contraction(kgrid_small):
    tr = fm.transform(make_bm(17, steps=128), kgrid_small)
    norm_y = np.einsum("ram,ram->ra", tr.values, tr.values.conj()).real
    assert np.all(tr.perp2 <= norm_y + 1e-12)
    assert np.all(tr.perp2 >= 0)
    assert np.all(tr.par2 >= 0)


def test_transform_curve_matches_path_transform(kgrid_small):
    # a polygonal "curve" with the same midpoints and increments agrees
    path = make_bm(19, steps=64)
    tr = fm.transform(path, kgrid_small, "stratonovich")
    tc = transform_curve(path.midpoints, path.increments, kgrid_small)
    assert np.allclose(tr.values, tc.values, rtol=0, atol=0)


def test_moment_bound_nodewise(kgrid_small):
    # E ||p_k Y^W||^2 <= 4T + 2 C_b (= 4T for BM) at every node
    n_paths, T = 400, 1.0
    acc = np.zeros((kgrid_small.n_radial, kgrid_small.n_angular))
    for i in range(n_paths):
        tr = fm.transform(make_bm(500 + i, steps=64, T=T), kgrid_small, "ito")
        acc += tr.perp2
    mean = acc / n_paths
    assert np.all(mean <= 4 * T)
    # and the exact isometry value 2T within 5 SE at the grid level
    assert abs(mean.mean() - 2 * T) < 0.05
