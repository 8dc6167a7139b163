"""Compiled adaptive Gauss-Kronrod kernels for integrals of a(x) exp(i lam Phi(x)).

Phase polynomials are dense coefficient arrays C[i, j] of x1^i x2^j.  Subdivision uses an
explicit LIFO stack, so the evaluation order (and therefore the result) is deterministic.
"""
import numpy as np
from numba import njit

EPS = 2.220446049250313e-16
KIND_PRODUCT = 0
KIND_RADIAL = 1


@njit(cache=True)
def bump(u):
    """Smooth even profile in u = |x|/r: 1 on u <= 1/2, 0 on u >= 1."""
    if u <= 0.5:
        return 1.0
    if u >= 1.0:
        return 0.0
    t = (u - 0.5) * 2.0
    a = np.exp(-1.0 / (1.0 - t))
    b = np.exp(-1.0 / t)
    return a / (a + b)


@njit(cache=True)
def _horner(q, x):
    v = 0.0
    for j in range(q.shape[0] - 1, -1, -1):
        v = v * x + q[j]
    return v


@njit(cache=True)
def _dhorner(q, x):
    v = 0.0
    for j in range(q.shape[0] - 1, 0, -1):
        v = v * x + j * q[j]
    return v


@njit(cache=True)
def _d2horner(q, x):
    v = 0.0
    for j in range(q.shape[0] - 1, 1, -1):
        v = v * x + j * (j - 1) * q[j]
    return v


@njit(cache=True)
def _panel_err(kr, ki, gr, gi, asc, resabs):
    # QUADPACK-style scaling of the Kronrod/Gauss disagreement
    e = np.hypot(kr - gr, ki - gi)
    if asc != 0.0 and e != 0.0:
        e = asc * min(1.0, (200.0 * e / asc) ** 1.5)
    floor = 50.0 * EPS * resabs
    if floor > e:
        e = floor
    return e


@njit(cache=True)
def inner_integral(q, lam, kind, x1, c1, c2, r1, r2, lo, hi, tol_dens, c_osc, omega,
                   max_depth, xs, wk, wg):
    """int_lo^hi amp(x1, x2) exp(i lam q(x2)) dx2 with q a polynomial in x2.

    For KIND_PRODUCT only the x2 factor of the amplitude is applied here.
    Returns (re, im, err, flagged, nevals).
    """
    npts = xs.shape[0]
    if hi <= lo:
        return 0.0, 0.0, 0.0, False, 0
    H = 0.0
    for s in range(9):
        x = lo + (hi - lo) * s / 8.0
        H = max(H, abs(_d2horner(q, x)))
    cap = c_osc / (1.0 + np.sqrt(lam * (1.0 + H)))
    k = int(np.ceil((hi - lo) / cap))
    if k < 1:
        k = 1
    size = k + 2 * max_depth + 4
    sa = np.empty(size)
    sb = np.empty(size)
    sd = np.empty(size, np.int64)
    n = 0
    w = (hi - lo) / k
    for i in range(k - 1, -1, -1):
        sa[n] = lo + i * w
        sb[n] = lo + (i + 1) * w
        sd[n] = 0
        n += 1
    tr = 0.0
    ti = 0.0
    err = 0.0
    flagged = False
    nev = 0
    fr = np.empty(npts)
    fi = np.empty(npts)
    while n > 0:
        n -= 1
        a = sa[n]
        b = sb[n]
        d = sd[n]
        mid = 0.5 * (a + b)
        half = 0.5 * (b - a)
        if omega > 0.0 and d < max_depth:
            g = max(abs(_dhorner(q, a)), abs(_dhorner(q, mid)), abs(_dhorner(q, b)))
            if lam * g * (b - a) > omega:
                sa[n] = mid
                sb[n] = b
                sd[n] = d + 1
                n += 1
                sa[n] = a
                sb[n] = mid
                sd[n] = d + 1
                n += 1
                continue
        kr = 0.0
        ki = 0.0
        gr = 0.0
        gi = 0.0
        rabs = 0.0
        for m in range(npts):
            x = mid + half * xs[m]
            if kind == KIND_PRODUCT:
                amp = bump(abs(x - c2) / r2)
            else:
                amp = bump(np.sqrt(((x1 - c1) / r1) ** 2 + ((x - c2) / r2) ** 2))
            if amp == 0.0:
                fr[m] = 0.0
                fi[m] = 0.0
                continue
            ph = lam * _horner(q, x)
            fr[m] = amp * np.cos(ph)
            fi[m] = amp * np.sin(ph)
            kr += wk[m] * fr[m]
            ki += wk[m] * fi[m]
            gr += wg[m] * fr[m]
            gi += wg[m] * fi[m]
            rabs += wk[m] * amp
        nev += npts
        mr = 0.5 * kr
        mi = 0.5 * ki
        asc = 0.0
        for m in range(npts):
            asc += wk[m] * np.hypot(fr[m] - mr, fi[m] - mi)
        e = _panel_err(kr * half, ki * half, gr * half, gi * half, asc * half, rabs * half)
        ok = e <= tol_dens * (b - a)
        if ok or d >= max_depth:
            if not ok:
                flagged = True
            tr += kr * half
            ti += ki * half
            err += e
        else:
            sa[n] = mid
            sb[n] = b
            sd[n] = d + 1
            n += 1
            sa[n] = a
            sb[n] = mid
            sd[n] = d + 1
            n += 1
    return tr, ti, err, flagged, nev


@njit(cache=True)
def _column_coeffs(C, x1, q):
    d1 = C.shape[0] - 1
    for j in range(C.shape[1]):
        v = 0.0
        for i in range(d1, -1, -1):
            v = v * x1 + C[i, j]
        q[j] = v


@njit(cache=True)
def _outer_frequency(C, x1, lo2, hi2, q, dq):
    """|d Phi/dx1| at the stationary points of x2 -> Phi(x1, x2) on [lo2, hi2].

    This is the local frequency of the inner integral as a function of x1.  With no
    stationary point the point of smallest |d Phi/dx2| stands in.
    """
    _column_coeffs(C, x1, q)
    # dq: coefficients of d Phi / dx1 in x2
    d1 = C.shape[0] - 1
    for j in range(C.shape[1]):
        v = 0.0
        for i in range(d1, 0, -1):
            v = v * x1 + i * C[i, j]
        dq[j] = v
    ns = 33
    best = 0.0
    found = False
    xm = lo2
    gm = 1e300
    prev_x = lo2
    prev_g = _dhorner(q, lo2)
    for s in range(ns):
        x = lo2 + (hi2 - lo2) * s / (ns - 1)
        g = _dhorner(q, x)
        if abs(g) < gm:
            gm = abs(g)
            xm = x
        if s > 0 and prev_g * g <= 0.0:
            a = prev_x
            b = x
            ga = prev_g
            for _ in range(40):
                c = 0.5 * (a + b)
                gc = _dhorner(q, c)
                if ga * gc <= 0.0:
                    b = c
                else:
                    a = c
                    ga = gc
            f = abs(_horner(dq, 0.5 * (a + b)))
            if f > best:
                best = f
            found = True
        prev_x = x
        prev_g = g
    if not found:
        best = abs(_horner(dq, xm))
    return best


@njit(cache=True)
def integrate2d(C, lam, kind, c1, c2, r1, r2, abs_tol, c_osc, omega, max_depth, xs, wk, wg):
    """Iterated adaptive quadrature, outer x1 and inner x2.

    Returns (re, im, err, flagged, nevals).
    """
    npts = xs.shape[0]
    d1 = C.shape[0] - 1
    d2 = C.shape[1] - 1
    lo = c1 - r1
    hi = c1 + r1
    # max |d^2 Phi / dx1^2| on a 9x9 sample of the support box
    H = 0.0
    for s in range(9):
        x1 = lo + (hi - lo) * s / 8.0
        for t in range(9):
            x2 = c2 - r2 + 2.0 * r2 * t / 8.0
            v = 0.0
            for i in range(d1, 1, -1):
                row = 0.0
                for j in range(d2, -1, -1):
                    row = row * x2 + C[i, j]
                v = v * x1 + i * (i - 1) * row
            H = max(H, abs(v))
    cap = c_osc / (1.0 + np.sqrt(lam * (1.0 + H)))
    k = int(np.ceil((hi - lo) / cap))
    if k < 1:
        k = 1
    size = k + 2 * max_depth + 4
    sa = np.empty(size)
    sb = np.empty(size)
    sd = np.empty(size, np.int64)
    n = 0
    w = (hi - lo) / k
    for i in range(k - 1, -1, -1):
        sa[n] = lo + i * w
        sb[n] = lo + (i + 1) * w
        sd[n] = 0
        n += 1
    tol1 = abs_tol / (2.0 * r1)
    tol2 = abs_tol / (2.0 * r1) / (2.0 * r2)
    q = np.empty(d2 + 1)
    dq = np.empty(d2 + 1)
    fr = np.empty(npts)
    fi = np.empty(npts)
    fa = np.empty(npts)
    tr = 0.0
    ti = 0.0
    err = 0.0
    flagged = False
    nev = 0
    while n > 0:
        n -= 1
        a = sa[n]
        b = sb[n]
        d = sd[n]
        mid = 0.5 * (a + b)
        half = 0.5 * (b - a)
        if omega > 0.0 and d < max_depth:
            f = 0.0
            for x1 in (a, mid, b):
                if kind == KIND_PRODUCT:
                    ilo = c2 - r2
                    ihi = c2 + r2
                else:
                    u = (x1 - c1) / r1
                    hw = r2 * np.sqrt(max(0.0, 1.0 - u * u))
                    ilo = c2 - hw
                    ihi = c2 + hw
                if ihi > ilo:
                    f = max(f, _outer_frequency(C, x1, ilo, ihi, q, dq))
            if lam * f * (b - a) > omega:
                sa[n] = mid
                sb[n] = b
                sd[n] = d + 1
                n += 1
                sa[n] = a
                sb[n] = mid
                sd[n] = d + 1
                n += 1
                continue
        kr = 0.0
        ki = 0.0
        gr = 0.0
        gi = 0.0
        rabs = 0.0
        ierr = 0.0
        for m in range(npts):
            x1 = mid + half * xs[m]
            if kind == KIND_PRODUCT:
                amp = bump(abs(x1 - c1) / r1)
                ilo = c2 - r2
                ihi = c2 + r2
            else:
                u = (x1 - c1) / r1
                amp = 1.0 if abs(u) < 1.0 else 0.0
                hw = r2 * np.sqrt(max(0.0, 1.0 - u * u))
                ilo = c2 - hw
                ihi = c2 + hw
            if amp == 0.0:
                fr[m] = 0.0
                fi[m] = 0.0
                fa[m] = 0.0
                continue
            _column_coeffs(C, x1, q)
            vr, vi, ve, vf, vn = inner_integral(q, lam, kind, x1, c1, c2, r1, r2, ilo, ihi, tol2,
                                                c_osc, omega, max_depth, xs, wk, wg)
            nev += vn
            if vf:
                flagged = True
            fr[m] = amp * vr
            fi[m] = amp * vi
            fa[m] = amp * (ihi - ilo)
            kr += wk[m] * fr[m]
            ki += wk[m] * fi[m]
            gr += wg[m] * fr[m]
            gi += wg[m] * fi[m]
            rabs += wk[m] * np.hypot(fr[m], fi[m])
            ierr += wk[m] * amp * ve
        mr = 0.5 * kr
        mi = 0.5 * ki
        asc = 0.0
        for m in range(npts):
            asc += wk[m] * np.hypot(fr[m] - mr, fi[m] - mi)
        e = _panel_err(kr * half, ki * half, gr * half, gi * half, asc * half, rabs * half)
        ok = e <= tol1 * (b - a)
        if ok or d >= max_depth:
            if not ok:
                flagged = True
            tr += kr * half
            ti += ki * half
            err += e + half * ierr
        else:
            sa[n] = mid
            sb[n] = b
            sd[n] = d + 1
            n += 1
            sa[n] = a
            sb[n] = mid
            sd[n] = d + 1
            n += 1
    return tr, ti, err, flagged, nev


# ---------------------------------------------------------------- many lambdas on one mesh
#
# lam_k = lam0 + k * dlam, k < K.  The mesh is built for the largest lam_k, which also resolves
# every smaller one; exp(i lam_k p) comes from the recurrence exp(i lam0 p) exp(i dlam p)^k, so a
# node costs one pair of trig calls plus K complex products.  Errors are tracked per lambda and a
# panel is accepted when the worst of them meets the tolerance.


@njit(cache=True)
def _panel_errs(fr, fi, npts, K, half, wk, wg, ea, ok_tol, errs):
    # fills errs[k] for this panel; returns max_k errs[k] <= ok_tol
    ok = True
    for k in range(K):
        kr = 0.0
        ki = 0.0
        gr = 0.0
        gi = 0.0
        for m in range(npts):
            kr += wk[m] * fr[m * K + k]
            ki += wk[m] * fi[m * K + k]
            gr += wg[m] * fr[m * K + k]
            gi += wg[m] * fi[m * K + k]
        mr = 0.5 * kr
        mi = 0.5 * ki
        asc = 0.0
        for m in range(npts):
            asc += wk[m] * np.hypot(fr[m * K + k] - mr, fi[m * K + k] - mi)
        e = _panel_err(kr * half, ki * half, gr * half, gi * half, asc * half, ea * half)
        errs[k] = e
        if e > ok_tol:
            ok = False
    return ok


@njit(cache=True)
def inner_multi(q, lam0, dlam, K, kind, x1, c1, c2, r1, r2, lo, hi, tol_dens, c_osc, omega,
                max_depth, xs, wk, wg, out_r, out_i, out_e, fr, fi, errs):
    """Vector-in-lambda version of inner_integral; results in out_r/out_i/out_e.

    Returns (flagged, nevals).
    """
    npts = xs.shape[0]
    for k in range(K):
        out_r[k] = 0.0
        out_i[k] = 0.0
        out_e[k] = 0.0
    if hi <= lo:
        return False, 0
    lam = lam0 + (K - 1) * dlam
    H = 0.0
    for s in range(9):
        x = lo + (hi - lo) * s / 8.0
        H = max(H, abs(_d2horner(q, x)))
    cap = c_osc / (1.0 + np.sqrt(lam * (1.0 + H)))
    nk = int(np.ceil((hi - lo) / cap))
    if nk < 1:
        nk = 1
    size = nk + 2 * max_depth + 4
    sa = np.empty(size)
    sb = np.empty(size)
    sd = np.empty(size, np.int64)
    n = 0
    w = (hi - lo) / nk
    for i in range(nk - 1, -1, -1):
        sa[n] = lo + i * w
        sb[n] = lo + (i + 1) * w
        sd[n] = 0
        n += 1
    flagged = False
    nev = 0
    while n > 0:
        n -= 1
        a = sa[n]
        b = sb[n]
        d = sd[n]
        mid = 0.5 * (a + b)
        half = 0.5 * (b - a)
        if omega > 0.0 and d < max_depth:
            g = max(abs(_dhorner(q, a)), abs(_dhorner(q, mid)), abs(_dhorner(q, b)))
            if lam * g * (b - a) > omega:
                sa[n] = mid
                sb[n] = b
                sd[n] = d + 1
                n += 1
                sa[n] = a
                sb[n] = mid
                sd[n] = d + 1
                n += 1
                continue
        rabs = 0.0
        for m in range(npts):
            x = mid + half * xs[m]
            if kind == KIND_PRODUCT:
                amp = bump(abs(x - c2) / r2)
            else:
                amp = bump(np.sqrt(((x1 - c1) / r1) ** 2 + ((x - c2) / r2) ** 2))
            if amp == 0.0:
                for k in range(K):
                    fr[m * K + k] = 0.0
                    fi[m * K + k] = 0.0
                continue
            p = _horner(q, x)
            cr = amp * np.cos(lam0 * p)
            ci = amp * np.sin(lam0 * p)
            sr = np.cos(dlam * p)
            si = np.sin(dlam * p)
            for k in range(K):
                fr[m * K + k] = cr
                fi[m * K + k] = ci
                t = cr * sr - ci * si
                ci = cr * si + ci * sr
                cr = t
            rabs += wk[m] * amp
        nev += npts
        ok = _panel_errs(fr, fi, npts, K, half, wk, wg, rabs, tol_dens * (b - a), errs)
        if ok or d >= max_depth:
            if not ok:
                flagged = True
            for k in range(K):
                kr = 0.0
                ki = 0.0
                for m in range(npts):
                    kr += wk[m] * fr[m * K + k]
                    ki += wk[m] * fi[m * K + k]
                out_r[k] += kr * half
                out_i[k] += ki * half
                out_e[k] += errs[k]
        else:
            sa[n] = mid
            sb[n] = b
            sd[n] = d + 1
            n += 1
            sa[n] = a
            sb[n] = mid
            sd[n] = d + 1
            n += 1
    return flagged, nev


@njit(cache=True)
def integrate2d_multi(C, lam0, dlam, K, kind, c1, c2, r1, r2, abs_tol, c_osc, omega, max_depth,
                      xs, wk, wg):
    """integrate2d for lam_k = lam0 + k dlam, k < K.  Returns (re[K], im[K], err[K], flagged, nevals)."""
    npts = xs.shape[0]
    d1 = C.shape[0] - 1
    d2 = C.shape[1] - 1
    lam = lam0 + (K - 1) * dlam
    lo = c1 - r1
    hi = c1 + r1
    H = 0.0
    for s in range(9):
        x1 = lo + (hi - lo) * s / 8.0
        for t in range(9):
            x2 = c2 - r2 + 2.0 * r2 * t / 8.0
            v = 0.0
            for i in range(d1, 1, -1):
                row = 0.0
                for j in range(d2, -1, -1):
                    row = row * x2 + C[i, j]
                v = v * x1 + i * (i - 1) * row
            H = max(H, abs(v))
    cap = c_osc / (1.0 + np.sqrt(lam * (1.0 + H)))
    nk = int(np.ceil((hi - lo) / cap))
    if nk < 1:
        nk = 1
    size = nk + 2 * max_depth + 4
    sa = np.empty(size)
    sb = np.empty(size)
    sd = np.empty(size, np.int64)
    n = 0
    w = (hi - lo) / nk
    for i in range(nk - 1, -1, -1):
        sa[n] = lo + i * w
        sb[n] = lo + (i + 1) * w
        sd[n] = 0
        n += 1
    tol1 = abs_tol / (2.0 * r1)
    tol2 = abs_tol / (2.0 * r1) / (2.0 * r2)
    q = np.empty(d2 + 1)
    dq = np.empty(d2 + 1)
    fr = np.empty(npts * K)
    fi = np.empty(npts * K)
    ierr = np.empty(K)
    errs = np.empty(K)
    # inner workspace
    ir = np.empty(K)
    ii = np.empty(K)
    ie = np.empty(K)
    wfr = np.empty(npts * K)
    wfi = np.empty(npts * K)
    werr = np.empty(K)
    tr = np.zeros(K)
    ti = np.zeros(K)
    err = np.zeros(K)
    flagged = False
    nev = 0
    while n > 0:
        n -= 1
        a = sa[n]
        b = sb[n]
        d = sd[n]
        mid = 0.5 * (a + b)
        half = 0.5 * (b - a)
        if omega > 0.0 and d < max_depth:
            f = 0.0
            for x1 in (a, mid, b):
                if kind == KIND_PRODUCT:
                    ilo = c2 - r2
                    ihi = c2 + r2
                else:
                    u = (x1 - c1) / r1
                    hw = r2 * np.sqrt(max(0.0, 1.0 - u * u))
                    ilo = c2 - hw
                    ihi = c2 + hw
                if ihi > ilo:
                    f = max(f, _outer_frequency(C, x1, ilo, ihi, q, dq))
            if lam * f * (b - a) > omega:
                sa[n] = mid
                sb[n] = b
                sd[n] = d + 1
                n += 1
                sa[n] = a
                sb[n] = mid
                sd[n] = d + 1
                n += 1
                continue
        rabs = 0.0
        for k in range(K):
            ierr[k] = 0.0
        for m in range(npts):
            x1 = mid + half * xs[m]
            if kind == KIND_PRODUCT:
                amp = bump(abs(x1 - c1) / r1)
                ilo = c2 - r2
                ihi = c2 + r2
            else:
                u = (x1 - c1) / r1
                amp = 1.0 if abs(u) < 1.0 else 0.0
                hw = r2 * np.sqrt(max(0.0, 1.0 - u * u))
                ilo = c2 - hw
                ihi = c2 + hw
            if amp == 0.0:
                for k in range(K):
                    fr[m * K + k] = 0.0
                    fi[m * K + k] = 0.0
                continue
            _column_coeffs(C, x1, q)
            vf, vn = inner_multi(q, lam0, dlam, K, kind, x1, c1, c2, r1, r2, ilo, ihi, tol2, c_osc,
                                 omega, max_depth, xs, wk, wg, ir, ii, ie, wfr, wfi, werr)
            nev += vn
            if vf:
                flagged = True
            for k in range(K):
                fr[m * K + k] = amp * ir[k]
                fi[m * K + k] = amp * ii[k]
                ierr[k] += wk[m] * amp * ie[k]
            rabs += wk[m] * amp * (ihi - ilo)
        ok = _panel_errs(fr, fi, npts, K, half, wk, wg, rabs, tol1 * (b - a), errs)
        if ok or d >= max_depth:
            if not ok:
                flagged = True
            for k in range(K):
                kr = 0.0
                ki = 0.0
                for m in range(npts):
                    kr += wk[m] * fr[m * K + k]
                    ki += wk[m] * fi[m * K + k]
                tr[k] += kr * half
                ti[k] += ki * half
                err[k] += errs[k] + half * ierr[k]
        else:
            sa[n] = mid
            sb[n] = b
            sd[n] = d + 1
            n += 1
            sa[n] = a
            sb[n] = mid
            sd[n] = d + 1
            n += 1
    return tr, ti, err, flagged, nev
