"""Gauss-Kronrod rules on [-1, 1] for arbitrary Gauss order.

The Stieltjes polynomial E_{n+1} is found exactly from the orthogonality conditions
int P_n E_{n+1} x^k dx = 0 (k = 0..n) in rational arithmetic; its roots and the
interpolatory weights are then computed in extended precision with mpmath.
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from typing import Tuple

import mpmath as mp
import numpy as np
import sympy as sp


def _legendre_coeffs(n: int):
    x = sp.Symbol("x")
    return [sp.Rational(c) for c in reversed(sp.Poly(sp.legendre(n, x), x).all_coeffs())]


def _moment(k: int) -> sp.Rational:
    return sp.Rational(0) if k % 2 else sp.Rational(2, k + 1)


@lru_cache(maxsize=None)
def gauss_kronrod(n: int, dps: int = 60) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Nodes (ascending), Kronrod weights and Gauss weights (zero at Kronrod-only nodes)."""
    if n < 1:
        raise ValueError("Gauss order must be positive")
    p = _legendre_coeffs(n)
    # unknown e_0..e_n, leading coefficient e_{n+1} = 1
    A = sp.zeros(n + 1, n + 1)
    rhs = sp.zeros(n + 1, 1)
    for k in range(n + 1):
        for i in range(n + 2):
            val = sum(pc * _moment(a + i + k) for a, pc in enumerate(p) if pc != 0)
            if i == n + 1:
                rhs[k] = -val
            else:
                A[k, i] = val
    e = list(A.LUsolve(rhs)) + [sp.Integer(1)]
    with mp.workdps(dps):
        def mpq(c):
            c = sp.Rational(c)
            return mp.mpf(int(c.p)) / int(c.q)

        ek = [mpq(c) for c in reversed(e)]
        kron = [mp.re(r) for r in mp.polyroots(ek, maxsteps=400, extraprec=4 * dps)]
        pk = [mpq(c) for c in reversed(p)]
        gauss = [mp.re(r) for r in mp.polyroots(pk, maxsteps=400, extraprec=4 * dps)]
        nodes = sorted(kron + gauss)
        N = len(nodes)
        V = mp.matrix(N, N)
        b = mp.matrix(N, 1)
        for k in range(N):
            for j, x in enumerate(nodes):
                V[k, j] = x ** k
            b[k] = mp.mpf(2) / (k + 1) if k % 2 == 0 else mp.mpf(0)
        wk = mp.lu_solve(V, b)
        Vg = mp.matrix(n, n)
        bg = mp.matrix(n, 1)
        gs = sorted(gauss)
        for k in range(n):
            for j, x in enumerate(gs):
                Vg[k, j] = x ** k
            bg[k] = mp.mpf(2) / (k + 1) if k % 2 == 0 else mp.mpf(0)
        wg_only = mp.lu_solve(Vg, bg)
        xs = np.array([float(x) for x in nodes])
        wks = np.array([float(w) for w in wk])
        wgs = np.zeros(N)
        gset = [float(x) for x in gs]
        for i, x in enumerate(xs):
            for j, g in enumerate(gset):
                if abs(x - g) < 1e-14:
                    wgs[i] = float(wg_only[j])
    if np.count_nonzero(wgs) != n:
        raise RuntimeError("failed to separate Gauss nodes")
    return xs, wks, wgs
