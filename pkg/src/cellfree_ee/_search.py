"""Golden-section line search and bracketing root finder."""

import math

import numpy as np

INV_PHI = (math.sqrt(5) - 1) / 2


def golden_section_max(f, a, b, tol=1e-9, max_iter=200):
    """Maximize a unimodal ``f`` on ``[a, b]``; returns ``(x, f(x))``.

    The endpoints are compared against the interior optimum so that a
    monotone objective returns its boundary.
    """
    lo, hi = a, b
    c = hi - INV_PHI * (hi - lo)
    d = lo + INV_PHI * (hi - lo)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if hi - lo <= tol * max(1.0, abs(lo) + abs(hi)):
            break
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - INV_PHI * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + INV_PHI * (hi - lo)
            fd = f(d)
    x = c if fc >= fd else d
    best = (x, max(fc, fd))
    for end in (a, b):
        fe = f(end)
        if fe > best[1]:
            best = (end, fe)
    return best


def bisect(f, a, b, xtol=1e-10, max_iter=500):
    """Root of ``f`` in ``[a, b]`` where ``f(a)`` and ``f(b)`` differ in sign."""
    fa, fb = f(a), f(b)
    if fa == 0:
        return a
    if fb == 0:
        return b
    if np.sign(fa) == np.sign(fb):
        raise ValueError("root is not bracketed")
    for _ in range(max_iter):
        m = 0.5 * (a + b)
        fm = f(m)
        if fm == 0 or (b - a) <= xtol:
            break
        if np.sign(fm) == np.sign(fa):
            a, fa = m, fm
        else:
            b, fb = m, fm
    m = 0.5 * (a + b)
    # return the best of the final bracket
    return min((a, b, m), key=lambda x: abs(f(x)))


def real_roots(coeffs, lo, hi, n_grid=4000, xtol=1e-10):
    """Real roots of a polynomial on ``[lo, hi]`` by sign-change bracketing.

    ``coeffs`` are in increasing degree order. A sign scan on a uniform grid
    brackets each simple root, which is then refined by bisection. Roots of
    even multiplicity are not detected.
    """
    poly = np.polynomial.Polynomial(coeffs)
    xs = np.linspace(lo, hi, n_grid + 1)
    ys = poly(xs)
    roots = []
    for i in range(n_grid):
        y0, y1 = ys[i], ys[i + 1]
        if y0 == 0:
            roots.append(float(xs[i]))
        elif y0 * y1 < 0:
            roots.append(float(bisect(poly, xs[i], xs[i + 1], xtol=xtol)))
    if ys[-1] == 0:
        roots.append(float(xs[-1]))
    return roots
