"""Compact adaptive Runge-Kutta (Dormand-Prince 5(4)) with event stopping."""

from __future__ import annotations

import numpy as np

_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_C = [0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0]
_B5 = [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0]
_B4 = [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]


def rk45(f, x0, s_end, atol=1e-9, rtol=1e-9, stop=None, max_step=np.inf,
         record=None, max_iter=100000):
    """Integrate dx/ds = f(x) from s=0 to s_end (s_end > 0).

    stop(x) > 0 means keep going; the first sign change is localized by step
    bisection and integration halts there. Returns (s, x, stopped).
    """
    x = np.array(x0, dtype=float)
    s = 0.0
    h = min(max_step, s_end / 8 if s_end > 0 else 1e-3, 0.1)
    h = max(h, 1e-12)
    g0 = stop(x) if stop is not None else 1.0
    for _ in range(max_iter):
        if s >= s_end:
            return s, x, False
        h = min(h, s_end - s)
        ks = []
        ok = True
        for i in range(7):
            xi = x.copy()
            for j, a in enumerate(_A[i]):
                xi += h * a * ks[j]
            try:
                ks.append(np.asarray(f(xi), dtype=float))
            except Exception:
                ok = False
                break
        if not ok:
            h *= 0.5
            if h < 1e-14:
                return s, x, False
            continue
        x5 = x + h * sum(b * k for b, k in zip(_B5, ks))
        x4 = x + h * sum(b * k for b, k in zip(_B4, ks))
        err = np.max(np.abs(x5 - x4))
        scale = atol + rtol * max(1.0, float(np.max(np.abs(x5))))
        if err > scale and h > 1e-13:
            h *= max(0.2, 0.9 * (scale / (err + 1e-300)) ** 0.2)
            continue
        if stop is not None:
            g1 = stop(x5)
            if g0 > 0 >= g1:
                # bisect the step until the crossing is localized
                lo_s, lo_x = 0.0, x
                hi = h
                for _ in range(60):
                    mid = 0.5 * (lo_s + hi)
                    sm, xm, _ = rk45(f, lo_x, mid - lo_s, atol, rtol, None,
                                     max_step=mid - lo_s + 1e-30)
                    if stop(xm) > 0:
                        lo_s, lo_x = mid, xm
                    else:
                        hi = mid
                    if hi - lo_s < 1e-13 * max(1.0, abs(h)):
                        break
                sh, xh, _ = rk45(f, lo_x, hi - lo_s, atol, rtol, None)
                if record is not None:
                    record(s + hi, xh)
                return s + hi, xh, True
            g0 = g1
        s += h
        x = x5
        if record is not None:
            record(s, x)
        if err > 0:
            h *= min(5.0, 0.9 * (scale / (err + 1e-300)) ** 0.2)
        else:
            h *= 2.0
    return s, x, False
