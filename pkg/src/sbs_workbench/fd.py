"""Finite-difference stencils used by the verification routines.

Central differences with default step 1e-4; callers escalate to a
Richardson combination (error O(h^4)) when a tolerance is missed.
All helpers are vectorized over arrays of chart points.
"""

from __future__ import annotations

import numpy as np


def grad_central(fn, z, h: float, richardson: bool = False):
    """Gradient (d/dx, d/dy) of a scalar function of a complex coordinate."""

    def plain(step):
        gx = (fn(z + step) - fn(z - step)) / (2 * step)
        gy = (fn(z + 1j * step) - fn(z - 1j * step)) / (2 * step)
        return gx, gy

    gx, gy = plain(h)
    if richardson:
        gx2, gy2 = plain(h / 2)
        gx = (4 * gx2 - gx) / 3
        gy = (4 * gy2 - gy) / 3
    return gx, gy


def curl_central(form_fn, z, h: float, richardson: bool = False):
    """d(c_x dx + c_y dy) coefficient, i.e. d/dx c_y - d/dy c_x."""

    def plain(step):
        cy_xp = form_fn(z + step)[1]
        cy_xm = form_fn(z - step)[1]
        cx_yp = form_fn(z + 1j * step)[0]
        cx_ym = form_fn(z - 1j * step)[0]
        return (cy_xp - cy_xm) / (2 * step) - (cx_yp - cx_ym) / (2 * step)

    val = plain(h)
    if richardson:
        val2 = plain(h / 2)
        val = (4 * val2 - val) / 3
    return val


def diff5(fn_1d, x, h: float):
    """Five-point first derivative, error O(h^4); fn_1d maps arrays to arrays."""
    return (fn_1d(x - 2 * h) - 8 * fn_1d(x - h)
            + 8 * fn_1d(x + h) - fn_1d(x + 2 * h)) / (12 * h)
