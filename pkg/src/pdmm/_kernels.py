"""Projector kernels: line-driven (interpolating) and strip-driven
(area-weighted) parallel-beam discretizations.

Every kernel exists twice with identical arithmetic: a loop build compiled
with numba ``@njit`` and a vectorized pure-numpy build.  The active path is
chosen at import time (see :mod:`pdmm._accel`); both are importable for the
benchmark in ``benchmarks/bench_projectors.py``.

Conventions: image is m x n with pixel spacing h, pixel (i, j) centered at
x = (j - (n-1)/2) h, y = ((m-1)/2 - i) h; the detector axis for angle theta
is (cos theta, sin theta), bins centered at s0 + k * ds.
"""

import math

import numpy as np

from ._accel import USE_NUMBA

# ---------------------------------------------------------------------------
# loop kernels (numba targets)
# ---------------------------------------------------------------------------


def _line_forward_loops(img, cos_t, sin_t, s0, ds, n_bins, h):
    m, n = img.shape
    n_angles = cos_t.shape[0]
    out = np.zeros((n_angles, n_bins))
    for a in range(n_angles):
        c = cos_t[a]
        s = sin_t[a]
        ac = abs(c)
        as_ = abs(s)
        if ac >= as_:
            # march over rows, interpolate between columns
            dl = h / ac
            for b in range(n_bins):
                sd = s0 + b * ds
                acc = 0.0
                for i in range(m):
                    y = ((m - 1) * 0.5 - i) * h
                    cc = (sd - y * s) / (c * h) + (n - 1) * 0.5
                    j0 = int(math.floor(cc))
                    w = cc - j0
                    if 0 <= j0 < n:
                        acc += (1.0 - w) * img[i, j0]
                    if 0 <= j0 + 1 < n:
                        acc += w * img[i, j0 + 1]
                out[a, b] = acc * dl
        else:
            dl = h / as_
            for b in range(n_bins):
                sd = s0 + b * ds
                acc = 0.0
                for j in range(n):
                    x = (j - (n - 1) * 0.5) * h
                    rr = (m - 1) * 0.5 - (sd - x * c) / (s * h)
                    i0 = int(math.floor(rr))
                    w = rr - i0
                    if 0 <= i0 < m:
                        acc += (1.0 - w) * img[i0, j]
                    if 0 <= i0 + 1 < m:
                        acc += w * img[i0 + 1, j]
                out[a, b] = acc * dl
    return out


def _line_backward_loops(sino, cos_t, sin_t, s0, ds, m, n, h):
    n_angles, n_bins = sino.shape
    out = np.zeros((m, n))
    for a in range(n_angles):
        c = cos_t[a]
        s = sin_t[a]
        ac = abs(c)
        as_ = abs(s)
        if ac >= as_:
            dl = h / ac
            for b in range(n_bins):
                val = sino[a, b] * dl
                sd = s0 + b * ds
                for i in range(m):
                    y = ((m - 1) * 0.5 - i) * h
                    cc = (sd - y * s) / (c * h) + (n - 1) * 0.5
                    j0 = int(math.floor(cc))
                    w = cc - j0
                    if 0 <= j0 < n:
                        out[i, j0] += (1.0 - w) * val
                    if 0 <= j0 + 1 < n:
                        out[i, j0 + 1] += w * val
        else:
            dl = h / as_
            for b in range(n_bins):
                val = sino[a, b] * dl
                sd = s0 + b * ds
                for j in range(n):
                    x = (j - (n - 1) * 0.5) * h
                    rr = (m - 1) * 0.5 - (sd - x * c) / (s * h)
                    i0 = int(math.floor(rr))
                    w = rr - i0
                    if 0 <= i0 < m:
                        out[i0, j] += (1.0 - w) * val
                    if 0 <= i0 + 1 < m:
                        out[i0 + 1, j] += w * val
    return out


def _strip_profile(v, aa, bb, height, area):
    """Cumulative footprint integral: area of the pixel on the detector
    side of the edge at offset v from the pixel's projected center."""
    u = v + 0.5 * (aa + bb)
    if u <= 0.0:
        return 0.0
    if u >= aa + bb:
        return area
    if bb < 1e-12 * aa:
        w = u if u < aa else aa
        return height * w
    if u < bb:
        return height * u * u / (2.0 * bb)
    if u <= aa:
        return height * (u - 0.5 * bb)
    r = aa + bb - u
    return area - height * r * r / (2.0 * bb)


def _strip_forward_loops(img, cos_t, sin_t, s0, ds, n_bins, h):
    m, n = img.shape
    n_angles = cos_t.shape[0]
    out = np.zeros((n_angles, n_bins))
    e0 = s0 - 0.5 * ds
    area = h * h
    for a in range(n_angles):
        c = cos_t[a]
        s = sin_t[a]
        aa = max(abs(c), abs(s)) * h
        bb = min(abs(c), abs(s)) * h
        w2 = 0.5 * (aa + bb)
        height = area / aa
        for i in range(m):
            y = ((m - 1) * 0.5 - i) * h
            for j in range(n):
                val = img[i, j]
                if val == 0.0:
                    continue
                x = (j - (n - 1) * 0.5) * h
                t = x * c + y * s
                k_lo = int(math.floor((t - w2 - e0) / ds))
                k_hi = int(math.floor((t + w2 - e0) / ds))
                if k_lo < 0:
                    k_lo = 0
                if k_hi > n_bins - 1:
                    k_hi = n_bins - 1
                for k in range(k_lo, k_hi + 1):
                    lo = e0 + k * ds - t
                    w = (
                        _strip_profile(lo + ds, aa, bb, height, area)
                        - _strip_profile(lo, aa, bb, height, area)
                    ) / ds
                    out[a, k] += w * val
    return out


def _strip_backward_loops(sino, cos_t, sin_t, s0, ds, m, n, h):
    n_angles, n_bins = sino.shape
    out = np.zeros((m, n))
    e0 = s0 - 0.5 * ds
    area = h * h
    for a in range(n_angles):
        c = cos_t[a]
        s = sin_t[a]
        aa = max(abs(c), abs(s)) * h
        bb = min(abs(c), abs(s)) * h
        w2 = 0.5 * (aa + bb)
        height = area / aa
        for i in range(m):
            y = ((m - 1) * 0.5 - i) * h
            for j in range(n):
                x = (j - (n - 1) * 0.5) * h
                t = x * c + y * s
                k_lo = int(math.floor((t - w2 - e0) / ds))
                k_hi = int(math.floor((t + w2 - e0) / ds))
                if k_lo < 0:
                    k_lo = 0
                if k_hi > n_bins - 1:
                    k_hi = n_bins - 1
                acc = 0.0
                for k in range(k_lo, k_hi + 1):
                    lo = e0 + k * ds - t
                    w = (
                        _strip_profile(lo + ds, aa, bb, height, area)
                        - _strip_profile(lo, aa, bb, height, area)
                    ) / ds
                    acc += w * sino[a, k]
                out[i, j] += acc
    return out


# ---------------------------------------------------------------------------
# vectorized numpy kernels (fallback path)
# ---------------------------------------------------------------------------


def _line_geometry(a_c, a_s, sd, m, n, h):
    """Fractional positions and weights for one angle of the line kernel.

    Returns (major_len, positions, weights, dl, row_major) where positions
    has shape (major_len, n_bins).
    """
    if abs(a_c) >= abs(a_s):
        y = ((m - 1) * 0.5 - np.arange(m)) * h
        pos = (sd[None, :] - y[:, None] * a_s) / (a_c * h) + (n - 1) * 0.5
        return pos, h / abs(a_c), True
    x = (np.arange(n) - (n - 1) * 0.5) * h
    pos = (m - 1) * 0.5 - (sd[None, :] - x[:, None] * a_c) / (a_s * h)
    return pos, h / abs(a_s), False


def _line_forward_numpy(img, cos_t, sin_t, s0, ds, n_bins, h):
    m, n = img.shape
    out = np.zeros((cos_t.size, n_bins))
    sd = s0 + ds * np.arange(n_bins)
    for a in range(cos_t.size):
        pos, dl, row_major = _line_geometry(cos_t[a], sin_t[a], sd, m, n, h)
        limit = n if row_major else m
        j0 = np.floor(pos).astype(np.int64)
        w = pos - j0
        v0 = (j0 >= 0) & (j0 < limit)
        v1 = (j0 + 1 >= 0) & (j0 + 1 < limit)
        jj0 = np.clip(j0, 0, limit - 1)
        jj1 = np.clip(j0 + 1, 0, limit - 1)
        major = np.broadcast_to(
            np.arange(pos.shape[0])[:, None], pos.shape
        )
        if row_major:
            g = np.where(v0, img[major, jj0] * (1.0 - w), 0.0)
            g += np.where(v1, img[major, jj1] * w, 0.0)
        else:
            g = np.where(v0, img[jj0, major] * (1.0 - w), 0.0)
            g += np.where(v1, img[jj1, major] * w, 0.0)
        out[a] = g.sum(axis=0) * dl
    return out


def _line_backward_numpy(sino, cos_t, sin_t, s0, ds, m, n, h):
    out = np.zeros((m, n))
    n_bins = sino.shape[1]
    sd = s0 + ds * np.arange(n_bins)
    for a in range(cos_t.size):
        pos, dl, row_major = _line_geometry(cos_t[a], sin_t[a], sd, m, n, h)
        limit = n if row_major else m
        j0 = np.floor(pos).astype(np.int64)
        w = pos - j0
        v0 = (j0 >= 0) & (j0 < limit)
        v1 = (j0 + 1 >= 0) & (j0 + 1 < limit)
        major = np.broadcast_to(np.arange(pos.shape[0])[:, None], pos.shape)
        vals = np.broadcast_to(sino[a][None, :] * dl, pos.shape)
        if row_major:
            np.add.at(out, (major[v0], j0[v0]), ((1.0 - w) * vals)[v0])
            np.add.at(out, (major[v1], j0[v1] + 1), (w * vals)[v1])
        else:
            np.add.at(out, (j0[v0], major[v0]), ((1.0 - w) * vals)[v0])
            np.add.at(out, (j0[v1] + 1, major[v1]), (w * vals)[v1])
    return out


def _strip_profile_numpy(v, aa, bb, height, area):
    u = v + 0.5 * (aa + bb)
    if bb < 1e-12 * aa:
        return height * np.clip(u, 0.0, aa)
    r = aa + bb - u
    return np.select(
        [u <= 0.0, u < bb, u <= aa, u < aa + bb],
        [
            0.0,
            height * u * u / (2.0 * bb),
            height * (u - 0.5 * bb),
            area - height * r * r / (2.0 * bb),
        ],
        default=area,
    )


def _strip_angle_geometry(a_c, a_s, m, n, h):
    aa = max(abs(a_c), abs(a_s)) * h
    bb = min(abs(a_c), abs(a_s)) * h
    x = (np.arange(n) - (n - 1) * 0.5) * h
    y = ((m - 1) * 0.5 - np.arange(m)) * h
    t = (x[None, :] * a_c + y[:, None] * a_s).ravel()
    return aa, bb, t


def _strip_forward_numpy(img, cos_t, sin_t, s0, ds, n_bins, h):
    m, n = img.shape
    out = np.zeros((cos_t.size, n_bins))
    e0 = s0 - 0.5 * ds
    area = h * h
    flat = img.ravel()
    for a in range(cos_t.size):
        aa, bb, t = _strip_angle_geometry(cos_t[a], sin_t[a], m, n, h)
        height = area / aa
        w2 = 0.5 * (aa + bb)
        k_lo = np.floor((t - w2 - e0) / ds).astype(np.int64)
        n_off = int(math.ceil((aa + bb) / ds)) + 1
        for o in range(n_off + 1):
            k = k_lo + o
            valid = (k >= 0) & (k < n_bins)
            lo = e0 + k * ds - t
            w = (
                _strip_profile_numpy(lo + ds, aa, bb, height, area)
                - _strip_profile_numpy(lo, aa, bb, height, area)
            ) / ds
            contrib = np.where(valid, w * flat, 0.0)
            out[a] += np.bincount(
                np.clip(k, 0, n_bins - 1), weights=contrib, minlength=n_bins
            )
    return out


def _strip_backward_numpy(sino, cos_t, sin_t, s0, ds, m, n, h):
    out = np.zeros(m * n)
    n_bins = sino.shape[1]
    e0 = s0 - 0.5 * ds
    area = h * h
    for a in range(cos_t.size):
        aa, bb, t = _strip_angle_geometry(cos_t[a], sin_t[a], m, n, h)
        height = area / aa
        w2 = 0.5 * (aa + bb)
        k_lo = np.floor((t - w2 - e0) / ds).astype(np.int64)
        n_off = int(math.ceil((aa + bb) / ds)) + 1
        row = sino[a]
        for o in range(n_off + 1):
            k = k_lo + o
            valid = (k >= 0) & (k < n_bins)
            lo = e0 + k * ds - t
            w = (
                _strip_profile_numpy(lo + ds, aa, bb, height, area)
                - _strip_profile_numpy(lo, aa, bb, height, area)
            ) / ds
            out += np.where(valid, w * row[np.clip(k, 0, n_bins - 1)], 0.0)
    return out.reshape(m, n)


# ---------------------------------------------------------------------------
# path selection
# ---------------------------------------------------------------------------

NUMPY_IMPL = {
    "line_forward": _line_forward_numpy,
    "line_backward": _line_backward_numpy,
    "strip_forward": _strip_forward_numpy,
    "strip_backward": _strip_backward_numpy,
}


def _compile_numba():
    global _strip_profile
    from numba import njit

    jit = njit(cache=True)
    # The strip kernels call _strip_profile through the module global;
    # jitting it in place lets nopython compilation resolve the callee
    # (the jitted dispatcher stays callable from plain Python).
    if not hasattr(_strip_profile, "py_func"):
        _strip_profile = jit(_strip_profile)
    return {
        "line_forward": jit(_line_forward_loops),
        "line_backward": jit(_line_backward_loops),
        "strip_forward": jit(_strip_forward_loops),
        "strip_backward": jit(_strip_backward_loops),
    }


NUMBA_IMPL = None
if USE_NUMBA:
    NUMBA_IMPL = _compile_numba()
    ACTIVE_IMPL = NUMBA_IMPL
    ACTIVE_PATH = "numba"
else:
    ACTIVE_IMPL = NUMPY_IMPL
    ACTIVE_PATH = "numpy"


def get_impl(path=None):
    """Kernel table for 'numba', 'numpy', or the active path (None)."""
    if path is None:
        return ACTIVE_IMPL
    if path == "numpy":
        return NUMPY_IMPL
    if path == "numba":
        global NUMBA_IMPL
        if NUMBA_IMPL is None:
            NUMBA_IMPL = _compile_numba()
        return NUMBA_IMPL
    raise ValueError(f"unknown kernel path {path!r}")
