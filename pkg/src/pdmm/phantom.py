"""Shepp-Logan head phantom rasterized by pixel-center membership."""

import numpy as np

from .errors import InvalidParameter

__all__ = ["shepp_logan"]

# (x0, y0, semi_axis_x, semi_axis_y, rotation_deg, additive intensity),
# on the [-1, 1]^2 square with y up.  Intensities are the usual
# high-contrast variant whose summed values stay inside [0, 1].
_ELLIPSES = (
    (0.0, 0.0, 0.69, 0.92, 0.0, 1.0),
    (0.0, -0.0184, 0.6624, 0.874, 0.0, -0.8),
    (0.22, 0.0, 0.11, 0.31, -18.0, -0.2),
    (-0.22, 0.0, 0.16, 0.41, 18.0, -0.2),
    (0.0, 0.35, 0.21, 0.25, 0.0, 0.1),
    (0.0, 0.1, 0.046, 0.046, 0.0, 0.1),
    (0.0, -0.1, 0.046, 0.046, 0.0, 0.1),
    (-0.08, -0.605, 0.046, 0.023, 0.0, 0.1),
    (0.0, -0.605, 0.023, 0.023, 0.0, 0.1),
    (0.06, -0.605, 0.023, 0.046, 0.0, 0.1),
)


def shepp_logan(m, n):
    """m x n phantom with values in [0, 1].

    A pixel picks up an ellipse's intensity iff its center lies inside the
    ellipse; the ten intensities are additive.
    """
    if m < 16 or n < 16:
        raise InvalidParameter("phantom needs at least 16 pixels per side")
    x = (np.arange(n) + 0.5) * 2.0 / n - 1.0
    y = 1.0 - (np.arange(m) + 0.5) * 2.0 / m
    xx, yy = np.meshgrid(x, y)
    img = np.zeros((m, n))
    for x0, y0, sa, sb, rot_deg, value in _ELLIPSES:
        phi = np.radians(rot_deg)
        dx = xx - x0
        dy = yy - y0
        u = (dx * np.cos(phi) + dy * np.sin(phi)) / sa
        v = (-dx * np.sin(phi) + dy * np.cos(phi)) / sb
        img[u * u + v * v <= 1.0] += value
    return np.clip(img, 0.0, 1.0)
