"""Two parallel-beam Radon discretizations that are not adjoint to each other.

``radon_line`` integrates along ray center lines with linear interpolation;
``radon_strip`` weights pixels by the exact area each detector strip cuts
out of them.  Each discretization is internally exact-adjoint (its
transpose uses the same weights), so pairing the strip forward with the
line transpose produces a genuine adjoint mismatch.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import GeometryError
from .operators import LinearMap

__all__ = ["SinogramGeometry", "radon_line", "radon_strip"]


@dataclass(frozen=True)
class SinogramGeometry:
    """Equispaced angles in [0, pi) and a centered linear detector."""

    n_angles: int
    n_bins: int
    det_spacing: float = 1.0
    pixel_spacing: float = 1.0

    def __post_init__(self):
        if self.n_angles < 1 or self.n_bins < 1:
            raise GeometryError("need at least one angle and one bin")
        if self.det_spacing <= 0 or self.pixel_spacing <= 0:
            raise GeometryError("spacings must be positive")

    @property
    def angles(self):
        return np.arange(self.n_angles) * np.pi / self.n_angles

    @property
    def s0(self):
        """Detector coordinate of the first bin center."""
        return -(self.n_bins - 1) * 0.5 * self.det_spacing

    def covers_image(self, m, n):
        """Whether the detector spans the image diagonal (recommended)."""
        diag = np.hypot(m, n) * self.pixel_spacing
        return self.n_bins * self.det_spacing >= diag


def _make_projector(geom, m, n, forward_key, backward_key):
    if m < 1 or n < 1:
        raise GeometryError("image dimensions must be >= 1")
    impl = _kernels.get_impl()
    fwd = impl[forward_key]
    bwd = impl[backward_key]
    cos_t = np.cos(geom.angles)
    sin_t = np.sin(geom.angles)
    s0 = geom.s0
    ds = geom.det_spacing
    h = geom.pixel_spacing
    n_bins = geom.n_bins

    def apply(x):
        return fwd(x.reshape(m, n), cos_t, sin_t, s0, ds, n_bins, h).ravel()

    def apply_transpose(y):
        sino = y.reshape(geom.n_angles, n_bins)
        return bwd(sino, cos_t, sin_t, s0, ds, m, n, h).ravel()

    return LinearMap(geom.n_angles * n_bins, m * n, apply, apply_transpose)


def radon_line(geom, m, n):
    """Line-driven projector: per-ray linear interpolation along the
    dominant axis, scaled by the intersection length per step."""
    return _make_projector(geom, m, n, "line_forward", "line_backward")


def radon_strip(geom, m, n):
    """Strip-driven projector: exact pixel/strip intersection areas,
    normalized by the detector bin width."""
    return _make_projector(geom, m, n, "strip_forward", "strip_backward")
