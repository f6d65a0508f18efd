"""Catalog of proximal operators, each carrying its strong-convexity modulus.

All entries evaluate prox_{t f}(x) = argmin_y f(y) + ||y - x||^2 / (2 t).
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import InvalidParameter

__all__ = [
    "ProxFn",
    "prox_scaled_sqnorm",
    "prox_quadratic_dual",
    "prox_zero",
    "prox_box_indicator",
    "prox_huber_tv_dual",
    "prox_ct_dual_block",
]


@dataclass(frozen=True)
class ProxFn:
    """A proximal operator plus metadata.

    evaluate(point, step) computes prox_{step * f}(point); strong_convexity
    is the modulus gamma of f (0 for merely convex f); objective, when
    present, evaluates f itself for monitoring.
    """

    dim: int
    strong_convexity: float
    evaluate: Callable[[np.ndarray, float], np.ndarray]
    objective: Optional[Callable[[np.ndarray], float]] = None


def prox_scaled_sqnorm(alpha, dim):
    """f(x) = alpha/2 ||x||^2, prox_{t f}(x) = x / (1 + t alpha)."""
    if alpha <= 0:
        raise InvalidParameter("alpha must be positive")

    def evaluate(x, t):
        return x / (1.0 + t * alpha)

    return ProxFn(dim, float(alpha), evaluate, lambda x: 0.5 * alpha * float(x @ x))


def prox_quadratic_dual(beta, z):
    """f(y) = beta/2 ||y||^2 + <y, z>, prox_{t f}(y) = (y - t z) / (1 + t beta)."""
    if beta <= 0:
        raise InvalidParameter("beta must be positive")
    z = np.asarray(z, dtype=float)

    def evaluate(y, t):
        return (y - t * z) / (1.0 + t * beta)

    def objective(y):
        return 0.5 * beta * float(y @ y) + float(y @ z)

    return ProxFn(z.size, float(beta), evaluate, objective)


def prox_zero(dim):
    """f = 0: the identity map."""
    return ProxFn(dim, 0.0, lambda x, t: x, lambda x: 0.0)


def prox_box_indicator(radius, dim):
    """Indicator of the box [-radius, radius]^dim: componentwise clamp."""
    if radius <= 0:
        raise InvalidParameter("radius must be positive")

    def evaluate(y, t):
        return np.clip(y, -radius, radius)

    return ProxFn(dim, 0.0, evaluate)


def _pixel_project(p, lambda1):
    """Rescale each pixel's gradient 2-vector to magnitude <= lambda1."""
    mag = np.sqrt(p[..., 0] ** 2 + p[..., 1] ** 2)
    factor = np.ones_like(mag)
    over = mag > lambda1
    factor[over] = lambda1 / mag[over]
    return p * factor[..., None]


def prox_huber_tv_dual(lambda1, eps, shape):
    """Dual of the (optionally Huber-smoothed) isotropic TV term.

    f(p) = indicator(pixelwise |p| <= lambda1) + eps/2 ||p||^2 on a
    gradient field of the given (m, n, 2) shape.  Since the indicator set
    is a ball around the origin, the prox is: shrink by 1/(1 + t eps),
    then project pixelwise.
    """
    if lambda1 <= 0:
        raise InvalidParameter("lambda1 must be positive")
    if eps < 0:
        raise InvalidParameter("eps must be nonnegative")
    m, n, two = shape
    if two != 2:
        raise InvalidParameter("gradient field shape must end in 2")
    dim = m * n * 2

    def evaluate(p, t):
        field = p.reshape(m, n, 2) / (1.0 + t * eps)
        return _pixel_project(field, lambda1).reshape(dim)

    return ProxFn(dim, float(eps), evaluate)


def prox_ct_dual_block(lambda0, z_sino, lambda1, eps, shapes):
    """Block prox for the CT dual variable (q, p).

    q is sinogram-shaped and gets the quadratic-plus-linear prox with
    modulus 1/lambda0 and data z; p is gradient-shaped and gets the
    Huber-TV dual prox.  The blocks are independent; the joint modulus is
    min(1/lambda0, eps).
    """
    if lambda0 <= 0:
        raise InvalidParameter("lambda0 must be positive")
    sino_shape, grad_shape = shapes
    z_sino = np.asarray(z_sino, dtype=float).reshape(-1)
    q_dim = int(np.prod(sino_shape))
    if z_sino.size != q_dim:
        raise InvalidParameter("z_sino does not match the sinogram shape")
    q_prox = prox_quadratic_dual(1.0 / lambda0, z_sino)
    p_prox = prox_huber_tv_dual(lambda1, eps, grad_shape)
    dim = q_dim + p_prox.dim

    def evaluate(v, t):
        if v.shape != (dim,):
            raise InvalidParameter(
                f"dual block expects shape ({dim},), got {v.shape}"
            )
        return np.concatenate(
            [q_prox.evaluate(v[:q_dim], t), p_prox.evaluate(v[q_dim:], t)]
        )

    return ProxFn(dim, min(1.0 / lambda0, float(eps)), evaluate)
