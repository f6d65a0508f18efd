"""The mismatched primal-dual iteration and its accelerated variant.

One step of the mismatched iteration (the exact iteration is the special
case surrogate = forward):

    x+  = prox_G(x - tau * V^T y, tau)
    xb  = x+ + omega (x+ - x)
    y+  = prox_Fstar(y + sigma * A xb, sigma)

Each step performs exactly one transpose application of the surrogate and
one forward application of the true operator.
"""

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidParameter, NonFiniteIterate

__all__ = [
    "SaddleProblem",
    "IterateState",
    "AccelState",
    "Reference",
    "RunTrace",
    "step_mismatched",
    "solve",
    "step_accelerated",
    "iterate_accelerated",
]


@dataclass(frozen=True)
class SaddleProblem:
    """Prox-capable G and F*, the forward operator A, the surrogate V
    (used only through its transpose), and the strong-convexity moduli."""

    prox_G: object
    prox_Fstar: object
    forward: object
    surrogate: object
    conv: object

    def __post_init__(self):
        if self.forward.shape != self.surrogate.shape:
            raise InvalidParameter("forward and surrogate must share dimensions")
        if self.prox_G.dim != self.forward.cols:
            raise InvalidParameter("prox_G dim must equal forward cols")
        if self.prox_Fstar.dim != self.forward.rows:
            raise InvalidParameter("prox_Fstar dim must equal forward rows")
        if self.conv.gamma_G != self.prox_G.strong_convexity:
            raise InvalidParameter("gamma_G must equal the prox_G modulus")
        if self.conv.gamma_Fstar != self.prox_Fstar.strong_convexity:
            raise InvalidParameter("gamma_Fstar must equal the prox_Fstar modulus")


@dataclass(frozen=True)
class IterateState:
    x: np.ndarray
    y: np.ndarray
    x_prev: np.ndarray
    iteration: int = 0


@dataclass(frozen=True)
class AccelState:
    """State of the accelerated variant with decreasing tau / increasing sigma."""

    x: np.ndarray
    y: np.ndarray
    x_prev: np.ndarray
    tau: float
    sigma: float
    gamma: float
    iteration: int = 0


@dataclass(frozen=True)
class Reference:
    """A reference point whose distance is recorded along the run.

    With y=None the distance is primal-only ||x_i - x||; otherwise it is
    the joint distance sqrt(||x_i - x||^2 + ||y_i - y||^2).
    """

    name: str
    x: np.ndarray
    y: Optional[np.ndarray] = None

    def distance(self, xi, yi):
        dx = float(np.linalg.norm(xi - self.x))
        if self.y is None:
            return dx
        dy = float(np.linalg.norm(yi - self.y))
        return math.hypot(dx, dy)


@dataclass
class RunTrace:
    """Per-iteration records of a solve run."""

    iterations: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    ref_names: list = field(default_factory=list)
    ref_distances: dict = field(default_factory=dict)
    objectives: Optional[list] = None
    final_state: Optional[IterateState] = None
    termination: str = "running"
    omega: Optional[float] = None

    def record(self, iteration, residual, dists, objective):
        if residual < 0:
            raise InvalidParameter("residuals must be nonnegative")
        self.iterations.append(iteration)
        self.residuals.append(residual)
        for name, d in dists.items():
            self.ref_distances[name].append(d)
        if objective is not None:
            if self.objectives is None:
                self.objectives = []
            self.objectives.append(objective)

    def distances(self, name):
        return np.asarray(self.ref_distances[name])

    def n_recorded(self):
        return len(self.iterations)

    def to_rows(self):
        """Rows of (iter, residual, dist_to_<name>..., objective?)."""
        header = ["iter", "residual"]
        header += [f"dist_to_{name}" for name in self.ref_names]
        if self.objectives is not None:
            header.append("objective")
        rows = []
        for k in range(len(self.iterations)):
            row = [self.iterations[k], self.residuals[k]]
            row += [self.ref_distances[n][k] for n in self.ref_names]
            if self.objectives is not None:
                row.append(self.objectives[k])
            rows.append(row)
        return header, rows

    def to_csv(self, path):
        header, rows = self.to_rows()
        with open(path, "w") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(
                    ",".join(
                        str(v) if isinstance(v, int) else f"{v:.12e}" for v in row
                    )
                    + "\n"
                )

    def to_json(self, path=None):
        payload = {
            "termination": self.termination,
            "omega": self.omega,
            "iterations": self.iterations,
            "residuals": self.residuals,
            "ref_distances": {k: list(v) for k, v in self.ref_distances.items()},
            "objectives": self.objectives,
        }
        text = json.dumps(payload, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def _require_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            return False
    return True


def step_mismatched(state, plan, prob):
    """One step of the mismatched iteration; raises NonFiniteIterate on NaN/Inf."""
    vt_y = prob.surrogate.apply_transpose(state.y)
    x_new = prob.prox_G.evaluate(state.x - plan.tau * vt_y, plan.tau)
    x_bar = x_new + plan.omega * (x_new - state.x)
    y_new = prob.prox_Fstar.evaluate(
        state.y + plan.sigma * prob.forward.apply(x_bar), plan.sigma
    )
    if not _require_finite(x_new, y_new):
        raise NonFiniteIterate()
    return IterateState(x_new, y_new, state.x, state.iteration + 1)


def solve(prob, plan, x0, y0, max_iter, rel_tol, refs=(), objective=None):
    """Iterate step_mismatched until the successive-iterate residual
    ||u_{i+1} - u_i|| drops below rel_tol * (1 + ||u_{i+1}||) or max_iter.

    refs is a sequence of Reference points whose distances are recorded at
    every iteration; objective, when given, is evaluated at every primal
    iterate.  On divergence the partial trace is attached to the raised
    NonFiniteIterate and its termination reason is "diverged".
    """
    if max_iter < 1:
        raise InvalidParameter("max_iter must be >= 1")
    if rel_tol <= 0:
        raise InvalidParameter("rel_tol must be positive")
    x0 = np.asarray(x0, dtype=float)
    y0 = np.asarray(y0, dtype=float)
    state = IterateState(x0, y0, x0, 0)
    trace = RunTrace(
        ref_names=[r.name for r in refs],
        ref_distances={r.name: [] for r in refs},
        omega=plan.omega,
    )
    for _ in range(max_iter):
        try:
            new = step_mismatched(state, plan, prob)
        except NonFiniteIterate:
            trace.final_state = state
            trace.termination = "diverged"
            raise NonFiniteIterate(trace=trace)
        residual = math.hypot(
            float(np.linalg.norm(new.x - state.x)),
            float(np.linalg.norm(new.y - state.y)),
        )
        dists = {r.name: r.distance(new.x, new.y) for r in refs}
        obj = None if objective is None else float(objective(new.x))
        trace.record(new.iteration, residual, dists, obj)
        state = new
        norm_u = math.hypot(
            float(np.linalg.norm(state.x)), float(np.linalg.norm(state.y))
        )
        if residual <= rel_tol * (1.0 + norm_u):
            trace.termination = "converged"
            break
    else:
        trace.termination = "max_iter"
    trace.final_state = state
    return trace


def step_accelerated(state, prob):
    """One step of the accelerated variant:

    x+ = prox_G(x - tau_i V^T y, tau_i); theta_i = 1/sqrt(1 + 2 tau_i gamma);
    tau_{i+1} = theta_i tau_i; sigma_{i+1} = sigma_i / theta_i;
    y+ = prox_Fstar(y + sigma_{i+1} A (x+ + theta_i (x+ - x)), sigma_{i+1}).
    """
    if state.gamma <= 0:
        raise InvalidParameter("acceleration modulus gamma must be positive")
    vt_y = prob.surrogate.apply_transpose(state.y)
    x_new = prob.prox_G.evaluate(state.x - state.tau * vt_y, state.tau)
    theta = 1.0 / math.sqrt(1.0 + 2.0 * state.tau * state.gamma)
    tau_next = theta * state.tau
    sigma_next = state.sigma / theta
    x_bar = x_new + theta * (x_new - state.x)
    y_new = prob.prox_Fstar.evaluate(
        state.y + sigma_next * prob.forward.apply(x_bar), sigma_next
    )
    if not _require_finite(x_new, y_new):
        raise NonFiniteIterate()
    return AccelState(
        x_new, y_new, state.x, tau_next, sigma_next, state.gamma, state.iteration + 1
    )


def iterate_accelerated(prob, state, n_iter, record):
    """Drive step_accelerated for n_iter steps.

    record(state_before, state_after) is called once per step; returns the
    final state.
    """
    if n_iter < 1:
        raise InvalidParameter("n_iter must be >= 1")
    for _ in range(n_iter):
        new = step_accelerated(state, prob)
        record(state, new)
        state = new
    return state
