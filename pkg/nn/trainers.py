# dynkin/nn/trainers.py
from __future__ import annotations
from collections import deque
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import line_search

from nn.network import FeedforwardNet, forward, jacobian

OPTIMIZERS = ("lm", "lbfgs", "br")


class TrainingError(RuntimeError):
    """Optimizer diverged; carries the last finite parameter vector."""

    def __init__(self, message: str, last_parameters: np.ndarray,
                 n: Optional[int] = None, m: Optional[int] = None):
        self.message = message
        self.last_parameters = np.asarray(last_parameters, dtype=float)
        self.n, self.m = n, m
        where = f" at level n={n}, p-node m={m}" if n is not None else ""
        super().__init__(f"[fit] {message}{where}")

    def located(self, n: int, m: int) -> "TrainingError":
        return TrainingError(self.message, self.last_parameters, n, m)


@dataclass(frozen=True)
class TrainConfig:
    optimizer: str = "lm"
    max_iters: int = 500
    grad_tol: float = 1e-8
    damping: float = 1e-3
    damping_factor: float = 10.0
    max_damping: float = 1e10
    memory: int = 10
    c1: float = 1e-4
    c2: float = 0.9
    seed: int = 0
    # Bayesian regularization; None means "updated by the evidence rule"
    br_alpha: Optional[float] = None
    br_beta: Optional[float] = None

    def __post_init__(self):
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"unknown optimizer '{self.optimizer}' (expected one of {', '.join(OPTIMIZERS)})")
        if self.max_iters < 0 or self.memory < 1:
            raise ValueError("max_iters must be >= 0 and memory >= 1")
        for k in ("grad_tol", "damping", "c1", "c2"):
            if not getattr(self, k) > 0:
                raise ValueError(f"{k} must be > 0")
        if not self.damping_factor > 1:
            raise ValueError("damping_factor must be > 1")
        if not 0 < self.c1 < self.c2 < 1:
            raise ValueError("line search needs 0 < c1 < c2 < 1")

    def knobs(self) -> dict:
        return asdict(self)


@dataclass
class TrainReport:
    optimizer: str
    mse: float
    initial_mse: float
    iterations: int
    converged: bool
    max_residual: float
    alpha: float = 0.0
    beta: float = 1.0
    # mean-squared error after every accepted step
    history: list = field(default_factory=list)


def _residuals(net: FeedforwardNet, x, y) -> np.ndarray:
    return forward(net, x) - y


def _report(cfg: TrainConfig, net: FeedforwardNet, x, y, initial_mse: float, iters: int,
            converged: bool, alpha: float, beta: float, history: list) -> TrainReport:
    r = _residuals(net, x, y)
    return TrainReport(cfg.optimizer, float(np.mean(r ** 2)), initial_mse, iters, converged,
                       float(np.max(np.abs(r))), alpha, beta, history)


def _damped_least_squares(net, x, y, cfg: TrainConfig, evidence: bool):
    """Levenberg-Marquardt on β·SSE + α·|θ|².

    Plain LM is α = 0, β = 1 with no evidence updates. With evidence=True,
    (α, β) follow MacKay's rule after every accepted step, using the
    Gauss-Newton Hessian 2βJᵀJ + 2αI for the effective parameter count.
    """
    K = len(y)
    theta = net.parameters()
    P = theta.size
    alpha = cfg.br_alpha if cfg.br_alpha is not None else 0.0
    beta = cfg.br_beta if cfg.br_beta is not None else 1.0
    out, J = jacobian(net, x)
    r = out - y
    if not np.all(np.isfinite(r)):
        raise TrainingError("non-finite initial loss", theta)
    sse = float(r @ r)
    objective = beta * sse + alpha * float(theta @ theta)
    mu = cfg.damping
    iters, converged, history = 0, False, []
    eye = np.eye(P)

    for _ in range(cfg.max_iters):
        g = beta * (J.T @ r) + alpha * theta
        # gradient of the objective itself, not of the per-sample mean
        if np.max(np.abs(2.0 * g)) < cfg.grad_tol:
            converged = True
            break
        A = beta * (J.T @ J) + alpha * eye
        accepted = False
        while mu <= cfg.max_damping:
            trial = theta + np.linalg.solve(A + mu * eye, -g)
            out_t, J_t = jacobian(net.with_parameters(trial), x)
            r_t = out_t - y
            sse_t = float(r_t @ r_t)
            obj_t = beta * sse_t + alpha * float(trial @ trial)
            if np.isfinite(obj_t) and obj_t < objective:
                theta, r, J, sse, objective = trial, r_t, J_t, sse_t, obj_t
                mu /= cfg.damping_factor
                accepted = True
                break
            mu *= cfg.damping_factor
        if not accepted:
            break
        iters += 1
        history.append(sse / K)
        if evidence and (cfg.br_alpha is None or cfg.br_beta is None):
            if alpha > 0.0:
                H = 2.0 * beta * (J.T @ J) + 2.0 * alpha * eye
                gamma = P - 2.0 * alpha * float(np.trace(np.linalg.inv(H)))
            else:
                gamma = float(P)
            gamma = min(max(gamma, 0.0), K - 1.0)
            e_w = float(theta @ theta)
            if cfg.br_alpha is None and e_w > 0.0:
                alpha = gamma / (2.0 * e_w)
            if cfg.br_beta is None and sse > 0.0:
                beta = (K - gamma) / (2.0 * sse)
            objective = beta * sse + alpha * float(theta @ theta)
    return theta, iters, converged, alpha, beta, history


def _two_loop(g: np.ndarray, memory: deque) -> np.ndarray:
    q = g.copy()
    alphas = []
    for rho, s, yv in reversed(memory):
        a = rho * (s @ q)
        q -= a * yv
        alphas.append(a)
    alphas.reverse()
    if memory:
        _, s, yv = memory[-1]
        q *= (s @ yv) / (yv @ yv)
    for (rho, s, yv), a in zip(memory, alphas):
        b = rho * (yv @ q)
        q += (a - b) * s
    return -q


def _lbfgs(net, x, y, cfg: TrainConfig):
    K = len(y)

    def loss(theta):
        r = _residuals(net.with_parameters(theta), x, y)
        return float(r @ r) / K

    def grad(theta):
        out, J = jacobian(net.with_parameters(theta), x)
        return 2.0 * (J.T @ (out - y)) / K

    theta = net.parameters()
    f, g = loss(theta), grad(theta)
    if not np.isfinite(f):
        raise TrainingError("non-finite initial loss", theta)
    best_theta, best_f = theta.copy(), f
    memory: deque = deque(maxlen=cfg.memory)
    iters, converged, history = 0, False, []

    def _search(d):
        return line_search(loss, grad, theta, d, gfk=g, old_fval=f, c1=cfg.c1, c2=cfg.c2)

    for _ in range(cfg.max_iters):
        if np.max(np.abs(g)) < cfg.grad_tol:
            converged = True
            break
        d = _two_loop(g, memory)
        if g @ d >= 0:
            memory.clear()
            d = -g
        step, _, _, f_new, _, _ = _search(d)
        if step is None and memory:
            # restart from steepest descent
            memory.clear()
            d = -g
            step, _, _, f_new, _, _ = _search(d)
        if step is None:
            break
        if f_new is None or not np.isfinite(f_new):
            raise TrainingError("loss became non-finite in the line search", best_theta)
        s = step * d
        theta_new = theta + s
        g_new = grad(theta_new)
        yv = g_new - g
        sy = float(s @ yv)
        if sy > 1e-12 * np.sqrt(float(s @ s) * float(yv @ yv)):
            memory.append((1.0 / sy, s, yv))
        theta, f, g = theta_new, float(f_new), g_new
        iters += 1
        history.append(f)
        if f < best_f:
            best_theta, best_f = theta.copy(), f
    return best_theta, iters, converged, history


def fit(net: FeedforwardNet, x, y, config: Optional[TrainConfig] = None) -> tuple[FeedforwardNet, TrainReport]:
    """Least-squares fit of net(x_l) to y_l, uniform weights.

    The returned parameters never have a larger mean-squared error than the
    initial ones.
    """
    cfg = config or TrainConfig()
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.size == 0 or x.shape[0] != y.shape[0]:
        raise ValueError("fit needs at least one sample and matching x/y lengths")
    if not np.all(np.isfinite(y)):
        raise ValueError("fit: targets contain non-finite values")
    r0 = _residuals(net, x, y)
    initial_mse = float(np.mean(r0 ** 2))

    alpha, beta = 0.0, 1.0
    if cfg.optimizer == "lbfgs":
        theta, iters, converged, history = _lbfgs(net, x, y, cfg)
    else:
        theta, iters, converged, alpha, beta, history = _damped_least_squares(
            net, x, y, cfg, evidence=cfg.optimizer == "br")
    trained = net.with_parameters(theta)
    report = _report(cfg, trained, x, y, initial_mse, iters, converged, alpha, beta, history)
    if not report.mse <= initial_mse:
        trained = net
        report = _report(cfg, net, x, y, initial_mse, iters, converged, alpha, beta, history)
    return trained, report
