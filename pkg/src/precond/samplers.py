"""Metropolized chains: preconditioned RWM and MALA, adaptation, mode finding.

Preconditioning is applied through the proposal (x' = x + sigma L^{-1} xi for
RWM); this is step-for-step identical to running the plain algorithm on the
pushforward target and mapping states back through L^{-1}, provided both
consume the same RNG stream. ``rwm_chain_pushforward_view`` exists to check
that equivalence.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ModeSearchError, NonFiniteInputError, PrecondError
from .preconditioners import Preconditioner, pushforward
from .targets import DifferentiableTarget


@dataclass(frozen=True)
class AdaptConfig:
    target_rate: float
    decay_exponent: float = 0.6

    def __post_init__(self):
        if not 0.0 < self.target_rate < 1.0:
            raise PrecondError(f"target rate must lie in (0,1), got {self.target_rate}")
        if not 0.5 < self.decay_exponent <= 1.0:
            raise PrecondError("decay exponent must lie in (0.5, 1]")


@dataclass(frozen=True)
class ChainConfig:
    kind: str                      # "RWM" or "MALA"
    step_size: float               # sigma
    preconditioner: Preconditioner
    n_steps: int
    seed: int
    xi: Optional[float] = None     # for the sigma^2 = xi/(Md) tuning
    adapt: Optional[AdaptConfig] = None

    def __post_init__(self):
        if self.kind not in ("RWM", "MALA"):
            raise PrecondError(f"unknown chain kind {self.kind!r}")
        if self.step_size <= 0:
            raise PrecondError(f"step size must be positive, got {self.step_size}")
        if self.n_steps < 1:
            raise PrecondError("n_steps must be at least 1")


@dataclass(frozen=True)
class Trace:
    """States after each step with acceptance indicators and potentials."""

    states: np.ndarray          # (n_steps, d)
    accepted: np.ndarray        # (n_steps,) bool
    log_potentials: np.ndarray  # (n_steps,) values of U at each state
    config: ChainConfig
    x0: np.ndarray
    final_step_size: float
    n_warnings: int = 0

    def __post_init__(self):
        n = self.states.shape[0]
        if self.accepted.shape[0] != n or self.log_potentials.shape[0] != n:
            raise PrecondError("trace arrays must have equal length")


def mh_accept(log_pi_ratio: float, log_q_ratio: float, u: float) -> bool:
    """Metropolis-Hastings filter: accept iff log u <= min(0, total log ratio).

    Non-finite ratios reject; callers count these as warnings.
    """
    if not 0.0 <= u < 1.0:
        raise PrecondError(f"u must lie in [0, 1), got {u}")
    total = log_pi_ratio + log_q_ratio
    if math.isnan(total) or total == -math.inf or not math.isfinite(log_q_ratio):
        return False
    return math.log(u) <= min(0.0, total) if u > 0.0 else True


def adapt_step_size(
    step_size: float, t: int, accept_estimate: float, adapt: AdaptConfig
) -> float:
    """Stochastic-approximation update log sigma += t^{-decay}(acc - target)."""
    gain = (t + 1) ** (-adapt.decay_exponent)
    return float(step_size * math.exp(gain * (accept_estimate - adapt.target_rate)))


def _init_state(target: DifferentiableTarget, x0: Optional[np.ndarray]) -> np.ndarray:
    if x0 is None:
        if target.exact_mode is not None:
            x0 = np.asarray(target.exact_mode, dtype=float)
        else:
            x0 = np.zeros(target.dim)
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (target.dim,):
        raise PrecondError(f"initial state has shape {x0.shape}, expected ({target.dim},)")
    return x0


def rwm_chain(
    target: DifferentiableTarget,
    config: ChainConfig,
    x0: Optional[np.ndarray] = None,
) -> Trace:
    """Random walk Metropolis with proposal x' = x + sigma L^{-1} xi."""
    if config.kind != "RWM":
        raise PrecondError("config.kind must be RWM")
    x = _init_state(target, x0)
    u0 = target.potential(x)
    if not math.isfinite(u0):
        raise NonFiniteInputError("potential is not finite at the initial state")
    n, d = config.n_steps, target.dim
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    # noise premultiplied by L^{-1}; the raw uniforms follow in stream order
    noise = rng.standard_normal((n, d)) @ config.preconditioner.inv.T
    unif = rng.random(n)
    potential = target.potential
    states = np.empty((n, d))
    accepted = np.empty(n, dtype=bool)
    log_pots = np.empty(n)
    sigma = config.step_size
    warnings = 0
    for t in range(n):
        prop = x + sigma * noise[t]
        u_prop = potential(prop)
        log_ratio = u0 - u_prop
        if not math.isfinite(log_ratio):
            warnings += 1
            ok = False
            alpha = 0.0
        else:
            alpha = min(1.0, math.exp(min(log_ratio, 0.0)))
            ok = mh_accept(log_ratio, 0.0, unif[t])
        if ok:
            x, u0 = prop, u_prop
        states[t] = x
        accepted[t] = ok
        log_pots[t] = u0
        if config.adapt is not None:
            sigma = adapt_step_size(sigma, t, alpha, config.adapt)
    return Trace(
        states=states,
        accepted=accepted,
        log_potentials=log_pots,
        config=config,
        x0=_init_state(target, x0),
        final_step_size=sigma,
        n_warnings=warnings,
    )


def rwm_chain_pushforward_view(
    target: DifferentiableTarget,
    config: ChainConfig,
    x0: Optional[np.ndarray] = None,
) -> Trace:
    """Plain RWM on the pushforward target, states mapped back through L^{-1}.

    Consumes the RNG stream in the same order as :func:`rwm_chain`, so the two
    must agree step for step.
    """
    if config.kind != "RWM":
        raise PrecondError("config.kind must be RWM")
    precond = config.preconditioner
    pushed = pushforward(target, precond)
    x = _init_state(target, x0)
    y = precond.l @ x
    u0 = pushed.potential(y)
    if not math.isfinite(u0):
        raise NonFiniteInputError("potential is not finite at the initial state")
    n, d = config.n_steps, target.dim
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    raw = rng.standard_normal((n, d))
    unif = rng.random(n)
    linv = precond.inv
    states = np.empty((n, d))
    accepted = np.empty(n, dtype=bool)
    log_pots = np.empty(n)
    sigma = config.step_size
    warnings = 0
    for t in range(n):
        prop = y + sigma * raw[t]
        u_prop = pushed.potential(prop)
        log_ratio = u0 - u_prop
        if not math.isfinite(log_ratio):
            warnings += 1
            ok = False
            alpha = 0.0
        else:
            alpha = min(1.0, math.exp(min(log_ratio, 0.0)))
            ok = mh_accept(log_ratio, 0.0, unif[t])
        if ok:
            y, u0 = prop, u_prop
        states[t] = linv @ y
        accepted[t] = ok
        log_pots[t] = u0
        if config.adapt is not None:
            sigma = adapt_step_size(sigma, t, alpha, config.adapt)
    return Trace(
        states=states,
        accepted=accepted,
        log_potentials=log_pots,
        config=config,
        x0=_init_state(target, x0),
        final_step_size=sigma,
        n_warnings=warnings,
    )


def mala_chain(
    target: DifferentiableTarget,
    config: ChainConfig,
    x0: Optional[np.ndarray] = None,
) -> Trace:
    """Metropolis-adjusted Langevin: drift sigma^2 grad/2, variance sigma^2.

    The dynamics run in the pushforward space y = Lx; recorded states are
    mapped back to the original coordinates.
    """
    if config.kind != "MALA":
        raise PrecondError("config.kind must be MALA")
    precond = config.preconditioner
    pushed = pushforward(target, precond)
    x = _init_state(target, x0)
    y = precond.l @ x
    u0 = pushed.potential(y)
    g0 = pushed.gradient(y)
    if not (math.isfinite(u0) and np.isfinite(g0).all()):
        raise NonFiniteInputError("potential or gradient not finite at initial state")
    n, d = config.n_steps, target.dim
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    raw = rng.standard_normal((n, d))
    unif = rng.random(n)
    linv = precond.inv
    states = np.empty((n, d))
    accepted = np.empty(n, dtype=bool)
    log_pots = np.empty(n)
    sigma = config.step_size
    warnings = 0
    for t in range(n):
        s2 = sigma * sigma
        prop = y - 0.5 * s2 * g0 + sigma * raw[t]
        u_prop = pushed.potential(prop)
        g_prop = pushed.gradient(prop)
        if not (math.isfinite(u_prop) and np.isfinite(g_prop).all()):
            warnings += 1
            ok = False
            alpha = 0.0
        else:
            fwd = prop - y + 0.5 * s2 * g0
            bwd = y - prop + 0.5 * s2 * g_prop
            log_q = (fwd @ fwd - bwd @ bwd) / (2.0 * s2)
            log_pi = u0 - u_prop
            total = log_pi + log_q
            alpha = min(1.0, math.exp(min(total, 0.0))) if math.isfinite(total) else 0.0
            ok = mh_accept(log_pi, log_q, unif[t])
        if ok:
            y, u0, g0 = prop, u_prop, g_prop
        states[t] = linv @ y
        accepted[t] = ok
        log_pots[t] = u0
        if config.adapt is not None:
            sigma = adapt_step_size(sigma, t, alpha, config.adapt)
    return Trace(
        states=states,
        accepted=accepted,
        log_potentials=log_pots,
        config=config,
        x0=_init_state(target, x0),
        final_step_size=sigma,
        n_warnings=warnings,
    )


def run_chain(
    target: DifferentiableTarget,
    config: ChainConfig,
    x0: Optional[np.ndarray] = None,
) -> Trace:
    if config.kind == "RWM":
        return rwm_chain(target, config, x0)
    return mala_chain(target, config, x0)


def find_mode(
    target: DifferentiableTarget,
    precond: Optional[Preconditioner] = None,
    tol: float = 1e-8,
    max_iter: int = 10_000,
    x0: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Descent to the minimizer of U until ||grad U|| <= tol.

    Runs gradient descent preconditioned by (LL^T)^{-1} with backtracking,
    then switches to Armijo-damped Newton once the analytic Hessian makes
    progress; the fixed metric alone cannot reach tight tolerances when the
    local curvature differs from LL^T by orders of magnitude.

    Large potentials put a float64 floor under the achievable gradient norm:
    line searches cannot certify decreases smaller than eps * |U|. When
    progress stalls at a norm below sqrt(eps) times the initial gradient
    scale the current point is returned as the numerical optimum.
    """
    x = _init_state(target, x0)
    if precond is not None:
        linv = precond.inv
        metric = linv @ linv  # (LL^T)^{-1} for symmetric L
    else:
        metric = np.eye(target.dim)
    u = target.potential(x)
    step = 1.0
    gnorm = math.inf
    g0norm = None
    best_gnorm = math.inf
    stall = 0
    for it in range(max_iter):
        g = target.gradient(x)
        gnorm = float(np.linalg.norm(g))
        if g0norm is None:
            g0norm = gnorm
        if gnorm <= tol:
            return x
        if gnorm < 0.999 * best_gnorm:
            best_gnorm = gnorm
            stall = 0
        else:
            stall += 1
            if stall >= 25:
                if gnorm <= math.sqrt(np.finfo(float).eps) * (1.0 + g0norm):
                    return x
                break
        direction = None
        if it >= 3:  # a few fixed-metric steps first, then Newton
            try:
                direction = -np.linalg.solve(target.hessian(x), g)
                if float(g @ direction) >= 0 or not np.isfinite(direction).all():
                    direction = None
            except np.linalg.LinAlgError:
                direction = None
        if direction is None:
            direction = -(metric @ g)
        else:
            step = 1.0
        slope = float(g @ direction)
        s = step
        for _ in range(80):
            cand = x + s * direction
            u_cand = target.potential(cand)
            if math.isfinite(u_cand) and u_cand <= u + 1e-4 * s * slope:
                break
            s *= 0.5
        else:
            raise ModeSearchError("line search failed to find a decrease")
        x, u = x + s * direction, u_cand
        step = min(s * 2.0, 1e8)
    raise ModeSearchError(
        f"gradient norm {gnorm:.3e} still above tol {tol} after {it + 1} iterations"
    )


def trace_to_csv(trace: Trace, thin: int = 1) -> str:
    """CSV export: step, accepted, x_1..x_d, logU, with an optional thinning flag."""
    d = trace.states.shape[1]
    buf = io.StringIO()
    cols = ["step", "accepted"] + [f"x_{i+1}" for i in range(d)] + ["logU"]
    if thin > 1:
        cols.append("thinned")
    buf.write(",".join(cols) + "\n")
    for t in range(0, trace.states.shape[0], thin):
        row = [str(t), str(int(trace.accepted[t]))]
        row += [repr(float(v)) for v in trace.states[t]]
        row.append(repr(float(trace.log_potentials[t])))
        if thin > 1:
            row.append("1")
        buf.write(",".join(row) + "\n")
    return buf.getvalue()
