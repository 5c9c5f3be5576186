"""Condition numbers before and after preconditioning, and every bound on them.

Exact values are computed whenever the target exposes Loewner extremes of its
Hessian family; otherwise multistart search produces one-sided estimates.
Assumption constants (epsilon, delta, gamma) are measured over probe sets and
fed to the theorem bounds, which always hold in the sound direction: probes
can only under-estimate a supremum, and the bounds are increasing in the
measured constants.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment, minimize

from . import linalg
from .errors import (
    AssumptionViolationError,
    BoundInapplicableError,
    DegeneratePairingError,
    PrecondError,
)
from .preconditioners import Preconditioner
from .targets import DifferentiableTarget, MultiplicativeStructure

# Explicit constant of the RWM spectral-gap lower bound.
RWM_GAP_CONSTANT = 1.972e-4


@dataclass(frozen=True)
class EigenStructureParams:
    """Measured assumption constants for a (target, preconditioner) pair."""

    epsilon: float   # eigenvalue-ratio slack, or operator-norm slack
    delta: float     # eigenvector misalignment, in [0, 1]
    gamma: float     # eigengap of LL^T

    def __post_init__(self):
        if self.epsilon < 0 or self.gamma < 0 or not 0 <= self.delta <= 1:
            raise PrecondError(
                f"invalid constants eps={self.epsilon}, delta={self.delta}, "
                f"gamma={self.gamma}"
            )


@dataclass
class BoundReport:
    """A certified bound together with the constants that produced it."""

    kind: str
    value: float
    lower: Optional[float] = None
    inputs: dict = field(default_factory=dict)
    certified: bool = True
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "value": self.value,
            "inputs": {k: _jsonable(v) for k, v in self.inputs.items()},
            "certified": self.certified,
        }
        if self.lower is not None:
            out["lower"] = self.lower
        if self.extras:
            out["extras"] = {k: _jsonable(v) for k, v in self.extras.items()}
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


@dataclass(frozen=True)
class KappaEstimate:
    value: float
    provenance: str  # "closed-form" or "estimated"

    @property
    def exact(self) -> bool:
        return self.provenance == "closed-form"


def _check_convex_at(target: DifferentiableTarget, x: np.ndarray) -> np.ndarray:
    h = target.hessian(x)
    vals = np.linalg.eigvalsh(0.5 * (h + h.T))
    if vals[0] <= 0:
        raise AssumptionViolationError(
            f"Hessian has nonpositive eigenvalue {vals[0]:.3e} at a probe; "
            "target is not strongly log-concave there"
        )
    return vals


def _multistart_extremes(
    target: DifferentiableTarget,
    linv: Optional[np.ndarray],
    n_starts: int,
    seed: int,
) -> tuple[float, float]:
    """One-sided estimates of sup lambda_1 and inf lambda_d of the Hessian field."""
    d = target.dim
    rng = np.random.default_rng(seed)

    def transformed_eigs(x):
        h = target.hessian(np.asarray(x, dtype=float))
        if linv is not None:
            h = linv @ h @ linv
        return np.linalg.eigvalsh(0.5 * (h + h.T))

    best_max = -np.inf
    best_min = np.inf
    center = target.exact_mode if target.exact_mode is not None else np.zeros(d)
    for _ in range(n_starts):
        x0 = center + 2.0 * rng.standard_normal(d)
        _check_convex_at(target, x0)
        res_hi = minimize(
            lambda x: -transformed_eigs(x)[-1], x0,
            method="Nelder-Mead", options={"maxiter": 400, "xatol": 1e-7, "fatol": 1e-10},
        )
        res_lo = minimize(
            lambda x: transformed_eigs(x)[0], x0,
            method="Nelder-Mead", options={"maxiter": 400, "xatol": 1e-7, "fatol": 1e-10},
        )
        best_max = max(best_max, -res_hi.fun)
        best_min = min(best_min, res_lo.fun)
    if best_min <= 0:
        raise AssumptionViolationError(
            f"estimated smallest Hessian eigenvalue {best_min:.3e} is nonpositive"
        )
    return best_max, best_min


def condition_number(
    target: DifferentiableTarget, n_starts: int = 32, seed: int = 0
) -> KappaEstimate:
    """kappa = sup ||hessian|| * sup ||hessian^{-1}||, closed form when possible."""
    if target.envelope is not None:
        return KappaEstimate(value=target.envelope.kappa, provenance="closed-form")
    if target.hessian_lower is not None and target.hessian_upper is not None:
        hi = np.linalg.eigvalsh(target.hessian_upper)[-1]
        lo = np.linalg.eigvalsh(target.hessian_lower)[0]
        if lo <= 0:
            raise AssumptionViolationError(
                f"Hessian lower extreme is not positive definite ({lo:.3e})"
            )
        return KappaEstimate(value=float(hi / lo), provenance="closed-form")
    hi, lo = _multistart_extremes(target, None, n_starts, seed)
    return KappaEstimate(value=float(hi / lo), provenance="estimated")


def _cosine_kappa_after(
    target: DifferentiableTarget, linv: np.ndarray
) -> float:
    """Exact kappa_L for the cosine hard target.

    The Hessian family is the full box of diagonal matrices diag{a, b} with
    a, b in [m, M]; lambda_1 is convex and lambda_d concave over that box, so
    the extremes sit at corners. A grid sweep over the state space certifies
    the corner values.
    """
    m, big_m = target.params["m"], target.params["M"]
    corner_max = -np.inf
    corner_min = np.inf
    for a in (m, big_m):
        for b in (m, big_m):
            vals = np.linalg.eigvalsh(linv @ np.diag([a, b]) @ linv)
            corner_max = max(corner_max, vals[-1])
            corner_min = min(corner_min, vals[0])
    ts = np.linspace(0.0, 2.0 * np.pi, 64, endpoint=False)
    f = -0.5 * (m - big_m) * np.cos(ts) + 0.5 * (big_m + m)
    grid_max = -np.inf
    grid_min = np.inf
    for fa in f:
        for fb in f:
            vals = np.linalg.eigvalsh(linv @ np.diag([fa, fb]) @ linv)
            grid_max = max(grid_max, vals[-1])
            grid_min = min(grid_min, vals[0])
    tol = 1e-6 * max(abs(corner_max), 1.0)
    if grid_max > corner_max + tol or grid_min < corner_min - tol:
        raise PrecondError(
            "grid refinement contradicts the corner certificate for the "
            f"cosine target: corners [{corner_min:.6e}, {corner_max:.6e}], "
            f"grid [{grid_min:.6e}, {grid_max:.6e}]"
        )
    return float(corner_max / corner_min)


def kappa_after(
    target: DifferentiableTarget,
    precond: Preconditioner,
    n_starts: int = 32,
    seed: int = 0,
) -> KappaEstimate:
    """kappa_L = sup ||L^{-1} hess L^{-1}|| * sup ||L hess^{-1} L||."""
    linv = precond.inv
    if target.kind == "cosine":
        return KappaEstimate(
            value=_cosine_kappa_after(target, linv), provenance="closed-form"
        )
    if target.hessian_constant:
        h = linv @ target.hessian(np.zeros(target.dim)) @ linv
        summary = linalg.spectral_condition_number(0.5 * (h + h.T))
        if summary.lambda_min <= 0:
            raise AssumptionViolationError("constant Hessian is not positive definite")
        return KappaEstimate(value=summary.cond, provenance="closed-form")
    if target.hessian_lower is not None and target.hessian_upper is not None:
        h_up = linv @ target.hessian_upper @ linv
        h_lo = linv @ target.hessian_lower @ linv
        hi = np.linalg.eigvalsh(0.5 * (h_up + h_up.T))[-1]
        lo = np.linalg.eigvalsh(0.5 * (h_lo + h_lo.T))[0]
        if lo <= 0:
            raise AssumptionViolationError(
                f"preconditioned Hessian lower extreme not positive ({lo:.3e})"
            )
        return KappaEstimate(value=float(hi / lo), provenance="closed-form")
    hi, lo = _multistart_extremes(target, linv, n_starts, seed)
    return KappaEstimate(value=float(hi / lo), provenance="estimated")


def hard_target_lower(precond: Preconditioner, m: float, big_m: float) -> BoundReport:
    """Lower bound kappa(LL^T) * M/m on kappa_L for the cosine hard target."""
    sig = precond.sigma_sq
    kappa_llt = float(sig[0] / sig[-1])
    return BoundReport(
        kind="HardLower",
        value=kappa_llt * big_m / m,
        inputs={"kappa_llt": kappa_llt, "m": m, "M": big_m},
    )


# -- assumption constant measurement ----------------------------------------

def measure_eps_eigenvalue(
    target: DifferentiableTarget,
    precond: Preconditioner,
    probes: Sequence[np.ndarray],
) -> float:
    """Smallest eps with (1+eps)^{-1} <= lambda_i(x)/sigma_i^2 <= 1+eps on probes."""
    if len(probes) == 0:
        raise PrecondError("probe set is empty")
    sig = precond.sigma_sq
    eps = 0.0
    for x in probes:
        vals = _check_convex_at(target, np.asarray(x, dtype=float))[::-1]  # descending
        ratio = vals / sig
        eps = max(eps, float(ratio.max() - 1.0), float(1.0 / ratio.min() - 1.0))
    return eps


def measure_delta_eigenvector(
    target: DifferentiableTarget,
    precond: Preconditioner,
    probes: Sequence[np.ndarray],
) -> float:
    """Smallest delta with v_i(x)^T v_i >= 1 - (1 - sqrt(1-delta))^2 on probes.

    Eigenvectors of each probe Hessian are paired with those of LL^T by
    maximal absolute inner product (Hungarian assignment). Near-degenerate
    probe spectra make the pairing ambiguous and raise instead of guessing.
    """
    if len(probes) == 0:
        raise PrecondError("probe set is empty")
    v_l = precond.eigs.vectors
    worst = 1.0
    for x in probes:
        h = target.hessian(np.asarray(x, dtype=float))
        eig = linalg.sym_eigen(0.5 * (h + h.T))
        gaps = -np.diff(eig.values)
        if eig.dim > 1 and gaps.min() < 1e-10 * max(abs(eig.values[0]), 1.0):
            raise DegeneratePairingError(
                f"probe Hessian eigengap {gaps.min():.3e} is too small to pair "
                "eigenvectors unambiguously"
            )
        overlap = np.abs(eig.vectors.T @ v_l)
        rows, cols = linear_sum_assignment(-overlap)
        worst = min(worst, float(overlap[rows, cols].min()))
    worst = min(max(worst, 0.0), 1.0)
    # invert alignment a = 1 - (1 - sqrt(1-delta))^2 for delta
    delta = 1.0 - (1.0 - math.sqrt(1.0 - worst)) ** 2
    return float(min(max(delta, 0.0), 1.0))


def measure_eps_norm(
    target: DifferentiableTarget,
    precond: Preconditioner,
    probes: Sequence[np.ndarray],
) -> float:
    """Smallest eps with ||hessian(x) - LL^T|| <= sigma_d^2 eps on probes."""
    if len(probes) == 0:
        raise PrecondError("probe set is empty")
    llt = precond.llt()
    sig_d2 = precond.sigma_sq[-1]
    eps = 0.0
    for x in probes:
        h = target.hessian(np.asarray(x, dtype=float))
        eps = max(eps, linalg.spectral_norm(0.5 * (h + h.T) - llt) / sig_d2)
    return float(eps)


def measure_eps_hessian_variation(
    target: DifferentiableTarget, probes: Sequence[np.ndarray], m: float
) -> float:
    """Smallest eps with ||hessian(x) - hessian(y)|| <= m eps over probe pairs."""
    hs = [np.asarray(target.hessian(np.asarray(x, dtype=float))) for x in probes]
    eps = 0.0
    for i in range(len(hs)):
        for j in range(i + 1, len(hs)):
            diff = hs[i] - hs[j]
            eps = max(eps, linalg.spectral_norm(0.5 * (diff + diff.T)) / m)
    return float(eps)


def default_probes(
    target: DifferentiableTarget,
    precond: Preconditioner,
    seed: int = 0,
    n_chain: int = 128,
    n_local: int = 128,
) -> np.ndarray:
    """Probe points: equilibrated chain states plus local Gaussian draws.

    The Gaussian half is N(x*, 4 (LL^T)^{-1}), covering moderate tails where
    Hessian variation lives; the chain half covers the bulk.
    """
    from . import samplers  # local import: samplers sits above this module

    d = target.dim
    if target.exact_mode is not None:
        x_star = np.asarray(target.exact_mode, dtype=float)
    else:
        x_star = samplers.find_mode(target, precond, tol=1e-8)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x9E3779B9]))
    linv = precond.inv
    local = x_star + 2.0 * (rng.standard_normal((n_local, d)) @ linv.T)
    cfg = samplers.ChainConfig(
        kind="RWM",
        step_size=2.38 / math.sqrt(d),
        preconditioner=precond,
        n_steps=max(8 * n_chain, 512),
        seed=seed,
    )
    trace = samplers.rwm_chain(target, cfg, x0=x_star)
    states = trace.states
    idx = np.linspace(states.shape[0] // 2, states.shape[0] - 1, n_chain).astype(int)
    return np.vstack([states[idx], local])


# -- theorem bounds ----------------------------------------------------------

def bound_thm1(eps: float, delta: float, sigmas: np.ndarray) -> BoundReport:
    """kappa_L <= (1+eps)^2 (1 + delta sqrt(sum sigma_i^2 sum sigma_i^{-2}))^4."""
    if eps < 0:
        raise PrecondError(f"eps must be nonnegative, got {eps}")
    if not 0 <= delta <= 1:
        raise PrecondError(f"delta must lie in [0, 1], got {delta}")
    sigmas = np.asarray(sigmas, dtype=float)
    if np.any(sigmas <= 0):
        raise PrecondError("singular values must be positive")
    trace_factor = math.sqrt(float((sigmas**2).sum() * (sigmas**-2).sum()))
    value = (1.0 + eps) ** 2 * (1.0 + delta * trace_factor) ** 4
    kappa_llt = float((sigmas.max() / sigmas.min()) ** 2)
    return BoundReport(
        kind="Thm1",
        value=value,
        inputs={"eps": eps, "delta": delta, "sigmas": sigmas},
        extras={
            "trace_factor": trace_factor,
            "trace_factor_cap": sigmas.shape[0] * math.sqrt(kappa_llt),
        },
    )


def bound_thm2(
    eps: float, gamma: float, sigma_d: float, sigmas: np.ndarray
) -> BoundReport:
    """Theorem 1 with delta derived from the eigengap via Davis-Kahan."""
    if gamma <= 0:
        raise BoundInapplicableError(
            "LL^T has zero eigengap; the Davis-Kahan route needs gamma > 0"
        )
    t = 2.0 * eps / (gamma * sigma_d**2)
    if t > 1.0:
        raise BoundInapplicableError(
            f"2 eps / (gamma sigma_d^2) = {t:.4g} exceeds 1; the derived delta "
            "leaves its valid range and the bound is undefined"
        )
    delta = 1.0 - (1.0 - t) ** 2
    rep = bound_thm1(eps, delta, sigmas)
    return BoundReport(
        kind="Thm2",
        value=rep.value,
        inputs={"eps": eps, "gamma": gamma, "sigma_d": sigma_d, "sigmas": sigmas},
        extras={"delta": delta, **rep.extras},
    )


def bound_thm3(eps: float, sigma1: float, m: float) -> BoundReport:
    """kappa_L <= (1 + eps)(1 + sigma_1^2 eps / m)."""
    if eps < 0 or m <= 0 or sigma1 <= 0:
        raise PrecondError("need eps >= 0, sigma1 > 0, m > 0")
    value = (1.0 + eps) * (1.0 + sigma1**2 * eps / m)
    return BoundReport(
        kind="Thm3", value=value, inputs={"eps": eps, "sigma1": sigma1, "m": m}
    )


@dataclass(frozen=True)
class GivensKappa:
    kappa_l: float
    trace: float
    delta4_coefficient: float


def givens_delta_kappa(lambda1: float, lambda2: float, delta: float) -> GivensKappa:
    """Exact kappa_L of the worst-case two-dimensional misalignment construction.

    With D = diag(lambda1, lambda2), G the rotation by arccos(1-delta), and
    M = D^{1/2} G^T D^{-1} G D^{1/2}, det M = 1 and
    tr M = 2(1-delta)^2 + delta(2-delta) l with l = lambda1/lambda2 +
    lambda2/lambda1, so kappa_L = lambda_1(M)^2 follows from the quadratic
    characteristic polynomial. The quartic trend of the bound in delta has
    leading coefficient (l-2)^2/4, reported alongside.
    """
    if lambda1 <= 0 or lambda2 <= 0:
        raise PrecondError("lambda1, lambda2 must be positive")
    if lambda1 == lambda2:
        raise PrecondError("lambda1 and lambda2 must differ")
    if not 0 <= delta <= 1:
        raise PrecondError(f"delta must lie in [0, 1], got {delta}")
    l = lambda1 / lambda2 + lambda2 / lambda1
    trace = 2.0 * (1.0 - delta) ** 2 + delta * (2.0 - delta) * l
    lam_max = 0.5 * (trace + math.sqrt(max(trace**2 - 4.0, 0.0)))
    return GivensKappa(
        kappa_l=lam_max**2,
        trace=trace,
        delta4_coefficient=0.25 * (l - 2.0) ** 2,
    )


# -- multiplicative Hessian bounds -------------------------------------------

def _mult_structure(target: DifferentiableTarget) -> MultiplicativeStructure:
    if not isinstance(target.structure, MultiplicativeStructure):
        raise PrecondError("target does not expose a multiplicative Hessian")
    s = target.structure
    if s.entry_inf is None or s.entry_sup is None:
        raise PrecondError("multiplicative structure is missing entry extremes")
    return s


def mult_kappa_bounds(target: DifferentiableTarget) -> BoundReport:
    """Sandwich on kappa from rectangular Ostrowski.

    Entry extremes are assumed jointly attainable (true for logistic-type
    families, where all entries peak at the same point).
    """
    s = _mult_structure(target)
    n, d = s.design.shape
    kappa_xtx = linalg.spectral_condition_number(s.design.T @ s.design).cond
    sup_l1 = float(s.entry_sup.max())
    inf_ld = float(s.entry_inf.min())
    sup_lk = float(np.sort(s.entry_sup)[::-1][n - d])  # (n-d+1)-th largest
    lower = sup_lk / (inf_ld * kappa_xtx)
    upper = kappa_xtx * sup_l1 / inf_ld
    return BoundReport(
        kind="Prop3",
        value=upper,
        lower=lower,
        inputs={
            "kappa_xtx": kappa_xtx,
            "sup_lambda1": sup_l1,
            "inf_lambdad": inf_ld,
            "sup_lambda_ndp1": sup_lk,
        },
    )


def mult_dalalyan(target: DifferentiableTarget) -> BoundReport:
    """Sandwich on kappa_L for L = (X^T X)^{1/2}, with the C/c corollary value."""
    s = _mult_structure(target)
    n, d = s.design.shape
    sup_l1 = float(s.entry_sup.max())
    inf_ld = float(s.entry_inf.min())
    sup_lk = float(np.sort(s.entry_sup)[::-1][n - d])
    c, big_c = s.lambda_extremes
    return BoundReport(
        kind="Prop5",
        value=sup_l1 / inf_ld,
        lower=sup_lk / inf_ld,
        inputs={"sup_lambda1": sup_l1, "inf_lambdad": inf_ld, "c": c, "C": big_c},
        extras={"corollary_value": big_c / c},
    )


def mult_mode_bound(target: DifferentiableTarget, x_star: np.ndarray) -> BoundReport:
    """Upper bounds on kappa_L for L = (X^T Lambda(x*) X)^{1/2}."""
    s = _mult_structure(target)
    lam_star = np.asarray(s.diag(np.asarray(x_star, dtype=float)), dtype=float)
    if np.any(lam_star <= 0):
        raise PrecondError("Lambda(x*) must be positive")
    first = float((s.entry_sup / lam_star).max() / (s.entry_inf / lam_star).min())
    cap = float((s.entry_sup.max() / s.entry_inf.min()) ** 2)
    return BoundReport(
        kind="Prop6",
        value=first,
        inputs={"lambda_star_min": lam_star.min(), "lambda_star_max": lam_star.max()},
        extras={"squared_ratio_cap": cap},
    )


# -- Fisher, spectral gap, O-U, localisation ---------------------------------

def fisher_bound(eps: float, sigma1: float, sigma_d: float, m: float) -> BoundReport:
    """Fisher-preconditioner guarantees from a verified norm slack eps.

    ||hessian(x) - Fisher|| <= 2 sigma_d^2 eps, and the square-root-Fisher
    preconditioner satisfies kappa_L <= (1+2 eps)(1 + 2 sigma_1^2 eps / m).
    """
    if eps < 0 or m <= 0:
        raise PrecondError("need eps >= 0 and m > 0")
    return BoundReport(
        kind="FisherCor",
        value=(1.0 + 2.0 * eps) * (1.0 + 2.0 * sigma1**2 * eps / m),
        inputs={"eps": eps, "sigma1": sigma1, "sigma_d": sigma_d, "m": m},
        extras={"norm_bound": 2.0 * sigma_d**2 * eps},
    )


def rwm_gap_bounds(
    kappa: float, d: int, xi: float, eps: float, big_m: Optional[float] = None
) -> BoundReport:
    """Sandwich on the RWM spectral gap at proposal variance xi/(M d)."""
    if kappa < 1 or d < 1 or xi <= 0 or eps < 0:
        raise PrecondError("need kappa >= 1, d >= 1, xi > 0, eps >= 0")
    lower = RWM_GAP_CONSTANT * xi * math.exp(-2.0 * xi) / (kappa * d)
    upper = (1.0 + 2.0 * eps) * 0.5 * xi / (kappa * d)
    extras = {}
    if big_m is not None:
        extras["sigma2"] = xi / (big_m * d)
    return BoundReport(
        kind="GapSandwich",
        value=upper,
        lower=lower,
        inputs={"kappa": kappa, "d": d, "xi": xi, "eps": eps},
        extras=extras,
    )


def improved_gap_threshold(
    eps_prime: float, eps: float, sigma1: float, m: float, xi: float
) -> BoundReport:
    """kappa threshold above which preconditioning provably raises the gap."""
    if min(eps_prime, eps, sigma1, m, xi) < 0 or m <= 0:
        raise PrecondError("all arguments must be nonnegative with m > 0")
    value = (
        0.5
        / RWM_GAP_CONSTANT
        * math.exp(2.0 * xi)
        * (1.0 + 2.0 * eps_prime)
        * (1.0 + eps)
        * (1.0 + sigma1**2 * eps / m)
    )
    return BoundReport(
        kind="ImprovedGapThreshold",
        value=value,
        inputs={
            "eps_prime": eps_prime, "eps": eps, "sigma1": sigma1, "m": m, "xi": xi
        },
    )


def ou_spectral_gap(l_mat: np.ndarray, sigma: np.ndarray) -> tuple[float, bool]:
    """Spectral gap of the preconditioned Ornstein-Uhlenbeck drift.

    Returns (min_i |lambda_i(-L^{-1} L^{-T} Sigma^{-1})|, determinant
    constraint |det| = 1 satisfied within 1e-9).
    """
    l_mat = np.asarray(l_mat, dtype=float)
    sigma_inv = linalg.sym_inv(linalg.check_symmetric(sigma, "sigma"))
    linv = np.linalg.inv(l_mat)
    drift = -linv @ linv.T @ sigma_inv
    eigs = np.linalg.eigvals(drift)
    gap = float(np.abs(eigs).min())
    det = abs(float(np.linalg.det(drift)))
    return gap, bool(abs(det - 1.0) <= 1e-9)


def covariance_localisation(
    delta_minus: np.ndarray,
    delta_plus: np.ndarray,
    x_star: np.ndarray,
    mu: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Loewner localisation of the inverse covariance from Hessian envelopes.

    Given Delta_- <= hessian(x) <= Delta_+ everywhere, returns (P_-, P_+,
    norm_bound) with P_- <= Sigma_pi^{-1} <= P_+ and
    ||hessian(x) - Sigma_pi^{-1}|| <= norm_bound.
    """
    dm = linalg.check_symmetric(delta_minus, "delta_minus")
    dp = linalg.check_symmetric(delta_plus, "delta_plus")
    if not linalg.loewner_leq(dm, dp, tol=1e-10):
        raise PrecondError("delta_minus must precede delta_plus in Loewner order")
    for name, mat in (("delta_minus", dm), ("delta_plus", dp)):
        vals = np.linalg.eigvalsh(mat)
        if vals[0] <= 0:
            raise PrecondError(f"{name} must be positive definite")
    v = np.asarray(x_star, dtype=float) - np.asarray(mu, dtype=float)
    tr_p = float(v @ dp @ v)  # = Tr(D_+)
    tr_m = float(v @ dm @ v)
    if tr_p >= 1.0 or tr_m >= 1.0:
        raise BoundInapplicableError(
            f"mode-mean displacement too large: 1 - v^T Delta v = "
            f"{1 - tr_p:.4g} (+), {1 - tr_m:.4g} (-) must stay positive"
        )
    sign_m, logdet_m = np.linalg.slogdet(dm)
    sign_p, logdet_p = np.linalg.slogdet(dp)
    c = math.exp(0.5 * (logdet_m - logdet_p))
    dp_v = dp @ v
    dm_v = dm @ v
    p_plus = (dp + np.outer(dp_v, dp_v) / (1.0 - tr_p)) / c
    p_minus = c * (dm + np.outer(dm_v, dm_v) / (1.0 - tr_m))
    norm_bound = max(
        linalg.spectral_norm(dp - p_minus), linalg.spectral_norm(p_plus - dm)
    )
    return p_minus, p_plus, float(norm_bound)


def covariance_localisation_additive(
    a: np.ndarray, eps: float, x_star: np.ndarray, mu: np.ndarray
) -> BoundReport:
    """Localisation bound for additive Hessians A + B(x) with ||B(x)|| <= eps."""
    a = linalg.check_symmetric(a, "A")
    vals = np.linalg.eigvalsh(a)
    if eps <= 0 or vals[0] <= eps:
        raise BoundInapplicableError(
            f"need eps I strictly below A: lambda_min(A) = {vals[0]:.4g}, "
            f"eps = {eps:.4g}"
        )
    d = a.shape[0]
    a_plus = a + eps * np.eye(d)
    a_minus = a - eps * np.eye(d)
    v = np.asarray(x_star, dtype=float) - np.asarray(mu, dtype=float)
    tr_p = float(v @ a_plus @ v)
    tr_m = float(v @ a_minus @ v)
    if tr_p >= 1.0 or tr_m >= 1.0:
        raise BoundInapplicableError(
            "mode-mean displacement too large for the localisation corollary"
        )
    _, logdet_m = np.linalg.slogdet(a_minus)
    _, logdet_p = np.linalg.slogdet(a_plus)
    c = math.exp(0.5 * (logdet_m - logdet_p))
    ap_v = a_plus @ v
    am_v = a_minus @ v
    p_tilde_plus = np.outer(ap_v, ap_v) / (c * (1.0 - tr_p))
    p_tilde_minus = c * np.outer(am_v, am_v) / (1.0 - tr_m)
    value = (
        (1.0 / c + 1.0) * eps
        + (1.0 / c - 1.0) * linalg.spectral_norm(a)
        + max(
            linalg.spectral_norm(p_tilde_minus), linalg.spectral_norm(p_tilde_plus)
        )
    )
    return BoundReport(
        kind="CovLocaliseAdditive",
        value=float(value),
        inputs={"eps": eps, "c": c, "norm_a": linalg.spectral_norm(a)},
    )


def diag_dominance_bound(sigma: np.ndarray) -> BoundReport:
    """Bound on the correlation-matrix condition number via diagonal dominance.

    With alpha the largest value such that alpha * sum_{j != i} |C_ij| <= 1
    for every row, returns
    d ((1+alpha)/(1-alpha))^2 (max Sigma_ii / min Sigma_ii) kappa(Sigma)
    for alpha < 1, falling back to d (max/min) kappa(Sigma) otherwise. Both
    variants dominate the plain rescaling bound
    kappa(C) <= (max Sigma_ii / min Sigma_ii) kappa(Sigma) and are sound.
    """
    sigma = linalg.check_symmetric(sigma, "sigma")
    d = sigma.shape[0]
    diag = np.diag(sigma)
    if np.any(diag <= 0):
        raise PrecondError("sigma must have a positive diagonal")
    corr = sigma / np.sqrt(np.outer(diag, diag))
    off = np.abs(corr).sum(axis=1) - np.abs(np.diag(corr))
    max_off = float(off.max())
    alpha = math.inf if max_off == 0.0 else 1.0 / max_off
    kappa_sigma = linalg.spectral_condition_number(sigma).cond
    ratio = float(diag.max() / diag.min())
    if alpha < 1.0:
        value = d * ((1.0 + alpha) / (1.0 - alpha)) ** 2 * ratio * kappa_sigma
    else:
        value = d * ratio * kappa_sigma
    return BoundReport(
        kind="DiagDominance",
        value=value,
        inputs={"alpha": alpha if math.isfinite(alpha) else "inf",
                "kappa_sigma": kappa_sigma, "diag_ratio": ratio, "d": d},
        extras={"kappa_corr": linalg.spectral_condition_number(corr).cond},
    )
