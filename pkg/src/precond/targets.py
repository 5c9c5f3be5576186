"""Concrete target distributions with potentials, gradients and Hessians.

Each constructor returns a :class:`DifferentiableTarget` carrying analytic
derivatives, a smoothness envelope (m, M) where one is known, and structural
metadata (additive A + B(x) or multiplicative X^T Lambda(x) X Hessians) that
downstream condition-number computations exploit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy.integrate import cumulative_trapezoid

from . import linalg
from .errors import DefinitenessError, PrecondError, SingularMatrixError


@dataclass(frozen=True)
class SmoothnessEnvelope:
    """Strong-convexity / smoothness constants m I <= hessian <= M I.

    ``m_attained`` / ``big_m_attained`` flag whether the constant is attained
    at some point or only approached as an infimum/supremum; limiting extremes
    are still valid sup/inf values for condition-number purposes.
    """

    m: float
    big_m: float
    m_attained: bool = True
    big_m_attained: bool = True

    def __post_init__(self):
        if not (0 < self.m <= self.big_m):
            raise PrecondError(f"invalid envelope m={self.m}, M={self.big_m}")

    @property
    def kappa(self) -> float:
        return self.big_m / self.m


@dataclass(frozen=True)
class AdditiveStructure:
    """Hessian of the form A + B(x) with ||B(x)|| uniformly small."""

    base: np.ndarray                          # A, symmetric
    varying: Callable[[np.ndarray], np.ndarray]  # x -> B(x), symmetric
    varying_norm_bound: Optional[float] = None   # sup_x ||B(x)||


@dataclass(frozen=True)
class MultiplicativeStructure:
    """Hessian of the form X^T Lambda(x) X with Lambda diagonal.

    ``entry_inf`` / ``entry_sup`` are per-row infima and suprema of the
    diagonal of Lambda over the whole state space.
    """

    design: np.ndarray                            # X, n x d
    diag: Callable[[np.ndarray], np.ndarray]      # x -> diagonal of Lambda(x)
    entry_inf: np.ndarray
    entry_sup: np.ndarray

    @property
    def lambda_extremes(self) -> tuple[float, float]:
        """(c, C) = (inf of the smallest entry, sup of the largest entry)."""
        return float(self.entry_inf.min()), float(self.entry_sup.max())


Structure = Union[AdditiveStructure, MultiplicativeStructure, None]


@dataclass(frozen=True)
class DifferentiableTarget:
    """A potential U with analytic derivatives and optional structure.

    ``hessian_lower`` / ``hessian_upper`` are Loewner-order extremes of the
    Hessian family (attained or limiting); when present they make post-
    preconditioning condition numbers computable in closed form.
    """

    dim: int
    potential: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    hessian: Callable[[np.ndarray], np.ndarray]
    envelope: Optional[SmoothnessEnvelope] = None
    structure: Structure = None
    exact_covariance: Optional[np.ndarray] = None
    exact_mode: Optional[np.ndarray] = None
    hessian_constant: bool = False
    hessian_lower: Optional[np.ndarray] = None
    hessian_upper: Optional[np.ndarray] = None
    kind: str = "generic"
    params: dict = field(default_factory=dict)


def gaussian_target(mu: np.ndarray, sigma: np.ndarray) -> DifferentiableTarget:
    """Gaussian N(mu, sigma) as a target; U(x) = (x-mu)^T Sigma^{-1} (x-mu)/2."""
    mu = np.asarray(mu, dtype=float)
    sigma = linalg.check_symmetric(sigma, "sigma")
    eig = linalg.sym_eigen(sigma)
    if eig.values[-1] <= linalg.DEFINITENESS_RTOL * eig.values[0]:
        raise DefinitenessError(
            f"covariance is not positive definite (smallest eigenvalue "
            f"{eig.values[-1]:.3e})",
            offending_eigenvalue=float(eig.values[-1]),
        )
    precision = (eig.vectors / eig.values) @ eig.vectors.T

    def potential(x):
        r = np.asarray(x, dtype=float) - mu
        return 0.5 * float(r @ precision @ r)

    def gradient(x):
        return precision @ (np.asarray(x, dtype=float) - mu)

    def hessian(x):
        return precision

    return DifferentiableTarget(
        dim=mu.shape[0],
        potential=potential,
        gradient=gradient,
        hessian=hessian,
        envelope=SmoothnessEnvelope(
            m=1.0 / eig.values[0], big_m=1.0 / eig.values[-1]
        ),
        exact_covariance=sigma,
        exact_mode=mu,
        hessian_constant=True,
        hessian_lower=precision,
        hessian_upper=precision,
        kind="gaussian",
    )


def cosine_hard_target(m: float, big_m: float) -> DifferentiableTarget:
    """The 2-d 'hard' target whose Hessian eigenvalues each sweep all of [m, M].

    U(x, y) = (m-M)/2 (cos x + cos y) + (M+m)/2 (x^2/2 + y^2/2), so the
    Hessian is diag{f(x), f(y)} with f(t) = (M-m)/2 cos t + (M+m)/2.
    """
    if not (0 < m <= big_m):
        raise PrecondError(f"need 0 < m <= M, got m={m}, M={big_m}")
    a = 0.5 * (m - big_m)
    b = 0.5 * (big_m + m)

    def f(t):
        return -a * np.cos(t) + b  # = (M-m)/2 cos t + (M+m)/2

    def potential(x):
        x = np.asarray(x, dtype=float)
        return float(a * np.cos(x).sum() + 0.5 * b * (x @ x))

    def gradient(x):
        x = np.asarray(x, dtype=float)
        return -a * np.sin(x) + b * x

    def hessian(x):
        x = np.asarray(x, dtype=float)
        return np.diag(f(x))

    return DifferentiableTarget(
        dim=2,
        potential=potential,
        gradient=gradient,
        hessian=hessian,
        envelope=SmoothnessEnvelope(m=m, big_m=big_m),
        exact_mode=np.zeros(2),
        hessian_lower=m * np.eye(2),
        hessian_upper=big_m * np.eye(2),
        kind="cosine",
        params={"m": m, "M": big_m},
    )


def hyperbolic_regression_target(
    x_mat: np.ndarray, y: np.ndarray, sigma2: float, lam: float
) -> DifferentiableTarget:
    """Bayesian linear regression with a hyperbolic (smooth-Laplace) prior.

    U(beta) = ||Y - X beta||^2 / (2 sigma^2) + lam * sum_i sqrt(1 + beta_i^2)
    with Hessian A + lam * diag{(1 + beta_i^2)^{-3/2}}, A = X^T X / sigma^2.
    """
    x_mat = np.asarray(x_mat, dtype=float)
    y = np.asarray(y, dtype=float)
    n, d = x_mat.shape
    if n < d:
        raise PrecondError(f"need n >= d, got n={n}, d={d}")
    if sigma2 <= 0 or lam <= 0:
        raise PrecondError("sigma2 and lambda must be positive")
    xtx = x_mat.T @ x_mat
    xtx_eig = linalg.sym_eigen(xtx)
    if xtx_eig.values[-1] <= linalg.DEFINITENESS_RTOL * xtx_eig.values[0]:
        raise SingularMatrixError("X^T X is singular")
    a_mat = xtx / sigma2
    xty = x_mat.T @ y
    yty = float(y @ y)

    def potential(beta):
        beta = np.asarray(beta, dtype=float)
        quad = yty - 2.0 * (beta @ xty) + beta @ xtx @ beta
        return 0.5 * quad / sigma2 + lam * np.sqrt(1.0 + beta * beta).sum()

    def gradient(beta):
        beta = np.asarray(beta, dtype=float)
        return (xtx @ beta - xty) / sigma2 + lam * beta / np.sqrt(1.0 + beta * beta)

    def varying(beta):
        beta = np.asarray(beta, dtype=float)
        return lam * np.diag((1.0 + beta * beta) ** -1.5)

    def hessian(beta):
        return a_mat + varying(beta)

    return DifferentiableTarget(
        dim=d,
        potential=potential,
        gradient=gradient,
        hessian=hessian,
        envelope=SmoothnessEnvelope(
            m=xtx_eig.values[-1] / sigma2,
            big_m=xtx_eig.values[0] / sigma2 + lam,
            m_attained=False,   # infimum as ||beta|| -> infinity
            big_m_attained=True,  # at beta = 0
        ),
        structure=AdditiveStructure(
            base=a_mat, varying=varying, varying_norm_bound=lam
        ),
        hessian_lower=a_mat,
        hessian_upper=a_mat + lam * np.eye(d),
        kind="hyperbolic",
        params={"sigma2": sigma2, "lambda": lam},
    )


def binomial_gprior_target(
    x_mat: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    lambda_over_n: float,
) -> DifferentiableTarget:
    """Bayesian binomial regression with a generalised g-prior.

    The prior precision is scaled so the Hessian is exactly
    X^T Lambda(beta) X with
    Lambda(beta) = W diag{p_i(beta)(1 - p_i(beta)) + lambda_over_n},
    where p_i = logistic(X_i^T beta) and lambda_over_n plays the role of
    (g phi c)^{-1}.
    """
    x_mat = np.asarray(x_mat, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    n, d = x_mat.shape
    if np.any(w <= 0):
        raise PrecondError("all weights must be positive")
    r = float(lambda_over_n)
    xtx = x_mat.T @ x_mat
    xtx_eig = linalg.sym_eigen(xtx)
    if xtx_eig.values[-1] <= linalg.DEFINITENESS_RTOL * xtx_eig.values[0]:
        raise SingularMatrixError("X^T X is singular")
    prior_prec = r * (x_mat.T @ (w[:, None] * x_mat))  # r X^T W X

    def potential(beta):
        beta = np.asarray(beta, dtype=float)
        t = x_mat @ beta
        ll = w @ ((1.0 - y) * t + np.logaddexp(0.0, -t))
        return float(ll + 0.5 * beta @ prior_prec @ beta)

    def gradient(beta):
        beta = np.asarray(beta, dtype=float)
        t = x_mat @ beta
        p = 1.0 / (1.0 + np.exp(-t))
        return x_mat.T @ (w * (p - y)) + prior_prec @ beta

    def lam_diag(beta):
        beta = np.asarray(beta, dtype=float)
        t = x_mat @ beta
        p = 1.0 / (1.0 + np.exp(-t))
        return w * (p * (1.0 - p) + r)

    def hessian(beta):
        return x_mat.T @ (lam_diag(beta)[:, None] * x_mat)

    entry_inf = w * r
    entry_sup = w * (0.25 + r)
    return DifferentiableTarget(
        dim=d,
        potential=potential,
        gradient=gradient,
        hessian=hessian,
        envelope=SmoothnessEnvelope(
            m=r * w.min() * xtx_eig.values[-1],
            big_m=(0.25 + r) * w.max() * xtx_eig.values[0],
            m_attained=False,
            big_m_attained=False,
        ),
        structure=MultiplicativeStructure(
            design=x_mat,
            diag=lam_diag,
            entry_inf=entry_inf,
            entry_sup=entry_sup,
        ),
        hessian_lower=x_mat.T @ (entry_inf[:, None] * x_mat),
        hessian_upper=x_mat.T @ (entry_sup[:, None] * x_mat),
        kind="binomial",
        params={"lambda_over_n": r, "n": n},
    )


def sample_hyperbolic_prior(
    d: int, lam: float, rng: np.random.Generator
) -> np.ndarray:
    """Draw from the density proportional to exp(-lam sqrt(1 + b^2)) per coordinate.

    Sampling is by numerical inversion of the CDF on a fine grid. The density
    has sub-exponential tails exp(-lam |b|), so the grid is truncated where
    the tail mass is below 1e-15 of the total; near the mode the density is
    approximately Gaussian with standard deviation 1/sqrt(lam), and the grid
    is fine relative to both scales.
    """
    if lam <= 0:
        raise PrecondError(f"prior rate must be positive, got {lam}")
    half_width = 1.0 / np.sqrt(lam) + 40.0 / lam
    n_grid = 20001
    grid = np.linspace(-half_width, half_width, n_grid)
    log_density = -lam * np.sqrt(1.0 + grid * grid)
    density = np.exp(log_density - log_density.max())
    cdf = cumulative_trapezoid(density, grid, initial=0.0)
    cdf /= cdf[-1]
    u = rng.random(d)
    return np.interp(u, cdf, grid)


def synth_regression_data(
    d: int, n: int, seed: int, standardize: bool = False
) -> tuple[np.ndarray, np.ndarray, float]:
    """Synthetic data for the hyperbolic-prior regression experiment.

    X has iid standard-normal entries, beta_0 is drawn from the hyperbolic
    prior, Y = X beta_0 + N(0, I), and lambda = sqrt(n)/d. Columns are left
    as generated by default; ``standardize`` rescales them to unit variance
    for the model-definition reading.
    """
    if not (1 <= d <= n):
        raise PrecondError(f"need n >= d >= 1, got d={d}, n={n}")
    rng = np.random.default_rng(seed)
    x_mat = rng.standard_normal((n, d))
    if standardize:
        sd = x_mat.std(axis=0, ddof=1)
        x_mat = x_mat / sd
    lam = np.sqrt(n) / d
    beta0 = sample_hyperbolic_prior(d, lam, rng)
    y = x_mat @ beta0 + rng.standard_normal(n)
    return x_mat, y, float(lam)


def synth_binomial_data(
    d: int, n: int, mu: float, seed: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Synthetic data for the binomial g-prior experiment.

    X = G + mu with iid standard-normal G, weights w_i = i^2, and responses
    Y_i = S_i / w_i with S_i ~ Binomial(w_i, logistic(X_i^T beta_0)),
    beta_0 ~ N(0, I).
    """
    if not (1 <= d <= n) or mu < 0:
        raise PrecondError(f"need n >= d >= 1 and mu >= 0, got d={d}, n={n}, mu={mu}")
    rng = np.random.default_rng(seed)
    x_mat = rng.standard_normal((n, d)) + mu
    beta0 = rng.standard_normal(d)
    p = 1.0 / (1.0 + np.exp(-(x_mat @ beta0)))
    w = np.arange(1, n + 1, dtype=float) ** 2
    s = rng.binomial(w.astype(np.int64), p)
    y = s / w
    return x_mat, y, w


def finite_diff_check(
    target: DifferentiableTarget, x: np.ndarray, step: Optional[float] = None
) -> tuple[float, float]:
    """Relative error of the analytic gradient and Hessian vs central differences."""
    x = np.asarray(x, dtype=float)
    if step is None:
        step = 1e-5 * (1.0 + np.linalg.norm(x))
    d = x.shape[0]
    grad_fd = np.empty(d)
    hess_fd = np.empty((d, d))
    for i in range(d):
        e = np.zeros(d)
        e[i] = step
        grad_fd[i] = (target.potential(x + e) - target.potential(x - e)) / (2 * step)
        hess_fd[:, i] = (target.gradient(x + e) - target.gradient(x - e)) / (2 * step)
    hess_fd = 0.5 * (hess_fd + hess_fd.T)
    g = target.gradient(x)
    h = target.hessian(x)
    grad_err = np.linalg.norm(grad_fd - g) / max(1.0, np.linalg.norm(g))
    hess_err = np.linalg.norm(hess_fd - h) / max(1.0, np.linalg.norm(h))
    return float(grad_err), float(hess_err)
