"""Closed forms, quadrature and statistics for the theory checks.

Constant conventions: the renewal-increment constant is
C_alpha = 1/(Gamma(alpha) Gamma(2-alpha)).  The excess-fraction limit density
is normalized with D_alpha = sin(pi alpha)/pi = 1/(Gamma(alpha) Gamma(1-alpha)),
because int_0^inf y^-alpha/(1+y) dy = pi/sin(pi alpha): with C_alpha the
"density" would integrate to 1/(1-alpha).  Passing C_alpha in place of
D_alpha stays supported so the normalization failure is demonstrable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import betainc, betaincinv, gamma as gamma_fn
from scipy.stats import norm as norm_dist


def _check_alpha(alpha, lo=0.0, hi=1.0):
    if not lo < alpha < hi:
        raise ValueError(f"alpha must lie in ({lo},{hi}), got {alpha}")
    return float(alpha)


def c_alpha(alpha: float) -> float:
    """Renewal-increment constant 1/(Gamma(alpha) Gamma(2-alpha))."""
    a = _check_alpha(alpha)
    return 1.0 / (gamma_fn(a) * gamma_fn(2.0 - a))


def d_alpha(alpha: float) -> float:
    """Normalizing constant sin(pi alpha)/pi of the excess-fraction density."""
    a = _check_alpha(alpha)
    return math.sin(math.pi * a) / math.pi


def dl_density(alpha: float, y) -> np.ndarray:
    """Limit density of E(t)/t: D_alpha * y^-alpha / (1+y) on y > 0."""
    a = _check_alpha(alpha)
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    pos = y > 0
    out[pos] = d_alpha(a) * y[pos] ** (-a) / (1.0 + y[pos])
    return out if out.ndim else float(out)


def _singular_head(alpha: float, delta: float) -> float:
    """int_0^delta y^-alpha/(1+y) dy with the singular leading term analytic."""
    lead = delta ** (1.0 - alpha) / (1.0 - alpha)
    # remainder: 1/(1+y) = 1 - y/(1+y); the correction integrand is bounded
    corr, _ = integrate.quad(
        lambda y: y ** (1.0 - alpha) / (1.0 + y), 0.0, delta, epsrel=1e-11, epsabs=1e-14
    )
    return lead - corr


def _g_raw(alpha: float, x: float) -> float:
    """int_0^x y^-alpha/(1+y) dy by quadrature (singular head analytic)."""
    if x <= 0:
        return 0.0
    delta = min(x, 0.5)
    total = _singular_head(alpha, delta)
    lo = delta
    while lo < x:
        hi = min(max(lo * 10.0, 1.0), x)
        val, err = integrate.quad(
            lambda y: y ** (-alpha) / (1.0 + y), lo, hi, epsrel=1e-10, epsabs=0, limit=200
        )
        if err > 1e-8 * max(abs(val), 1e-300):
            raise RuntimeError(f"quadrature failed on [{lo},{hi}]: err={err}")
        total += val
        lo = hi
    return total


def _g_beta(alpha: float, x) -> np.ndarray:
    """Same integral through the regularized incomplete beta (fast path)."""
    x = np.asarray(x, dtype=float)
    z = x / (1.0 + x)
    return betainc(1.0 - alpha, alpha, z) * (math.pi / math.sin(math.pi * alpha))


def _g_beta_recip(alpha: float, u) -> np.ndarray:
    """g(1/u), written without dividing by u (u = 0 maps to g(inf))."""
    z = 1.0 / (1.0 + np.asarray(u, dtype=float))
    return betainc(1.0 - alpha, alpha, z) * (math.pi / math.sin(math.pi * alpha))


def dl_cdf(alpha: float, x: float, constant: float | None = None) -> float:
    """P(limit of E(t)/t <= x), by adaptive quadrature of the density.

    ``constant`` overrides the normalization (default D_alpha); passing
    c_alpha(alpha) reproduces the un-normalized variant for regression tests.
    """
    a = _check_alpha(alpha)
    if x < 0:
        raise ValueError(f"x must be >= 0, got {x}")
    const = d_alpha(a) if constant is None else float(constant)
    if x == 0:
        return 0.0
    return const * _g_raw(a, float(x))


def dl_mass(alpha: float, constant: float | None = None) -> float:
    """Total mass of constant * y^-alpha/(1+y) over (0, inf).

    Computed by quadrature: the tail int_X^inf maps to the same singular-head
    integral with exponent 1-alpha under y -> 1/y.
    """
    a = _check_alpha(alpha)
    const = d_alpha(a) if constant is None else float(constant)
    return const * (_g_raw(a, 1.0) + _g_raw(1.0 - a, 1.0))


def dl_quantile(alpha: float, q) -> np.ndarray:
    """Inverse of the normalized limit CDF (via the incomplete beta inverse)."""
    a = _check_alpha(alpha)
    z = betaincinv(1.0 - a, a, np.asarray(q, dtype=float))
    return z / (1.0 - z)


def sample_dl(alpha: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """Draws from the normalized limit law of E(t)/t."""
    return dl_quantile(alpha, rng.random(size))


def sample_dl_max(alpha: float, m: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """Draws of the maximum of m independent limit-law variables."""
    # max CDF is F^m, so invert at u^(1/m)
    return dl_quantile(alpha, rng.random(size) ** (1.0 / m))


@dataclass(frozen=True)
class ThresholdReport:
    alpha: float
    v_minus: float
    v_plus: float
    gap: float
    indeterminate_sizes: tuple


def thresholds(alpha: float) -> ThresholdReport:
    """Extinction/survival size thresholds for alpha in (1/2, 1)."""
    a = _check_alpha(alpha, 0.5, 1.0)
    v_plus = 1.0 / (1.0 - a)
    v_minus = 2.0 + (2.0 * a - 1.0) / ((1.0 - a) * (2.0 - a))
    lo = math.ceil(v_minus)
    hi = math.floor(v_plus)
    return ThresholdReport(
        alpha=a,
        v_minus=v_minus,
        v_plus=v_plus,
        gap=v_plus - v_minus,
        indeterminate_sizes=tuple(range(lo, hi + 1)),
    )


def extinction_size_bound(alpha: float) -> float:
    """M threshold of the appendix criterion: 1 + (2a-1)/((1-a)(2-a))."""
    a = _check_alpha(alpha, 0.5, 1.0)
    return 1.0 + (2.0 * a - 1.0) / ((1.0 - a) * (2.0 - a))


def appendix_g(alpha: float, x: float) -> float:
    """g(x) = int_0^x t^-alpha/(1+t) dt, by quadrature."""
    a = _check_alpha(alpha)
    if x < 0:
        raise ValueError("x must be >= 0")
    return _g_raw(a, float(x))


def appendix_g_infinity(alpha: float) -> float:
    """g(inf), still by quadrature (split at 1; tail mapped by y -> 1/y)."""
    a = _check_alpha(alpha)
    return _g_raw(a, 1.0) + _g_raw(1.0 - a, 1.0)


def expected_log_max(alpha: float, m: int) -> float:
    """E[log Y] for Y the max of m independent limit-law variables.

    M D^M int_0^inf log(x) g(x)^(M-1) x^-alpha/(1+x) dx, split at 1; the
    x^-alpha log(x) endpoint singularity is handed to QUADPACK's weighted rule.
    """
    a = _check_alpha(alpha)
    if m < 1:
        raise ValueError("m must be >= 1")
    D = d_alpha(a)

    def smooth(x):
        return _g_beta(a, x) ** (m - 1) / (1.0 + x)

    head, herr = integrate.quad(
        smooth, 0.0, 1.0, weight="alg-loga", wvar=(-a, 0.0), epsabs=1e-9, epsrel=1e-10,
        limit=500,
    )
    if m * D ** m * herr > 1e-6:
        raise RuntimeError(f"appendix head quadrature failed: err={herr}")
    # tail mapped by x -> 1/u: integrand -log(u) u^(a-1) g(1/u)^(m-1) / (1+u)
    tail, err = integrate.quad(
        lambda u: -_g_beta_recip(a, u) ** (m - 1) / (1.0 + u), 0.0, 1.0,
        weight="alg-loga", wvar=(a - 1.0, 0.0), epsabs=1e-9, epsrel=1e-10,
        limit=200,
    )
    if m * D ** m * err > 1e-6:
        raise RuntimeError(f"appendix tail quadrature failed: err={err}")
    return m * D ** m * (head + tail)


@dataclass(frozen=True)
class GNegativityReport:
    alpha: float
    x_grid: tuple
    values: tuple
    g_at_one: float
    max_value: float
    all_negative: bool


def appendix_G_negativity(alpha: float, x_grid) -> GNegativityReport:
    """G(x) = g(x) - x^(beta(beta+1)) g(1/x) with beta = 1-alpha, on x > 1."""
    a = _check_alpha(alpha, 0.5, 1.0)
    beta = 1.0 - a
    expo = beta * (beta + 1.0)
    xs = [float(x) for x in x_grid]
    if any(x <= 1.0 for x in xs):
        raise ValueError("grid must satisfy x > 1")

    def G(x):
        return appendix_g(a, x) - x ** expo * appendix_g(a, 1.0 / x)

    vals = [G(x) for x in xs]
    g1 = G(1.0)
    return GNegativityReport(
        alpha=a,
        x_grid=tuple(xs),
        values=tuple(vals),
        g_at_one=g1,
        max_value=max(vals),
        all_negative=all(v < 0 for v in vals),
    )


def phi(alpha: float, m: int, t: float) -> float:
    """Phi(t) = E[Y^t], by quadrature against the density of Y.

    Finite exactly on (-(1-alpha), alpha).
    """
    a = _check_alpha(alpha)
    if not -(1.0 - a) < t < a:
        raise ValueError(f"t must lie in ({-(1.0-a)}, {a}), got {t}")
    D = d_alpha(a)

    def smooth(y):
        return _g_beta(a, y) ** (m - 1) / (1.0 + y)

    head, _ = integrate.quad(
        smooth, 0.0, 1.0, weight="alg", wvar=(t - a, 0.0), epsabs=1e-11, epsrel=1e-10,
        limit=200,
    )
    # tail mapped by y -> 1/u: integrand u^(a-t-1) g(1/u)^(m-1) / (1+u)
    tail, _ = integrate.quad(
        lambda u: _g_beta_recip(a, u) ** (m - 1) / (1.0 + u), 0.0, 1.0,
        weight="alg", wvar=(a - t - 1.0, 0.0), epsabs=1e-11, epsrel=1e-10,
        limit=200,
    )
    return m * D ** m * (head + tail)


def find_theta(alpha: float, m: int):
    """Exponent theta in (0, alpha) with Phi(theta) < 1, or None when absent.

    Grid of 256 points, one refinement pass around the minimizer; only
    Phi(theta) < 1 matters, not high-precision minimization.
    """
    a = _check_alpha(alpha)
    grid = np.linspace(a / 257, a * (1 - 1e-9), 256)
    vals = np.array([phi(a, m, float(t)) for t in grid])
    i = int(np.argmin(vals))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, grid.size - 1)]
    fine = np.linspace(lo, hi, 64)
    fvals = np.array([phi(a, m, float(t)) for t in fine])
    j = int(np.argmin(fvals))
    if fvals[j] < 1.0:
        return float(fine[j])
    return None


class DominationConstructionError(ValueError):
    pass


@dataclass(frozen=True)
class DominationLaw:
    """Discrete law on the grid a_j dominating the interval-length ratios.

    Atoms: a_j = j/N for j <= N^2, then a_j = N e^(j - N^2); probabilities
    p_j = p_raw_j / C with p_raw_j = P(Y in I_j) + rho below the knee and a
    geometric tail M a^(log N + j - N^2 - 2) above it, truncated once the raw
    mass drops under 1e-15.
    """

    alpha: float
    m: int
    theta: float
    eta: float
    log_n: int
    grid_n: int
    rho: float
    c_norm: float
    mu_bound: float
    theta_moment: float  # E[Ytilde^theta]
    atoms: np.ndarray = field(repr=False)
    probs: np.ndarray = field(repr=False)
    raw: np.ndarray = field(repr=False)

    @property
    def tail_ratio(self) -> float:
        return (1.0 + self.eta) / math.exp(self.alpha)

    def interval_index(self, value: float) -> int:
        """j with value in I_j = (a_{j-1}, a_j]; past-the-end if beyond grid."""
        edges = np.concatenate([[0.0], self.atoms])
        return int(np.searchsorted(edges, value, side="left")) - 1


def _check_law_params(alpha, m, theta, eta, log_n, rho):
    a = _check_alpha(alpha)
    if not 0 < eta < 1:
        raise ValueError("eta must lie in (0,1)")
    if log_n < 1:
        raise ValueError("log_n must be a positive integer")
    if rho <= 0:
        raise ValueError("rho must be > 0")
    if theta is None:
        theta = find_theta(a, m)
        if theta is None:
            raise DominationConstructionError(
                f"no contraction exponent found for alpha={a}, M={m}"
            )
    if not 0 < theta < a:
        raise ValueError(f"theta must lie in (0, alpha), got {theta}")
    ratio = (1.0 + eta) / math.exp(a)
    if ratio * math.exp(theta) >= 1.0:
        raise ValueError(
            f"(1+eta) e^theta / e^alpha = {ratio * math.exp(theta):.4f} must be < 1"
        )
    return a, float(theta), ratio


def _tail_theta_sum(m, theta, ratio, log_n):
    # sum over the geometric atoms: M e^(2 theta) (a e^theta)^(log N - 1 + i), i >= 0
    x = ratio * math.exp(theta)
    return m * math.exp(2.0 * theta) * x ** (log_n - 1) / (1.0 - x)


def _tail_mass(m, ratio, log_n):
    return m * ratio ** (log_n - 1) / (1.0 - ratio)


def cond2_report(alpha: float, m: int, theta: float | None = None,
                 eta: float = 0.1, log_n: int = 3, rho: float = 1e-4) -> dict:
    """Rigorous upper bound on the normalization-weighted theta moment.

    Bounds sum_j a_j^theta p_raw_j without enumerating the N^2 body atoms:
    the body moment by quadrature of E[(Y + 1/N)^theta ; Y <= N] (grid
    rounding only moves mass up), the rho term by an integral comparison,
    the geometric tail in closed form.  The contraction condition holds
    whenever the bound stays below some mu < 1.
    """
    a, theta, ratio = _check_law_params(alpha, m, theta, eta, log_n, rho)
    n_grid = round(math.exp(log_n))
    D = d_alpha(a)

    def density_weighted(y):
        return ((y + 1.0 / n_grid) ** theta * m * D ** m * y ** (-a) / (1.0 + y)
                * _g_beta(a, y) ** (m - 1))

    body1, _ = integrate.quad(density_weighted, 0.0, 1.0, epsabs=1e-11,
                              epsrel=1e-10, limit=200)
    body2, _ = integrate.quad(density_weighted, 1.0, n_grid, epsabs=1e-11,
                              epsrel=1e-10, limit=400)
    nn = n_grid * n_grid
    rho_term = rho * (nn + 1) ** (theta + 1.0) / (n_grid ** theta * (theta + 1.0))
    tail_term = _tail_theta_sum(m, theta, ratio, log_n)
    bracket = body1 + body2 + rho_term + tail_term
    c_norm = (float(_g_beta(a, float(n_grid)) * D) ** m + rho * nn
              + _tail_mass(m, ratio, log_n))
    return {
        "alpha": a, "m": m, "theta": theta, "eta": eta, "log_n": log_n,
        "grid_n": n_grid, "rho": rho, "bracket_bound": bracket,
        "c_norm": c_norm, "theta_moment_bound": bracket / c_norm,
        "ok": bracket < 1.0,
    }


def build_dominating_law(alpha: float, m: int, theta: float | None = None,
                         eta: float = 0.1, log_n: int = 3, rho: float = 1e-4,
                         mu_bound: float | None = None,
                         require_cond2: bool = True) -> DominationLaw:
    """Construct the dominating law; optionally require its contraction condition.

    The grid size is N = round(e^log_n), keeping log(N) integer as the tail
    construction requires.  The per-atom domination inequality needs no
    moment condition, so require_cond2=False builds the law regardless;
    with require_cond2=True a failing theta-moment sum raises
    DominationConstructionError (larger log_n / smaller rho fix it).
    """
    a, theta, ratio = _check_law_params(alpha, m, theta, eta, log_n, rho)
    n_grid = round(math.exp(log_n))
    nn = n_grid * n_grid
    if nn > 4_000_000:
        raise ValueError(
            f"N^2 = {nn} body atoms is too large to enumerate; use cond2_report"
        )

    body_atoms = np.arange(1, nn + 1) / n_grid
    cdf_edges = _g_beta(a, np.arange(0, nn + 1) / n_grid) * d_alpha(a)
    p_body = cdf_edges[1:] ** m - cdf_edges[:-1] ** m  # P(Y in I_j)

    tail_atoms, tail_raw = [], []
    j = nn + 1
    while True:
        p = m * ratio ** (log_n + j - nn - 2)
        if p < 1e-15:
            break
        tail_atoms.append(n_grid * math.exp(j - nn))
        tail_raw.append(p)
        j += 1

    atoms = np.concatenate([body_atoms, tail_atoms])
    raw = np.concatenate([p_body + rho, tail_raw])
    c_norm = float(raw.sum())
    probs = raw / c_norm

    bracket = float((atoms ** theta * raw).sum())
    phi_theta = phi(a, m, theta)
    if mu_bound is None:
        base = max(phi_theta, bracket) if bracket < 1.0 else phi_theta
        mu_bound = 0.5 * (base + 1.0)
    if not phi_theta < mu_bound < 1.0:
        raise ValueError(
            f"mu_bound must lie in (Phi(theta), 1) = ({phi_theta:.6f}, 1), got {mu_bound}"
        )
    if require_cond2 and bracket > mu_bound:
        raise DominationConstructionError(
            f"theta-moment condition fails: sum a_j^theta p_raw_j = {bracket:.6f} "
            f"> mu = {mu_bound:.6f}; increase the grid (log_n) or decrease rho"
        )
    return DominationLaw(
        alpha=a, m=m, theta=theta, eta=eta, log_n=log_n, grid_n=n_grid,
        rho=rho, c_norm=c_norm, mu_bound=float(mu_bound),
        theta_moment=bracket / c_norm, atoms=atoms, probs=probs, raw=raw,
    )


def ks_statistic(samples, cdf) -> float:
    """One-sample Kolmogorov-Smirnov sup-distance against a callable CDF."""
    x = np.sort(np.asarray(samples, dtype=float))
    if x.size == 0:
        raise ValueError("samples must be nonempty")
    try:
        f = np.asarray(cdf(x), dtype=float)
        if f.shape != x.shape:
            raise TypeError
    except (TypeError, ValueError):
        f = np.array([cdf(v) for v in x], dtype=float)
    n = x.size
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def wilson_ci(successes: int, trials: int, level: float = 0.95):
    """Wilson score interval for a binomial proportion."""
    if trials <= 0 or not 0 <= successes <= trials:
        raise ValueError(f"need 0 <= successes <= trials, got {successes}/{trials}")
    z = float(norm_dist.ppf(1.0 - (1.0 - level) / 2.0))
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)
