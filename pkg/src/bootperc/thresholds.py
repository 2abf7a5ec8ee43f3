"""Sharp-threshold functions and the numeric inequality verifier.

The percolation threshold scale is p = theta_r(alpha, n) =
(alpha/(n log^(r-1) n))^(1/r), under which eps = n p^r = alpha/log^(r-1) n.
The critical constant is

    alpha_r = (r-1)! ((r-1)/r)^(2(r-1))

and, for seeds that are copies of a subgraph H of K_r with ell edges,

    alpha_{r,ell} = (r-1)! ((r-1)^2 / (r^2 - ell))^(r-1).

Around the threshold everything is controlled by the exponent functions

    mu_r(alpha, beta, gamma)  = r + beta log(alpha beta^(r-1)/(r-1)!)
                                - (alpha beta^r / r!)(1-gamma)^r
                                - beta (r-2+gamma)
    mu*_r(alpha, beta)        = mu_r(alpha, beta, 0)
    mu_{r,eps}(alpha,beta,gamma) = r + beta log(alpha beta^(r-1)(1-gamma)/(r-1)!)
                                - (alpha beta^r / r!)(1-gamma)^r
                                - beta (r-2+eps*gamma)

mu*_r(alpha, .) has derivative 1 + log x - x (x = alpha beta^(r-1)/(r-1)!),
which is <= 0 everywhere with equality only at beta_r(alpha) =
((r-1)!/alpha)^(1/(r-1)); mu* therefore decreases monotonically from r to
-infinity and has a unique positive root beta_star, found by bisection.

verify_inequalities sweeps numeric grids over the supporting inequalities:
small-beta domination, the penalized-exponent minimum, the series-vs-gamma
bound for Lambda(i) = sum_j j^(i-1/2) e^(-j), gamma-concavity of mu_eps,
and the location of the inflated-threshold beta relative to beta_star.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial, fsum, log, e as _e

__all__ = [
    "ThresholdParams",
    "GridSpec",
    "critical_alpha",
    "critical_alpha_exact",
    "critical_alpha_H",
    "theta",
    "eps_of",
    "beta_r",
    "k_r_of_eps",
    "mu",
    "mu_star",
    "mu_eps",
    "mu_bar",
    "beta_star",
    "beta_eps",
    "mu_star_at_beta_eps",
    "zeta_three_halves",
    "lambda_vs_gamma_report",
    "verify_inequalities",
]


def critical_alpha(r: int) -> float:
    """alpha_r = (r-1)! ((r-1)/r)^(2(r-1))."""
    _check_r(r)
    return factorial(r - 1) * ((r - 1) / r) ** (2 * (r - 1))


def critical_alpha_exact(r: int) -> Fraction:
    """alpha_r as an exact rational, for root finding at criticality."""
    _check_r(r)
    return Fraction(
        factorial(r - 1) * (r - 1) ** (2 * (r - 1)), r ** (2 * (r - 1))
    )


def critical_alpha_H(r: int, ell: int) -> float:
    """alpha_{r,ell} for seeds spanning ell edges on r vertices."""
    _check_r(r)
    if not 0 <= ell <= comb(r, 2):
        raise ValueError(f"need 0 <= ell <= C(r,2), got ell={ell}, r={r}")
    return factorial(r - 1) * ((r - 1) ** 2 / (r**2 - ell)) ** (r - 1)


def theta(r: int, alpha: float, n: int) -> float:
    """p = (alpha / (n log^(r-1) n))^(1/r)."""
    _check_r(r)
    _check_pos(alpha, "alpha")
    if n < 3:
        raise ValueError(f"need n >= 3, got {n}")
    return (alpha / (n * log(n) ** (r - 1))) ** (1.0 / r)


def eps_of(r: int, alpha: float, n: int) -> float:
    """eps = n p^r = alpha / log^(r-1) n at p = theta(r, alpha, n)."""
    _check_r(r)
    _check_pos(alpha, "alpha")
    if n < 3:
        raise ValueError(f"need n >= 3, got {n}")
    return alpha / log(n) ** (r - 1)


def beta_r(r: int, alpha: float) -> float:
    """beta_r(alpha) = ((r-1)!/alpha)^(1/(r-1)), the zero-slope point of
    mu*_r(alpha, .)."""
    _check_r(r)
    _check_pos(alpha, "alpha")
    return (factorial(r - 1) / alpha) ** (1.0 / (r - 1))


def k_r_of_eps(r: int, eps: float) -> float:
    """k_r(eps) = ((r-1)!/eps)^(1/(r-1))."""
    _check_r(r)
    _check_pos(eps, "eps")
    return (factorial(r - 1) / eps) ** (1.0 / (r - 1))


def mu(r: int, alpha: float, beta: float, gamma: float) -> float:
    _check_domain(r, alpha, beta, gamma)
    return (
        r
        + beta * log(alpha * beta ** (r - 1) / factorial(r - 1))
        - (alpha * beta**r / factorial(r)) * (1 - gamma) ** r
        - beta * (r - 2 + gamma)
    )


def mu_star(r: int, alpha: float, beta: float) -> float:
    return mu(r, alpha, beta, 0.0)


def mu_eps(r: int, eps: float, alpha: float, beta: float, gamma: float) -> float:
    _check_domain(r, alpha, beta, gamma)
    _check_pos(eps, "eps")
    return (
        r
        + beta * log(alpha * beta ** (r - 1) * (1 - gamma) / factorial(r - 1))
        - (alpha * beta**r / factorial(r)) * (1 - gamma) ** r
        - beta * (r - 2 + eps * gamma)
    )


def mu_bar(r: int, alpha: float, beta: float, gamma: float) -> float:
    """mu plus the penalty xi log(e alpha beta^r gamma / (xi (r-1)!)) with
    xi = beta_r(alpha) - beta; requires beta < beta_r(alpha), gamma > 0."""
    _check_domain(r, alpha, beta, gamma)
    if gamma <= 0:
        raise ValueError("mu_bar needs gamma > 0")
    xi = beta_r(r, alpha) - beta
    if xi <= 0:
        raise ValueError(
            f"mu_bar needs beta < beta_r(alpha) = {beta_r(r, alpha)}, got {beta}"
        )
    return mu(r, alpha, beta, gamma) + xi * log(
        _e * alpha * beta**r * gamma / (xi * factorial(r - 1))
    )


class BracketError(Exception):
    pass


def beta_star(r: int, alpha, tol: float = 1e-10) -> float:
    """Unique positive root of mu*_r(alpha, .), by bisection.

    mu* decreases from r (beta -> 0+) to -infinity, so any bracket with a
    sign change is valid; the upper end grows geometrically from
    beta_r(alpha) until the sign flips.

    At alpha = alpha_r the root is a triple root (mu* and its first two
    derivatives all vanish at beta_r), so double precision cannot separate
    sign from noise closer than ~1e-5; the bisection therefore runs in
    extended precision.  alpha may be a Fraction for an exact rational
    value; a float alpha is taken at face value, and near criticality the
    root of the perturbed function genuinely sits ~(float error)^(1/3)
    away from the ideal constant.
    """
    _check_r(r)
    _check_pos(float(alpha), "alpha")
    _check_pos(tol, "tol")
    import mpmath as mp

    with mp.workdps(60):
        if isinstance(alpha, Fraction):
            alpha_mp = mp.mpf(alpha.numerator) / alpha.denominator
        else:
            alpha_mp = mp.mpf(alpha)
        fact = mp.factorial(r - 1)
        fact_r = mp.factorial(r)

        def f(b):
            return (
                r
                + b * mp.log(alpha_mp * b ** (r - 1) / fact)
                - alpha_mp * b**r / fact_r
                - b * (r - 2)
            )

        lo = mp.mpf(10) ** -12
        if f(lo) <= 0:
            raise BracketError(
                f"mu* not positive at beta={float(lo)} (r={r}, alpha={alpha})"
            )
        hi = (fact / alpha_mp) ** (mp.mpf(1) / (r - 1))
        for _ in range(200):
            if f(hi) < 0:
                break
            hi *= 2
        else:
            raise BracketError(f"no sign change found (r={r}, alpha={alpha})")
        while hi - lo > tol:
            mid = (lo + hi) / 2
            if f(mid) > 0:
                lo = mid
            else:
                hi = mid
        return float((lo + hi) / 2)


def beta_eps(r: int, eps: float) -> float:
    """beta_{r,eps} = (1+eps)^(1/(r-1)) beta_r((1+eps) alpha_r).

    Since beta_r((1+eps) alpha_r) = beta_r(alpha_r)/(1+eps)^(1/(r-1)), this
    collapses to the constant (r/(r-1))^2 for every eps.
    """
    _check_r(r)
    if eps <= -1:
        raise ValueError("need eps > -1")
    return (1 + eps) ** (1.0 / (r - 1)) * beta_r(r, (1 + eps) * critical_alpha(r))


def mu_star_at_beta_eps(r: int, eps: float) -> float:
    """Closed form for mu*_r((1+eps) alpha_r, beta_{r,eps}):
    r - (r/(r-1))^2 (r-2 + (1+eps)/r - log(1+eps))."""
    _check_r(r)
    if eps <= -1:
        raise ValueError("need eps > -1")
    return r - (r / (r - 1)) ** 2 * (r - 2 + (1 + eps) / r - log(1 + eps))


def _check_r(r: int) -> None:
    if r < 2:
        raise ValueError(f"threshold r must be >= 2, got {r}")


def _check_pos(x: float, name: str) -> None:
    if not x > 0:
        raise ValueError(f"{name} must be positive, got {x}")


def _check_domain(r, alpha, beta, gamma):
    _check_r(r)
    _check_pos(alpha, "alpha")
    _check_pos(beta, "beta")
    if not 0 <= gamma < 1:
        raise ValueError(f"need 0 <= gamma < 1, got {gamma}")


@dataclass(frozen=True)
class ThresholdParams:
    """Bundle of the threshold quantities derived from (r, alpha, n)."""

    r: int
    alpha: float
    n: int
    p: float
    eps: float
    k_r: float
    beta_r: float
    beta_star: float
    alpha_r: float

    @classmethod
    def create(cls, r: int, alpha: float, n: int, tol: float = 1e-10):
        p = theta(r, alpha, n)
        eps = eps_of(r, alpha, n)
        return cls(
            r=r,
            alpha=alpha,
            n=n,
            p=p,
            eps=eps,
            k_r=k_r_of_eps(r, eps),
            beta_r=beta_r(r, alpha),
            beta_star=beta_star(r, alpha, tol=tol),
            alpha_r=critical_alpha(r),
        )

    def alpha_H(self, ell: int) -> float:
        return critical_alpha_H(self.r, ell)


# ----------------------------------------------------------------------
# zeta(3/2) and the Lambda-vs-gamma comparison
# ----------------------------------------------------------------------

_BERNOULLI = ((1 / 6, 2), (-1 / 30, 4), (1 / 42, 6), (-1 / 30, 8))


def zeta_three_halves() -> float:
    """zeta(3/2) by direct series with Euler-Maclaurin tail correction;
    absolute error well below 1e-12."""
    s = 1.5
    n_head = 200
    head = fsum(n**-s for n in range(1, n_head + 1))
    tail = n_head ** (1 - s) / (s - 1) - 0.5 * n_head**-s
    corr = 0.0
    for b_val, two_k in _BERNOULLI:
        rising = 1.0
        for m_idx in range(two_k - 1):
            rising *= s + m_idx
        corr += b_val / factorial(two_k) * rising * n_head ** (-s - two_k + 1)
    return head + tail + corr


def lambda_vs_gamma_report(i: int) -> dict:
    """Check Lambda(i) = sum_j j^(i-1/2) e^(-j) < Gamma(i+1/2)(1 + a b^i)
    with a = zeta(3/2), b = e/(2 pi).

    The relative margin shrinks like b^i, far below double precision for
    large i, so both sides are evaluated in arbitrary precision with digits
    scaled to the margin; the series is truncated by the ratio-test
    remainder bound, recorded in the report.
    """
    if i < 1:
        raise ValueError("need i >= 1")
    import mpmath as mp

    dps = 30 + int(0.37 * i)
    a = zeta_three_halves()
    with mp.workdps(dps):
        ex = mp.mpf(2 * i - 1) / 2
        tol = mp.mpf(10) ** (-(dps - 3))
        total = mp.mpf(0)
        j = 0
        tail = None
        while True:
            j += 1
            term = mp.exp(ex * mp.log(j) - j)
            total += term
            if j <= i + 1:
                continue
            ratio = mp.exp(ex * mp.log(mp.mpf(j + 1) / j) - 1)
            if ratio >= 1:
                continue
            tail = term * ratio / (1 - ratio)
            if tail < tol * total:
                break
        b = mp.e / (2 * mp.pi)
        rhs = mp.gamma(mp.mpf(2 * i + 1) / 2) * (1 + mp.mpf(a) * b**i)
        margin = (rhs - total) / rhs
        return {
            "i": i,
            "holds": bool(total < rhs),
            "relative_margin": float(margin),
            "truncated_at": j,
            "relative_tail_bound": float(tail / total),
            "dps": dps,
        }


# ----------------------------------------------------------------------
# the grid verifier
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    """Grid ranges for verify_inequalities.  alpha spans multiples of
    alpha_r, beta runs up to a multiple of beta_r(alpha), eps up to
    1/(r+1) - 0.01."""

    alpha_points: int = 21
    alpha_lo: float = 0.5
    alpha_hi: float = 1.5
    beta_points: int = 50
    beta_lo: float = 0.1
    beta_hi: float = 2.0
    gamma_points: int = 50
    gamma_lo: float = 0.01
    gamma_hi: float = 0.99
    eps_points: int = 20
    eps_lo: float = 0.01
    i_max: int = 500

    def alphas(self, r: int) -> list[float]:
        a_r = critical_alpha(r)
        return _linspace(self.alpha_lo * a_r, self.alpha_hi * a_r, self.alpha_points)

    def betas(self, r: int, alpha: float) -> list[float]:
        return _linspace(self.beta_lo, self.beta_hi * beta_r(r, alpha), self.beta_points)

    def gammas(self) -> list[float]:
        return _linspace(self.gamma_lo, self.gamma_hi, self.gamma_points)

    def epss(self, r: int) -> list[float]:
        return _linspace(self.eps_lo, 1.0 / (r + 1) - 0.01, self.eps_points)


def _linspace(lo: float, hi: float, num: int) -> list[float]:
    if num == 1:
        return [lo]
    step = (hi - lo) / (num - 1)
    return [lo + step * t for t in range(num)]


SLACK = 1e-9  # absolute tolerance for the non-strict grid inequalities


def verify_inequalities(
    r_set=(2, 3, 4),
    grid: GridSpec | None = None,
    claims=None,
) -> dict:
    """Sweep the supporting inequalities over numeric grids.

    Claims (selectable by id):
      small_beta_domination   mu <= mu* for beta <= beta_r(alpha)
      penalized_min           min(mu, mu_bar) <= mu*(alpha, beta_r(alpha))
      lambda_vs_gamma         Lambda(i) < Gamma(i+1/2)(1 + a b^i)
      mu_eps_gamma_concavity  second gamma-difference of mu_eps < 0
      beta_eps_below_root     beta_{r,eps} < beta_star((1+eps) alpha_r),
                              plus the closed form for mu* there

    Returns a JSON-ready report; violations are content, not errors.
    """
    grid = grid or GridSpec()
    all_ids = [
        "small_beta_domination",
        "penalized_min",
        "lambda_vs_gamma",
        "mu_eps_gamma_concavity",
        "beta_eps_below_root",
    ]
    wanted = list(claims) if claims is not None else all_ids
    for cid in wanted:
        if cid not in all_ids:
            raise ValueError(f"unknown claim id {cid!r}")
    report: dict = {"r_set": list(r_set), "claims": []}
    for cid in wanted:
        checker = {
            "small_beta_domination": _check_small_beta,
            "penalized_min": _check_penalized_min,
            "lambda_vs_gamma": _check_lambda_vs_gamma,
            "mu_eps_gamma_concavity": _check_mu_eps_concavity,
            "beta_eps_below_root": _check_beta_eps,
        }[cid]
        size, violations = checker(r_set, grid)
        report["claims"].append(
            {"claim_id": cid, "grid_size": size, "violations": violations}
        )
    return report


def _check_small_beta(r_set, grid):
    size = 0
    violations = []
    for r in r_set:
        for alpha in grid.alphas(r):
            b_r = beta_r(r, alpha)
            for beta in grid.betas(r, alpha):
                if beta > b_r:
                    continue
                star = mu_star(r, alpha, beta)
                for gamma in grid.gammas():
                    size += 1
                    val = mu(r, alpha, beta, gamma)
                    if val > star + SLACK:
                        violations.append(
                            {"r": r, "alpha": alpha, "beta": beta,
                             "gamma": gamma, "lhs": val, "rhs": star}
                        )
    return size, violations


def _check_penalized_min(r_set, grid):
    size = 0
    violations = []
    for r in r_set:
        for alpha in grid.alphas(r):
            b_r = beta_r(r, alpha)
            bound = mu_star(r, alpha, b_r)
            for beta in grid.betas(r, alpha):
                if beta > b_r:
                    continue
                for gamma in grid.gammas():
                    size += 1
                    val = mu(r, alpha, beta, gamma)
                    if b_r - beta > 1e-12:
                        val = min(val, mu_bar(r, alpha, beta, gamma))
                    if val > bound + SLACK:
                        violations.append(
                            {"r": r, "alpha": alpha, "beta": beta,
                             "gamma": gamma, "lhs": val, "rhs": bound}
                        )
    return size, violations


def _check_lambda_vs_gamma(r_set, grid):
    del r_set  # claim is r-independent
    violations = []
    for i in range(1, grid.i_max + 1):
        rep = lambda_vs_gamma_report(i)
        if not rep["holds"]:
            violations.append(rep)
    return grid.i_max, violations


def _check_mu_eps_concavity(r_set, grid):
    size = 0
    violations = []
    gammas = grid.gammas()
    for r in r_set:
        for alpha in grid.alphas(r):
            for eps in grid.epss(r):
                for beta in grid.betas(r, alpha):
                    vals = [mu_eps(r, eps, alpha, beta, g) for g in gammas]
                    for t in range(1, len(gammas) - 1):
                        size += 1
                        second = vals[t - 1] - 2 * vals[t] + vals[t + 1]
                        if second >= 0:
                            violations.append(
                                {"r": r, "alpha": alpha, "eps": eps,
                                 "beta": beta, "gamma": gammas[t],
                                 "second_difference": second}
                            )
    return size, violations


def _check_beta_eps(r_set, grid):
    size = 0
    violations = []
    for r in r_set:
        for eps in grid.epss(r):
            size += 1
            alpha_eps = (1 + eps) * critical_alpha(r)
            b_eps = beta_eps(r, eps)
            root = beta_star(r, alpha_eps)
            closed = mu_star_at_beta_eps(r, eps)
            direct = mu_star(r, alpha_eps, b_eps)
            if not (b_eps < root and abs(closed - direct) < 1e-10):
                violations.append(
                    {"r": r, "eps": eps, "beta_eps": b_eps, "beta_star": root,
                     "mu_star_closed": closed, "mu_star_direct": direct}
                )
    return size, violations


def report_to_json(report: dict) -> str:
    return json.dumps(report, indent=2)
