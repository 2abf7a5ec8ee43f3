"""Perron eigenvalue machinery for the multi-level counting recursion.

The limit matrix A(r, ell) has entries

    A_r(i, j) = j^i e^{-(r-1)i} / i!,    1 <= i, j <= ell,

the growth rate of level-bounded counting tables is the Perron eigenvalue
lambda(r, ell) of the block companion operator psi(A), and the same number
is characterized as the unique lambda with spectral-radius(D_lambda A) = 1
where D_lambda = diag(lambda^{-i}).  Both routes are implemented: dense
power iteration on psi(A), and bisection on the D_lambda characterization
(the spectral radius of D_lambda A is strictly decreasing in lambda).

Entries of A underflow double precision for large i, so A is built from
log entries; the D_lambda route rescales by the largest log entry and
folds the scale factor back into the computed radius.
"""

import math
from typing import NamedTuple

import numpy as np
from scipy.special import logsumexp

from .counting import CountTable

__all__ = [
    "SpectralError",
    "NotPrimitiveError",
    "ConvergenceError",
    "CompanionBudgetError",
    "DEFAULT_COMPANION_ELL_BUDGET",
    "PerronResult",
    "build_A",
    "build_A_log",
    "companion_psi",
    "is_primitive",
    "perron",
    "lambda_via_dlambda",
    "dlambda_report",
    "lift_vector",
    "dlambda_row_sums_log",
    "table_growth_ratios",
]

DEFAULT_COMPANION_ELL_BUDGET = 64


class SpectralError(Exception):
    pass


class NotPrimitiveError(SpectralError):
    pass


class ConvergenceError(SpectralError):
    pass


class CompanionBudgetError(SpectralError):
    pass


def _validate_r_ell(r: int, ell: int) -> None:
    if r < 2:
        raise ValueError(f"threshold r must be >= 2, got {r}")
    if ell < 1:
        raise ValueError(f"level cap ell must be >= 1, got {ell}")


def build_A_log(r: int, ell: int) -> np.ndarray:
    """Log entries of the limit matrix: log A_r(i,j) = i log j - (r-1)i - log i!."""
    _validate_r_ell(r, ell)
    i = np.arange(1, ell + 1, dtype=np.float64)[:, None]
    j = np.arange(1, ell + 1, dtype=np.float64)[None, :]
    return i * np.log(j) - (r - 1) * i - np.array(
        [math.lgamma(t + 1) for t in range(1, ell + 1)]
    )[:, None]


def build_A(r: int, ell: int) -> np.ndarray:
    """Limit matrix A(r, ell); entries below the double-precision floor come out 0."""
    return np.exp(build_A_log(r, ell))


def companion_psi(
    M: np.ndarray, ell_budget: int = DEFAULT_COMPANION_ELL_BUDGET
) -> np.ndarray:
    """Block companion operator of an ell x ell matrix.

    Row i of M occupies block column i of the top block row; identity blocks
    sit on the block subdiagonal.  The stacked vector with blocks
    lambda^{ell-1} v, ..., lambda v, v is an eigenvector for eigenvalue
    lambda exactly when D_lambda M v = v.
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("companion_psi expects a square matrix")
    ell = M.shape[0]
    if ell > ell_budget:
        raise CompanionBudgetError(
            f"companion dimension budget exceeded: ell={ell} > {ell_budget}"
        )
    n = ell * ell
    P = np.zeros((n, n), dtype=np.float64)
    for i in range(ell):
        P[i, i * ell : (i + 1) * ell] = M[i]
    idx = np.arange(n - ell)
    P[ell + idx, idx] = 1.0
    return P


def _period_gcd(indptr: np.ndarray, indices: np.ndarray, n: int) -> int:
    # BFS from node 0; gcd of (level[u] + 1 - level[w]) over edges of the
    # strongly connected graph equals the period
    level = np.full(n, -1, dtype=np.int64)
    level[0] = 0
    frontier = [0]
    g = 0
    while frontier:
        nxt = []
        for u in frontier:
            for w in indices[indptr[u] : indptr[u + 1]]:
                if level[w] < 0:
                    level[w] = level[u] + 1
                    nxt.append(w)
                else:
                    g = math.gcd(g, level[u] + 1 - level[w])
        frontier = nxt
    for u in range(n):
        for w in indices[indptr[u] : indptr[u + 1]]:
            g = math.gcd(g, level[u] + 1 - level[w])
    return abs(g)


def is_primitive(M: np.ndarray) -> bool:
    """Whether some power of the nonnegative matrix is strictly positive.

    Equivalent graph test: the positivity pattern is strongly connected and
    aperiodic (gcd of cycle lengths 1).
    """
    M = np.asarray(M)
    n = M.shape[0]
    if n == 1:
        return bool(M[0, 0] > 0)
    if np.all(M > 0):
        return True
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import connected_components

    pattern = csr_matrix(M > 0)
    ncomp, _ = connected_components(pattern, directed=True, connection="strong")
    if ncomp != 1:
        return False
    return _period_gcd(pattern.indptr, pattern.indices, n) == 1


class PerronResult(NamedTuple):
    value: float
    vector: np.ndarray
    iterations: int


def perron(M: np.ndarray, tol: float = 1e-13, max_iter: int = 500_000) -> PerronResult:
    """Dominant eigenvalue and unit-sum eigenvector of a nonnegative matrix.

    Accepts primitive matrices, and also matrices whose diagonal is strictly
    positive (every communicating class is then aperiodic, so the iteration
    converges to the largest class radius; the uniform start keeps scaled
    multiples of the identity exact).  Periodic inputs are rejected.

    Power iteration with max-norm renormalization; stops when successive
    Rayleigh quotients differ by less than tol and, when the iterate is
    strictly positive, the Collatz-Wielandt bounds agree to 100*tol
    relatively.
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("perron expects a square matrix")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix entries must be finite")
    if np.any(M < 0):
        raise ValueError("matrix entries must be nonnegative")
    n = M.shape[0]
    if not (is_primitive(M) or np.all(np.diagonal(M) > 0)):
        raise NotPrimitiveError(
            "power iteration requires a primitive matrix "
            "(or one with strictly positive diagonal)"
        )
    v = np.full(n, 1.0 / n)
    rayleigh = math.inf
    for it in range(1, max_iter + 1):
        w = M @ v
        top = float(w.max())
        if top <= 0.0:
            raise ConvergenceError("iterate collapsed to zero")
        new_rayleigh = float(np.dot(v, w) / np.dot(v, v))
        converged = abs(new_rayleigh - rayleigh) < tol
        if converged and np.all(v > 0):
            ratios = w / v
            lo, hi = float(ratios.min()), float(ratios.max())
            converged = hi - lo <= 100 * tol * max(hi, 1e-300)
            if converged:
                new_rayleigh = 0.5 * (lo + hi)
        if converged:
            vec = v / v.sum()
            return PerronResult(new_rayleigh, vec, it)
        rayleigh = new_rayleigh
        v = w / top
    raise ConvergenceError(f"no convergence within {max_iter} iterations")


def _scaled_dlambda(log_A: np.ndarray, lam: float) -> tuple[np.ndarray, float]:
    ell = log_A.shape[0]
    i = np.arange(1, ell + 1, dtype=np.float64)[:, None]
    log_entries = log_A - i * math.log(lam)
    shift = float(log_entries.max())
    return np.exp(log_entries - shift), shift


def _rho_dlambda(log_A: np.ndarray, lam: float, tol: float) -> tuple[float, int]:
    scaled, shift = _scaled_dlambda(log_A, lam)
    res = perron(scaled, tol=tol)
    return res.value * math.exp(shift), res.iterations


def dlambda_report(r: int, ell: int, tol: float = 1e-10) -> dict:
    """Solve rho(D_lambda A) = 1 by bisection; returns the root and work counts.

    The spectral radius is strictly decreasing in lambda, so the root is
    unique; the returned lambda satisfies |rho(D_lambda A) - 1| < tol.
    """
    _validate_r_ell(r, ell)
    log_A = build_A_log(r, ell)
    inner_tol = min(1e-13, tol * 1e-3)
    inner_total = 0

    def rho(lam: float) -> float:
        nonlocal inner_total
        val, its = _rho_dlambda(log_A, lam, inner_tol)
        inner_total += its
        return val

    hi = math.exp(-(r - 2))
    if rho(hi) > 1.0:
        raise SpectralError("upper bracket violates the growth-rate bound")
    lo = hi
    for _ in range(60):
        lo *= 0.5
        if rho(lo) > 1.0:
            break
    else:
        raise SpectralError("failed to bracket the unit spectral radius")
    outer = 0
    lam = 0.5 * (lo + hi)
    for outer in range(1, 201):
        lam = 0.5 * (lo + hi)
        val = rho(lam)
        if abs(val - 1.0) < tol:
            break
        if val > 1.0:
            lo = lam
        else:
            hi = lam
    else:
        raise ConvergenceError("bisection did not reach the requested tolerance")
    return {
        "r": r,
        "ell": ell,
        "lambda": lam,
        "outer_iterations": outer,
        "inner_iterations": inner_total,
    }


def lambda_via_dlambda(r: int, ell: int, tol: float = 1e-10) -> float:
    return dlambda_report(r, ell, tol=tol)["lambda"]


def lift_vector(v: np.ndarray, lam: float) -> np.ndarray:
    """Stack blocks lambda^{ell-1} v, ..., lambda v, v into an ell^2 vector."""
    v = np.asarray(v, dtype=np.float64)
    ell = v.shape[0]
    return np.concatenate([lam ** (ell - 1 - s) * v for s in range(ell)])


def dlambda_eigenvector(r: int, ell: int, lam: float, tol: float = 1e-13) -> np.ndarray:
    """Positive v with D_lambda A v = v (up to tol) at the given lambda."""
    scaled, _ = _scaled_dlambda(build_A_log(r, ell), lam)
    return perron(scaled, tol=tol).vector


def dlambda_row_sums_log(r: int, ell: int, lam: float) -> np.ndarray:
    """log of each row sum of D_lambda A, computed fully in log space."""
    _validate_r_ell(r, ell)
    if lam <= 0:
        raise ValueError("lambda must be positive")
    i = np.arange(1, ell + 1, dtype=np.float64)
    log_j = np.log(np.arange(1, ell + 1, dtype=np.float64))
    log_pow_sums = logsumexp(i[:, None] * log_j[None, :], axis=1)
    log_gamma = np.array([math.lgamma(t + 1) for t in range(1, ell + 1)])
    return -i * math.log(lam) - (r - 1) * i - log_gamma + log_pow_sums


def table_growth_ratios(table: CountTable, k_min: int, kind: str = "sigma") -> dict:
    """Consecutive growth ratios of row-summed normalized table mass.

    For each k in (k_min, table.k_max] with both rows nonzero, returns
    S(k)/S(k-1) where S(k) = sum_i normalized(k, i).  Level-bounded
    lower-bound tables give a lower-bound witness for the growth rate, so
    the ratios are compared against lambda(r, ell) from above by callers.
    """
    from .counting import normalized

    sums = {}
    for k in range(max(table.r + 1, k_min - 1), table.k_max + 1):
        logs = []
        for (kk, i), m in table.entries.items():
            if kk == k and m > 0:
                logs.append(normalized(table.r, k, i, kind=kind, table=table).log_value)
        if logs:
            sums[k] = float(logsumexp(np.array(logs)))
    ratios = {}
    for k in range(k_min, table.k_max + 1):
        if k in sums and (k - 1) in sums:
            ratios[k] = math.exp(sums[k] - sums[k - 1])
    return ratios
