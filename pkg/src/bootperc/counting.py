"""Exact counting of minimally susceptible graphs.

A graph on vertex set {0, ..., k-1} with threshold r >= 2 is *minimally
susceptible* (with seed {0, ..., r-1}) when the seed is a contagious set for
r-neighbor bootstrap percolation and the graph has exactly r*(k-r) edges.
The edge budget forces a rigid structure: every non-seed vertex has exactly
r neighbors in strictly earlier infection levels (its "parents", at least
one of them in the immediately preceding level), there are no edges inside a
level and none inside the seed.  Consequently each such graph is uniquely
described by an ordered partition of the non-seed vertices into nonempty
levels plus a choice of parent set for every vertex, which is what both the
recurrence and the brute-force oracle below enumerate.

Writing m_r(k, i) for the number of minimally susceptible graphs on k
labeled vertices whose final (top) level has size i:

    m_r(k, k-r) = 1
    m_r(k, i)   = C(k-r, i) * sum_{j=1..k-r-i} a_r(k-i, j)^i * m_r(k-i, j)

for i < k-r, where a_r(x, y) = C(x, r) - C(x-y, r) counts the r-subsets of
an x-set that meet a distinguished y-subset (the admissible parent sets of a
top-level vertex above a graph whose own top level has size y).

The triangle-free tables use

    hat_a_r(x, y) = max(0, a_r(x, y) - 2*r*y*x^(r-2))

which discards enough parent-set choices to kill every potential triangle;
the resulting recurrence therefore *undercounts* triangle-free minimally
susceptible graphs and the tables built from it are lower bounds only.
Exact triangle-free counts are available through the brute-force oracle.
The level-bounded variant additionally restricts every level (top size i
and every summation index j) to at most ell.

Normalized quantities, computed in log space (log-gamma for factorials,
relative error of the value <= 1e-12):

    sigma_r(k, i)   = m_r(k, i) / (k-r)! * ((r-1)! / k^(r-1))^k
    rho_hat_r(k, i) = mhat_r(k, i) / (k-r)! * ((r-1)! / ((k-i) k^(r-2)))^k

sigma_r satisfies sigma_r(k, i) <= i^(-1/2) e^(-i-(r-2)k); the induction
step behind that bound is the series inequality checked by
induction_step_report, whose kernel Lambda(i) = sum_j j^(i-1/2) e^(-j) is
shared with the polylogarithm-vs-gamma comparison in the thresholds module.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from itertools import combinations
from math import comb, exp, factorial, fsum, lgamma, log

__all__ = [
    "CountTable",
    "NormalizedCount",
    "CountingError",
    "EnumerationCapExceeded",
    "TableBudgetExceeded",
    "a_count",
    "hat_a_count",
    "a_identity_sides",
    "build_count_table",
    "brute_force_count",
    "iter_minimally_susceptible",
    "normalized",
    "sigma_upper_log",
    "A_entry",
    "lambda_weight_sum_log",
    "induction_step_report",
    "table_to_csv",
    "table_from_csv",
]

DEFAULT_TABLE_BUDGET = 2 * 2**30  # bytes of stored big integers
DEFAULT_ENUM_CAP = 10_000_000  # brute-force leaves

VARIANTS = ("exact", "triangle_free_lower", "triangle_free_lower_level_bounded")


class CountingError(Exception):
    pass


class EnumerationCapExceeded(CountingError):
    pass


class TableBudgetExceeded(CountingError):
    pass


# ----------------------------------------------------------------------
# parent-set counts
# ----------------------------------------------------------------------

def a_count(r: int, x: int, y: int) -> int:
    """Number of r-subsets of an x-set meeting a distinguished y-subset.

    a_r(x, y) = C(x, r) - C(x-y, r), with C(m, r) = 0 for m < r.
    """
    if r < 2:
        raise ValueError(f"threshold r must be >= 2, got {r}")
    if x < r:
        raise ValueError(f"need x >= r, got x={x}, r={r}")
    if y < 0 or y > x:
        raise ValueError(f"need 0 <= y <= x, got y={y}, x={x}")
    return comb(x, r) - (comb(x - y, r) if x - y >= r else 0)


def hat_a_count(r: int, x: int, y: int) -> int:
    """Parent-set count after discarding all potentially triangle-creating
    choices: max(0, a_r(x, y) - 2*r*y*x^(r-2))."""
    return max(0, a_count(r, x, y) - 2 * r * y * x ** (r - 2))


def a_identity_sides(r: int, x: int, y: int) -> tuple[float, float]:
    """Both sides of the falling-factorial identity

        (r-1)!/x^(r-1) * a_r(x, y)/y  =  (1/y) sum_{l=1..y} (x-l)_(r-1)/x^(r-1)

    where (m)_(r-1) = m(m-1)...(m-r+2) is the falling factorial; each
    summand is a product of r-1 factors (x-l-t)/x, all below 1 and
    increasing in x.  Returned as (lhs, rhs) for relative-error checks.
    Requires y >= 1.
    """
    if y < 1:
        raise ValueError("identity requires y >= 1")
    lhs = factorial(r - 1) / x ** (r - 1) * a_count(r, x, y) / y
    rhs = fsum(_falling_ratio(r, x, l) for l in range(1, y + 1)) / y
    return lhs, rhs


def _falling_ratio(r: int, x: int, l: int) -> float:
    prod = 1.0
    for t in range(r - 1):
        prod *= (x - l - t) / x
    return prod


# ----------------------------------------------------------------------
# count tables
# ----------------------------------------------------------------------

@dataclass
class CountTable:
    """Big-integer table of minimally susceptible graph counts.

    entries maps (k, i) -> count for r < k <= k_max, 1 <= i <= k - r
    (additionally i <= level_bound for the level-bounded variant).
    """

    r: int
    k_max: int
    variant: str
    entries: dict[tuple[int, int], int] = field(repr=False)
    level_bound: int | None = None

    def entry(self, k: int, i: int) -> int:
        try:
            return self.entries[(k, i)]
        except KeyError:
            raise KeyError(
                f"no entry (k={k}, i={i}) in {self.variant_label()} table "
                f"(r={self.r}, k_max={self.k_max})"
            ) from None

    def row(self, k: int) -> dict[int, int]:
        return {i: c for (kk, i), c in self.entries.items() if kk == k}

    def total(self, k: int) -> int:
        """m_r(k): count over all top-level sizes."""
        return sum(self.row(k).values())

    def variant_label(self) -> str:
        if self.variant == "triangle_free_lower_level_bounded":
            return f"triangle_free_lower_level_bounded({self.level_bound})"
        return self.variant


def build_count_table(
    r: int,
    k_max: int,
    variant: str = "exact",
    level_bound: int | None = None,
    memory_budget: int = DEFAULT_TABLE_BUDGET,
) -> CountTable:
    """Fill the (k, i) count table bottom-up by the recurrence.

    variant "exact" uses a_r, the triangle-free variants use hat_a_r; the
    level-bounded variant restricts both the stored top-level sizes and the
    summation index j to level_bound.  Exact integer arithmetic throughout.
    Raises TableBudgetExceeded if the stored integers outgrow memory_budget.
    """
    if r < 2:
        raise ValueError(f"threshold r must be >= 2, got {r}")
    if k_max <= r:
        raise ValueError(f"need k_max > r, got k_max={k_max}, r={r}")
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    bounded = variant == "triangle_free_lower_level_bounded"
    if bounded:
        if level_bound is None or level_bound < r:
            raise ValueError("level-bounded variant needs level_bound >= r")
    else:
        level_bound = None
    count_fn = a_count if variant == "exact" else hat_a_count

    entries: dict[tuple[int, int], int] = {}
    used = 0
    # Per x = k - i, parent-set counts a(x, j) and their running powers
    # a(x, j)^i, advanced by one multiplication each time i grows.
    a_vals: dict[int, list[int]] = {}
    powers: dict[int, list[int]] = {}
    power_exp: dict[int, int] = {}

    def store(k: int, i: int, value: int) -> None:
        nonlocal used
        entries[(k, i)] = value
        used += value.__sizeof__()
        if used > memory_budget:
            raise TableBudgetExceeded(
                f"count table exceeds memory budget of {memory_budget} bytes "
                f"at (k={k}, i={i})"
            )

    for k in range(r + 1, k_max + 1):
        top = k - r
        if not bounded or top <= level_bound:
            store(k, top, 1)
        i_hi = min(top - 1, level_bound) if bounded else top - 1
        for i in range(1, i_hi + 1):
            x = k - i
            if x not in a_vals:
                jj = x - r
                a_vals[x] = [count_fn(r, x, j) for j in range(1, jj + 1)]
                powers[x] = [1] * jj
                power_exp[x] = 0
            while power_exp[x] < i:
                row_a = a_vals[x]
                row_p = powers[x]
                for idx, a in enumerate(row_a):
                    row_p[idx] *= a
                power_exp[x] += 1
            j_hi = x - r
            if bounded:
                j_hi = min(j_hi, level_bound)
            row_p = powers[x]
            acc = 0
            for j in range(1, j_hi + 1):
                mj = entries.get((x, j))
                if mj:
                    acc += row_p[j - 1] * mj
            store(k, i, comb(top, i) * acc)
    return CountTable(r=r, k_max=k_max, variant=variant, entries=entries,
                      level_bound=level_bound)


# ----------------------------------------------------------------------
# brute-force oracle
# ----------------------------------------------------------------------

def iter_minimally_susceptible(r: int, k: int, cap: int = DEFAULT_ENUM_CAP):
    """Yield every minimally susceptible graph on {0..k-1} with seed {0..r-1}.

    Enumeration is by recursive top-down construction: split the non-seed
    labels into ordered nonempty levels and give each vertex of a level a choice
    of r parents among all earlier vertices, at least one of them in the
    immediately preceding level.  Yields (edges, levels) with edges a sorted
    tuple of (u, v) pairs (u < v) and levels the list of level tuples,
    levels[0] being the seed.  Raises EnumerationCapExceeded past cap graphs.
    """
    if r < 2:
        raise ValueError(f"threshold r must be >= 2, got {r}")
    if k <= r:
        raise ValueError(f"need k > r, got k={k}, r={r}")
    seed = tuple(range(r))
    produced = 0

    def parent_sets(cum: tuple[int, ...], prev: tuple[int, ...]):
        prev_set = set(prev)
        for ps in combinations(cum, r):
            if prev_set.intersection(ps):
                yield ps

    def recurse(cum, prev, remaining, edges, levels):
        nonlocal produced
        if not remaining:
            produced += 1
            if produced > cap:
                raise EnumerationCapExceeded(
                    f"brute-force enumeration exceeds cap of {cap} graphs"
                )
            yield tuple(sorted(edges)), list(levels)
            return
        rem = tuple(remaining)
        for s in range(1, len(rem) + 1):
            for labels in combinations(rem, s):
                next_rem = tuple(v for v in rem if v not in labels)
                choices = list(parent_sets(cum, prev))
                if not choices:
                    continue
                stack_edges = len(edges)
                for pick in _product(choices, s):
                    for v, ps in zip(labels, pick):
                        for p in ps:
                            edges.append((p, v) if p < v else (v, p))
                    levels.append(labels)
                    yield from recurse(cum + labels, labels, next_rem,
                                       edges, levels)
                    levels.pop()
                    del edges[stack_edges:]

    yield from recurse(seed, seed, tuple(range(r, k)), [], [seed])


def _product(choices, s):
    """itertools.product(choices, repeat=s) without materializing tuples of
    indices; kept explicit so the recursion cost stays visible."""
    if s == 1:
        for c in choices:
            yield (c,)
        return
    for c in choices:
        for rest in _product(choices, s - 1):
            yield (c,) + rest


def _has_triangle(edges) -> bool:
    adj: dict[int, set[int]] = {}
    for u, v in edges:
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)
    for u, v in edges:
        if adj[u] & adj[v]:
            return True
    return False


def brute_force_count(
    r: int,
    k: int,
    triangle_free: bool = False,
    cap: int = DEFAULT_ENUM_CAP,
) -> dict[int, int]:
    """Count minimally susceptible graphs by exhaustive construction.

    Returns {top level size i: labeled graph count}; with triangle_free the
    graphs containing a triangle are skipped.  Independent of the recurrence:
    this enumerates concrete edge sets.
    """
    buckets: dict[int, int] = {}
    for edges, levels in iter_minimally_susceptible(r, k, cap=cap):
        if triangle_free and _has_triangle(edges):
            continue
        i = len(levels[-1])
        buckets[i] = buckets.get(i, 0) + 1
    return buckets


# ----------------------------------------------------------------------
# normalized quantities
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class NormalizedCount:
    """A count normalized to the scale where its growth is bounded; held as
    log_value since the raw value underflows quickly."""

    r: int
    k: int
    i: int
    kind: str  # "sigma" | "rho_hat"
    log_value: float
    eps: float | None = None

    @property
    def value(self) -> float:
        try:
            return exp(self.log_value)
        except OverflowError:
            return float("inf")

    def to_json_record(self) -> str:
        return json.dumps(
            {"r": self.r, "k": self.k, "i": self.i, "kind": self.kind,
             "log_value": self.log_value}
        )


def normalized(
    r: int,
    k: int,
    i: int,
    kind: str = "sigma",
    eps: float | None = None,
    table: CountTable | None = None,
) -> NormalizedCount:
    """sigma or rho_hat normalization of a table entry, in log space.

    sigma normalizes exact counts, rho_hat the triangle-free lower-bound
    counts.  eps is provenance only (recorded, never used in the value).
    A table of the matching variant may be passed; otherwise one is built.
    """
    if kind not in ("sigma", "rho_hat"):
        raise ValueError(f"unknown kind {kind!r}")
    if kind == "rho_hat" and eps is not None and eps <= 0:
        raise ValueError("eps must be positive when given")
    if table is None:
        variant = "exact" if kind == "sigma" else "triangle_free_lower"
        table = build_count_table(r, k, variant=variant)
    m = table.entry(k, i)
    if m == 0:
        return NormalizedCount(r=r, k=k, i=i, kind=kind, eps=eps,
                               log_value=float("-inf"))
    logm = log(m)  # exact-path log of a big integer
    if kind == "sigma":
        log_value = logm - lgamma(k - r + 1) + k * (lgamma(r) - (r - 1) * log(k))
    else:
        log_value = logm - lgamma(k - r + 1) + k * (
            lgamma(r) - log(k - i) - (r - 2) * log(k)
        )
    return NormalizedCount(r=r, k=k, i=i, kind=kind, eps=eps, log_value=log_value)


def sigma_upper_log(r: int, k: int, i: int) -> float:
    """log of the top-level tail bound i^(-1/2) e^(-i-(r-2)k)."""
    return -0.5 * log(i) - i - (r - 2) * k


def A_entry(r: int, i: int, j: int, k: int | None = None) -> float:
    """Recursion kernel entry.

    Without k, the limit A_r(i, j) = j^i e^(-(r-1)i) / i!.  With k, the
    finite form

        A_r(k, i, j) = j^i/i! * ((k-i)/k)^((r-1)k)
                       * ((r-1)!/(k-i)^(r-1) * a_r(k-i, j)/j)^i

    which increases to the limit as k grows.
    """
    if i < 1 or j < 1:
        raise ValueError("need i, j >= 1")
    if k is None:
        return exp(i * log(j) - (r - 1) * i - lgamma(i + 1))
    if i >= k - r:
        raise ValueError(f"need i < k - r, got i={i}, k={k}, r={r}")
    if j > k - r - i:
        raise ValueError(f"need j <= k - r - i, got j={j}, k={k}, i={i}")
    a = a_count(r, k - i, j)
    log_val = (
        i * log(j)
        - lgamma(i + 1)
        + (r - 1) * k * log((k - i) / k)
        + i * (lgamma(r) - (r - 1) * log(k - i) + log(a) - log(j))
    )
    return exp(log_val)


# ----------------------------------------------------------------------
# the series kernel Lambda(i) and the induction-step inequality
# ----------------------------------------------------------------------

def lambda_weight_sum_log(i: int) -> tuple[float, int]:
    """log of Lambda(i) = sum_{j>=1} j^(i-1/2) e^(-j), with the series
    truncated once the ratio-test remainder drops below 1e-16 of the partial
    sum.  Returns (log_value, last_term_index)."""
    if i < 1:
        raise ValueError("need i >= 1")
    ex = i - 0.5
    terms: list[float] = []
    peak = max(1.0, ex)
    j = 0
    while True:
        j += 1
        terms.append(ex * log(j) - j)
        if j <= peak + 1:
            continue
        # past the peak the ratio ((j+1)/j)^ex * e^-1 is < 1 and decreasing
        ratio = exp(ex * log((j + 1) / j) - 1.0)
        if ratio >= 1.0:
            continue
        m = max(terms)
        partial = fsum(exp(t - m) for t in terms)
        tail = exp(terms[-1] - m) * ratio / (1.0 - ratio)
        if tail < 1e-16 * partial:
            return m + log(partial), j


def induction_step_report(i: int) -> dict:
    """Check sum_j (j^i e^-i / i!) j^(-1/2) e^-j <= i^(-1/2) e^-i.

    Dividing by e^-i/i! this is Lambda(i) <= i!/sqrt(i); both sides are
    compared in log space.  Returns a report dict with the truncation point.
    """
    log_lam, j_stop = lambda_weight_sum_log(i)
    lhs_log = log_lam - i - lgamma(i + 1)
    rhs_log = -0.5 * log(i) - i
    return {
        "i": i,
        "lhs_log": lhs_log,
        "rhs_log": rhs_log,
        "holds": lhs_log <= rhs_log,
        "truncated_at": j_stop,
    }


# ----------------------------------------------------------------------
# serialization
# ----------------------------------------------------------------------

def table_to_csv(table: CountTable, fp) -> None:
    """CSV with header r,k,i,variant,count (counts in full decimal)."""
    writer = csv.writer(fp)
    writer.writerow(["r", "k", "i", "variant", "count"])
    label = table.variant_label()
    for (k, i) in sorted(table.entries):
        writer.writerow([table.r, k, i, label, table.entries[(k, i)]])


def table_from_csv(fp) -> CountTable:
    reader = csv.reader(fp)
    header = next(reader)
    if header != ["r", "k", "i", "variant", "count"]:
        raise ValueError(f"unexpected CSV header: {header}")
    entries: dict[tuple[int, int], int] = {}
    r = k_max = None
    label = None
    for row in reader:
        r = int(row[0])
        k = int(row[1])
        entries[(k, int(row[2]))] = int(row[4])
        label = row[3]
        k_max = k if k_max is None else max(k_max, k)
    if r is None or label is None:
        raise ValueError("empty count table CSV")
    level_bound = None
    variant = label
    if label.startswith("triangle_free_lower_level_bounded("):
        variant = "triangle_free_lower_level_bounded"
        level_bound = int(label.split("(")[1].rstrip(")"))
    return CountTable(r=r, k_max=k_max, variant=variant, entries=entries,
                      level_bound=level_bound)
