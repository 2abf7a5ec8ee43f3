"""G(n,p) Monte Carlo harness.

Sampling uses geometric skipping over linear pair indices, so the expected
work is O(n^2 p).  Sweeps over alpha reuse one sample per trial through
uniform edge marks: the subgraph at probability p keeps the edges with
mark < p, which makes monotonicity in p literal rather than statistical.

Percolations run on a peeling kernel whose work is proportional to the
edges touched by the spread (counts and stamps are per-trial, so a graph
is reused across many seeds without O(n) clearing).

Every trial derives its RNG stream from (rng_seed, trial_index); outputs
carry no timestamps, so identical configs produce byte-identical files.
"""

import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .branching import hitting_probability_exact, trial_rng
from .counting import build_count_table
from .engine import Graph
from .thresholds import beta_star, theta

__all__ = [
    "ExperimentConfig",
    "PkiEstimate",
    "SeedEdgePoint",
    "SusceptibilityPoint",
    "TerminalEstimate",
    "sample_gnp",
    "sample_gnp_marked",
    "PeelingKernel",
    "first_step_law",
    "estimate_Pki",
    "seed_edge_sweep",
    "susceptibility_sweep",
    "terminal_set_frequency",
    "write_csv",
    "write_json",
]

EXHAUSTIVE_SEED_CAP = 200_000
SUSCEPTIBILITY_N_CAP = 3000


# ---------------------------------------------------------------------------
# sampling


def _pairs_from_linear(n: int, idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # linear index over pairs u < v in u-major order:
    # idx(u, v) = u(2n-u-1)/2 + (v-u-1); inversion via the quadratic root
    # with integer correction for float rounding
    b = 2 * n - 1
    u = ((b - np.sqrt(b * b - 8.0 * idx)) // 2).astype(np.int64)
    u = np.maximum(u, 0)
    for _ in range(2):
        off_next = (u + 1) * (b - (u + 1)) // 2
        u = np.where(off_next <= idx, u + 1, u)
        off = u * (b - u) // 2
        u = np.where(off > idx, u - 1, u)
    off = u * (b - u) // 2
    v = idx - off + u + 1
    return u, v


def _sample_pair_indices(n: int, p: float, rng: np.random.Generator) -> np.ndarray:
    total = n * (n - 1) // 2
    if p <= 0.0 or total == 0:
        return np.empty(0, dtype=np.int64)
    if p >= 1.0:
        return np.arange(total, dtype=np.int64)
    chunks = []
    pos = -1
    mean = total * p
    batch = int(mean + 5 * math.sqrt(mean + 1) + 16)
    while pos < total:
        gaps = rng.geometric(p, size=batch).astype(np.int64)
        idx = pos + np.cumsum(gaps)
        pos = int(idx[-1])
        chunks.append(idx)
        batch = max(16, int((total - pos) * p + 5 * math.sqrt(mean + 1) + 16))
    idx = np.concatenate(chunks)
    return idx[idx < total]


def sample_gnp(n: int, p: float, rng_seed: int, trial_index: int = 0) -> Graph:
    """One G(n,p) sample; each unordered pair appears independently."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0,1], got {p}")
    rng = trial_rng(rng_seed, trial_index)
    idx = _sample_pair_indices(n, p, rng)
    u, v = _pairs_from_linear(n, idx)
    return Graph.from_arrays(n, u, v)


def sample_gnp_marked(
    n: int, p_max: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Edges of G(n, p_max) with independent uniform(0, p_max) marks.

    Keeping the edges with mark < p yields G(n, p) for any p <= p_max,
    coupled monotonically across p.
    """
    if not 0.0 < p_max <= 1.0:
        raise ValueError(f"p_max must lie in (0,1], got {p_max}")
    idx = _sample_pair_indices(n, p_max, rng)
    u, v = _pairs_from_linear(n, idx)
    marks = rng.uniform(0.0, p_max, size=idx.shape[0])
    return u, v, marks


# ---------------------------------------------------------------------------
# peeling kernel


class PeelingKernel:
    """Bootstrap percolation by synchronous rounds on a CSR graph.

    Reusable across seeds: per-vertex counters are validated by a trial
    stamp, so starting a new seed costs O(|seed|), and a run costs the sum
    of degrees of the vertices it infects.
    """

    def __init__(self, graph: Graph):
        self.graph = graph
        n = graph.n
        self._count = np.zeros(n, dtype=np.int64)
        self._count_stamp = np.zeros(n, dtype=np.int64)
        self._infected = np.zeros(n, dtype=np.int64)
        self._trial = 0

    def run(
        self, seed, r: int, k_stop: Optional[int] = None
    ) -> tuple[list[tuple[int, int]], bool]:
        """Level profile [(|V_t|, |I_t|)] from t=0; True if stopped early.

        Stops after the first completed level with |V_t| > k_stop; level
        sizes already emitted are exact either way.
        """
        self._trial += 1
        t = self._trial
        infected = self._infected
        count = self._count
        count_stamp = self._count_stamp
        indptr = self.graph.indptr
        indices = self.graph.indices
        raw = [int(s) for s in seed]
        cur = list(dict.fromkeys(raw))
        if len(cur) != len(raw):
            raise ValueError("seed vertices must be distinct")
        for s in cur:
            if not 0 <= s < self.graph.n:
                raise ValueError(f"seed vertex {s} out of range")
            infected[s] = t
        cum = len(cur)
        levels = [(cum, cum)]
        while cur:
            nxt = []
            for u in cur:
                for w in indices[indptr[u] : indptr[u + 1]]:
                    if infected[w] == t:
                        continue
                    if count_stamp[w] != t:
                        count_stamp[w] = t
                        count[w] = 0
                    count[w] += 1
                    if count[w] == r:
                        nxt.append(int(w))
            if not nxt:
                return levels, False
            for w in nxt:
                infected[w] = t
            cum += len(nxt)
            levels.append((cum, len(nxt)))
            if k_stop is not None and cum > k_stop:
                return levels, True
            cur = nxt
        return levels, False


# ---------------------------------------------------------------------------
# configuration


@dataclass
class ExperimentConfig:
    n: int
    r: int
    alpha: Optional[float] = None
    p: Optional[float] = None
    trials: int = 200
    rng_seed: int = 0
    seed_policy: str = "random"
    seeds_per_graph: int = 1
    k_max: int = 12
    out_path: Optional[str] = None
    out_format: str = "csv"

    def __post_init__(self):
        if self.n < self.r:
            raise ValueError("need n >= r")
        if (self.alpha is None) == (self.p is None):
            raise ValueError("exactly one of alpha and p must be given")
        if self.alpha is not None:
            self.p = theta(self.r, self.alpha, self.n)
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0,1], got {self.p}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.seed_policy not in ("random", "all"):
            raise ValueError(f"unknown seed policy {self.seed_policy!r}")
        if self.seed_policy == "all" and math.comb(self.n, self.r) > EXHAUSTIVE_SEED_CAP:
            raise ValueError(
                f"exhaustive seed policy capped at C(n,r) <= {EXHAUSTIVE_SEED_CAP}"
            )
        if self.seeds_per_graph < 1:
            raise ValueError("seeds_per_graph must be >= 1")
        if self.k_max <= self.r:
            raise ValueError("k_max must exceed r")
        if self.out_format not in ("csv", "json"):
            raise ValueError(f"unknown output format {self.out_format!r}")

    @property
    def eps(self) -> float:
        return self.n * self.p**self.r


def first_step_law(n: int, p: float, r: int) -> float:
    """P(exactly one vertex joins in round one) = (n-r) q (1-q)^(n-r-1), q=p^r."""
    q = p**r
    return (n - r) * q * (1 - q) ** (n - r - 1)


# ---------------------------------------------------------------------------
# (k,i) visit frequencies


def _random_seed_tuple(rng: np.random.Generator, n: int, r: int) -> tuple[int, ...]:
    return tuple(int(x) for x in rng.choice(n, size=r, replace=False))


def _pki_trial(args) -> list:
    n, r, p, k_max, rng_seed, trial_index, policy, seeds_per_graph = args
    rng = trial_rng(rng_seed, trial_index)
    graph = Graph.from_arrays(n, *_sample_edges(n, p, rng))
    kernel = PeelingKernel(graph)
    hits = []
    from itertools import combinations

    seeds = (
        combinations(range(n), r)
        if policy == "all"
        else (_random_seed_tuple(rng, n, r) for _ in range(seeds_per_graph))
    )
    for seed in seeds:
        levels, _ = kernel.run(seed, r, k_stop=k_max)
        visits = [(k, i) for k, i in levels if r < k <= k_max]
        hits.append(visits)
    return hits


def _sample_edges(n, p, rng):
    idx = _sample_pair_indices(n, p, rng)
    return _pairs_from_linear(n, idx)


def _map_trials(fn, argses, workers: int):
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            chunk = max(1, len(argses) // (workers * 8))
            return list(ex.map(fn, argses, chunksize=chunk))
    return [fn(a) for a in argses]


@dataclass
class PkiEstimate:
    n: int
    r: int
    p: float
    eps: float
    seed_trials: int
    freq: dict
    stderr: dict
    comparator: Optional[dict]

    def rows(self):
        keys = sorted(set(self.freq) | set(self.comparator or {}))
        out = []
        for k, i in keys:
            f = self.freq.get((k, i), 0.0)
            s = self.stderr.get((k, i), 0.0)
            c = (self.comparator or {}).get((k, i))
            out.append((k, i, f, s, c if c is not None else ""))
        return out

    def to_json_payload(self) -> dict:
        return {
            "n": self.n,
            "r": self.r,
            "p": self.p,
            "eps": self.eps,
            "seed_trials": self.seed_trials,
            "records": [
                {
                    "k": k,
                    "i": i,
                    "frequency": f,
                    "stderr": s,
                    "comparator": c if c != "" else None,
                }
                for k, i, f, s, c in self.rows()
            ],
        }


def estimate_Pki(config: ExperimentConfig, workers: int = 0) -> PkiEstimate:
    """Visit frequencies of (|V_t|, |I_t|) = (k, i) over seeded percolations.

    Each tested seed contributes one Bernoulli observation per (k, i) with
    r < k <= k_max (a percolation visits a given k at most once, since the
    infected set only grows).  The exact branching comparator
    l_r(k, i) = e^{-eps C(k-i, r)} eps^{k-r} / (k-r)! m_r(k, i) with
    eps = n p^r rides along when the count table is available.
    """
    argses = [
        (
            config.n,
            config.r,
            config.p,
            config.k_max,
            config.rng_seed,
            t,
            config.seed_policy,
            config.seeds_per_graph,
        )
        for t in range(config.trials)
    ]
    results = _map_trials(_pki_trial, argses, workers)
    tally: dict = {}
    total = 0
    for per_graph in results:
        for visits in per_graph:
            total += 1
            for key in visits:
                tally[key] = tally.get(key, 0) + 1
    freq = {key: c / total for key, c in sorted(tally.items())}
    stderr = {
        key: math.sqrt(f * (1 - f) / total) for key, f in freq.items()
    }
    comparator = None
    try:
        table = build_count_table(config.r, config.k_max)
        eps = config.eps
        comparator = {
            (k, i): hitting_probability_exact(config.r, eps, k, i, table=table)
            for k in range(config.r + 1, config.k_max + 1)
            for i in range(1, k - config.r + 1)
        }
    except Exception as exc:  # pragma: no cover - depends on table budget
        warnings.warn(f"comparator omitted: {exc}")
    return PkiEstimate(
        n=config.n,
        r=config.r,
        p=config.p,
        eps=config.eps,
        seed_trials=total,
        freq=freq,
        stderr=stderr,
        comparator=comparator,
    )


# ---------------------------------------------------------------------------
# terminal (k, i) frequencies


def _terminal_trial(args) -> list:
    n, r, p, rng_seed, trial_index, policy, seeds_per_graph = args
    rng = trial_rng(rng_seed, trial_index)
    graph = Graph.from_arrays(n, *_sample_edges(n, p, rng))
    kernel = PeelingKernel(graph)
    from itertools import combinations

    seeds = (
        combinations(range(n), r)
        if policy == "all"
        else (_random_seed_tuple(rng, n, r) for _ in range(seeds_per_graph))
    )
    outcomes = []
    for seed in seeds:
        levels, truncated = kernel.run(seed, r, k_stop=None)
        assert not truncated
        outcomes.append(levels[-1])
    return outcomes


@dataclass
class TerminalEstimate:
    n: int
    r: int
    p: float
    seed_trials: int
    freq: dict

    def rows(self):
        return [(k, i, f) for (k, i), f in sorted(self.freq.items())]


def terminal_set_frequency(
    config: ExperimentConfig, workers: int = 0
) -> TerminalEstimate:
    """Frequency that a seed's percolation terminates at (|V_tau|, |I_tau|)."""
    argses = [
        (
            config.n,
            config.r,
            config.p,
            config.rng_seed,
            t,
            config.seed_policy,
            config.seeds_per_graph,
        )
        for t in range(config.trials)
    ]
    results = _map_trials(_terminal_trial, argses, workers)
    tally: dict = {}
    total = 0
    for outcomes in results:
        for key in outcomes:
            total += 1
            tally[key] = tally.get(key, 0) + 1
    freq = {key: c / total for key, c in sorted(tally.items())}
    return TerminalEstimate(
        n=config.n, r=config.r, p=config.p, seed_trials=total, freq=freq
    )


# ---------------------------------------------------------------------------
# seed-edge sweep (r = 2)


def _csr_from_mask(n, u, v, mask):
    return Graph.from_arrays(n, u[mask], v[mask])


def _has_seed_edge(graph: Graph, kernel: PeelingKernel, top_k: int = 64) -> bool:
    """Whether some edge percolates the whole graph under 2-bootstrap.

    A seed edge needs a common neighbor for its first round, so candidates
    are exactly the edges lying in triangles.  High degree-sum edges are
    probed first; the exhaustive fallback orders triangle edges by their
    common-neighbor count.
    """
    n = graph.n
    if n < 3 or graph.m == 0:
        return False
    indptr, indices = graph.indptr, graph.indices
    deg = np.diff(indptr)

    us = np.repeat(np.arange(n, dtype=np.int64), deg)
    mask = us < indices
    eu, ev = us[mask], indices[mask]
    if eu.shape[0] == 0:
        return False

    def percolates(a, b):
        levels, _ = kernel.run((int(a), int(b)), 2, k_stop=None)
        return levels[-1][0] == n

    def common_count(a, b):
        return np.intersect1d(
            indices[indptr[a] : indptr[a + 1]],
            indices[indptr[b] : indptr[b + 1]],
            assume_unique=True,
        ).shape[0]

    score = deg[eu] + deg[ev]
    if eu.shape[0] > top_k:
        cand = np.argpartition(score, -top_k)[-top_k:]
    else:
        cand = np.arange(eu.shape[0])
    cand = cand[np.argsort(-score[cand], kind="stable")]
    for e in cand:
        a, b = eu[e], ev[e]
        if common_count(a, b) > 0 and percolates(a, b):
            return True

    # exhaustive fallback: triangle edges are the neighbor pairs (about a
    # common vertex) that are themselves edges; enumerate wedges in bounded
    # chunks and filter against the sorted linear edge keys
    ekeys = eu * n + ev
    probed = set((int(eu[e]), int(ev[e])) for e in cand)
    triu_cache: dict = {}
    chunk_cap = 1 << 21
    buf_u: list = []
    buf_v: list = []
    buffered = 0

    def scan(pairs_u, pairs_v) -> bool:
        keys = pairs_u * n + pairs_v
        pos = np.searchsorted(ekeys, keys)
        ok = pos < ekeys.shape[0]
        ok[ok] = ekeys[pos[ok]] == keys[ok]
        for a, b in zip(pairs_u[ok].tolist(), pairs_v[ok].tolist()):
            pair = (a, b)
            if pair in probed:
                continue
            probed.add(pair)
            if percolates(a, b):
                return True
        return False

    for c in range(n):
        nbrs = indices[indptr[c] : indptr[c + 1]]
        d = nbrs.shape[0]
        if d < 2:
            continue
        if d not in triu_cache:
            triu_cache[d] = np.triu_indices(d, 1)
        ii, jj = triu_cache[d]
        buf_u.append(nbrs[ii])
        buf_v.append(nbrs[jj])
        buffered += ii.shape[0]
        if buffered >= chunk_cap:
            if scan(np.concatenate(buf_u), np.concatenate(buf_v)):
                return True
            buf_u, buf_v, buffered = [], [], 0
    if buffered and scan(np.concatenate(buf_u), np.concatenate(buf_v)):
        return True
    return False


def _seed_edge_trial(args) -> list:
    n, alphas, ps, rng_seed, trial_index = args
    rng = trial_rng(rng_seed, trial_index)
    u, v, marks = sample_gnp_marked(n, ps[-1], rng)
    outcomes = []
    found = False
    for p in ps:
        if found:
            outcomes.append(True)
            continue
        graph = _csr_from_mask(n, u, v, marks < p)
        found = _has_seed_edge(graph, PeelingKernel(graph))
        outcomes.append(found)
    return outcomes


@dataclass
class SeedEdgePoint:
    alpha: float
    p: float
    trials: int
    frequency: float
    stderr: float


def seed_edge_sweep(
    n: int, alpha_list, trials: int, rng_seed: int, workers: int = 0
) -> list[SeedEdgePoint]:
    """Frequency that G(n, theta_2(alpha, n)) contains a seed edge, per alpha.

    One marked sample per trial serves every alpha, so the per-trial
    outcome sequence is literally monotone in alpha and the first success
    short-circuits the rest.
    """
    alphas = sorted(float(a) for a in alpha_list)
    if not alphas:
        raise ValueError("alpha_list must be nonempty")
    ps = [theta(2, a, n) for a in alphas]
    argses = [(n, alphas, ps, rng_seed, t) for t in range(trials)]
    results = _map_trials(_seed_edge_trial, argses, workers)
    points = []
    for j, (a, p) in enumerate(zip(alphas, ps)):
        hits = sum(1 for out in results if out[j])
        f = hits / trials
        points.append(
            SeedEdgePoint(a, p, trials, f, math.sqrt(f * (1 - f) / trials))
        )
    return points


# ---------------------------------------------------------------------------
# susceptibility sweep (r = 2 exhaustive)


def _wedge_pair_candidates(graph: Graph):
    seen = set()
    indptr, indices = graph.indptr, graph.indices
    for v in range(graph.n):
        nbrs = indices[indptr[v] : indptr[v + 1]]
        d = nbrs.shape[0]
        for x in range(d):
            for y in range(x + 1, d):
                key = int(nbrs[x]) * graph.n + int(nbrs[y])
                if key not in seen:
                    seen.add(key)
                    yield int(nbrs[x]), int(nbrs[y])


def _susceptibility_trial(args) -> list:
    n, alphas, ps, rng_seed, trial_index = args
    rng = trial_rng(rng_seed, trial_index)
    u, v, marks = sample_gnp_marked(n, ps[-1], rng)
    out = []
    for p in ps:
        graph = _csr_from_mask(n, u, v, marks < p)
        kernel = PeelingKernel(graph)
        susceptible = False
        max_spread = 2
        for seed in _wedge_pair_candidates(graph):
            levels, _ = kernel.run(seed, 2, k_stop=None)
            size = levels[-1][0]
            if size > max_spread:
                max_spread = size
            if size == n:
                susceptible = True
                break
        out.append((susceptible, max_spread))
    return out


@dataclass
class SusceptibilityPoint:
    alpha: float
    p: float
    trials: int
    susceptible_freq: float
    susceptible_stderr: float
    spread_norm_mean: float
    spread_norm_p95: float
    beta_bound: float
    frac_within_beta: float


def susceptibility_sweep(
    n: int,
    r: int,
    alpha_list,
    trials: int,
    rng_seed: int,
    seed_policy: str = "all",
    workers: int = 0,
) -> list[SusceptibilityPoint]:
    """Exhaustive 2-susceptibility and max-spread statistics per alpha.

    Candidate seeds are the pairs with a common neighbor (any other pair
    stops at size 2); a full percolation short-circuits the scan.  Max
    spreads are reported normalized by log n and compared against
    beta_star(alpha) + 1 (finite-size slack of one growth unit).
    """
    if r != 2 or seed_policy != "all":
        raise ValueError("only the exhaustive r=2 sweep is implemented")
    if n > SUSCEPTIBILITY_N_CAP:
        raise ValueError(f"exhaustive susceptibility capped at n <= {SUSCEPTIBILITY_N_CAP}")
    alphas = sorted(float(a) for a in alpha_list)
    if not alphas:
        raise ValueError("alpha_list must be nonempty")
    ps = [theta(2, a, n) for a in alphas]
    argses = [(n, alphas, ps, rng_seed, t) for t in range(trials)]
    results = _map_trials(_susceptibility_trial, argses, workers)
    logn = math.log(n)
    points = []
    for j, (a, p) in enumerate(zip(alphas, ps)):
        sus = [out[j][0] for out in results]
        spreads = np.array([out[j][1] for out in results], dtype=np.float64) / logn
        f = sum(sus) / trials
        bound = beta_star(2, a) + 1.0
        points.append(
            SusceptibilityPoint(
                alpha=a,
                p=p,
                trials=trials,
                susceptible_freq=f,
                susceptible_stderr=math.sqrt(f * (1 - f) / trials),
                spread_norm_mean=float(spreads.mean()),
                spread_norm_p95=float(np.quantile(spreads, 0.95)),
                beta_bound=bound,
                frac_within_beta=float(np.mean(spreads <= bound)),
            )
        )
    return points


# ---------------------------------------------------------------------------
# deterministic writers


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path: str, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    with open(path, "w") as fp:
        fp.write("\n".join(lines) + "\n")


def write_json(path: str, payload) -> None:
    with open(path, "w") as fp:
        json.dump(payload, fp, sort_keys=True, indent=2)
        fp.write("\n")
