"""Hybrid signal scoring and redundancy-aware top-K selection."""

from __future__ import annotations

import fnmatch
import json
import warnings
from collections import deque
from dataclasses import asdict, dataclass, field
from typing import Iterable, Mapping

from .graph import EdgeKind, SemanticGraph, SignalClass

RANKING_SCHEMA = "keysig-ranking/1"
DEFAULT_WEIGHTS = (0.45, 0.25, 0.20, 0.10)


class UnknownSignal(KeyError):
    pass


class EmptyGraph(ValueError):
    pass


class NonConvergence(RuntimeWarning):
    pass


@dataclass(frozen=True)
class FilterConfig:
    clock_patterns: tuple[str, ...] = ("clk*", "clock*")
    reset_patterns: tuple[str, ...] = ("rst*", "reset*", "*_rst_n", "*_reset_n", "*rstn", "*resetn")
    drop_parameters: bool = True
    drop_self_loops: bool = True
    drop_sensitivity_only: bool = True

    def matches(self, name: str) -> bool:
        low = name.lower()
        return any(fnmatch.fnmatchcase(low, p.lower()) for p in self.clock_patterns + self.reset_patterns)


def filter_subgraph(g: SemanticGraph, cfg: FilterConfig | None = None) -> SemanticGraph:
    """Drop clock/reset-like signals, parameters and self-loops."""
    cfg = cfg or FilterConfig()
    keep = []
    for key, n in g.nodes.items():
        if cfg.matches(n.name):
            continue
        if cfg.drop_parameters and n.parameter:
            continue
        if cfg.drop_sensitivity_only and n.sensitivity_only:
            continue
        keep.append(key)
    return g.subgraph(keep, drop_self_loops=cfg.drop_self_loops)


# --------------------------------------------------------------------------
# features
# --------------------------------------------------------------------------


class PageRankScores(dict):
    """PageRank values plus convergence bookkeeping."""

    converged: bool = True
    iterations: int = 0
    delta: float = 0.0


def pagerank(
    g: SemanticGraph,
    alpha: float = 0.85,
    tol: float = 1e-9,
    max_iter: int = 200,
) -> PageRankScores:
    """Iterate PR(v) = (1 - alpha) + alpha * sum_{u in pred(v)} PR(u) / outdeg(u).

    This is the un-normalised form: the constant term is ``1 - alpha`` rather
    than ``(1 - alpha) / N`` and dangling nodes leak their mass. Parallel
    edges of different kinds count once, so ``outdeg`` is the number of
    distinct successors. Iteration is synchronous from PR = 1 and stops when
    the largest per-node change drops below ``tol``.
    """
    if not len(g):
        raise EmptyGraph("pagerank of an empty graph")
    nodes = list(g.nodes)
    succ = g.successors
    pred = g.predecessors
    outdeg = {n: len(succ[n]) for n in nodes}
    pr = {n: 1.0 for n in nodes}
    delta = float("inf")
    it = 0
    while it < max_iter:
        it += 1
        new = {v: (1 - alpha) + alpha * sum(pr[u] / outdeg[u] for u in pred[v]) for v in nodes}
        delta = max(abs(new[v] - pr[v]) for v in nodes)
        pr = new
        if delta < tol:
            break
    out = PageRankScores(pr)
    out.iterations = it
    out.delta = delta
    out.converged = delta < tol
    if not out.converged:
        warnings.warn(
            f"pagerank did not converge in {max_iter} iterations (delta={delta:.3g})",
            NonConvergence,
            stacklevel=2,
        )
    return out


def _bfs(start: str, adjacency: Mapping[str, Iterable[str]], depth_limit: int | None = None) -> dict[str, int]:
    dist = {start: 0}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        if depth_limit is not None and dist[node] >= depth_limit:
            continue
        for nxt in adjacency[node]:
            if nxt not in dist:
                dist[nxt] = dist[node] + 1
                queue.append(nxt)
    return dist


def reachable_sets(g: SemanticGraph, v: str) -> tuple[frozenset[str], frozenset[str]]:
    """(forward, backward) reachable sets of ``v`` over all edge kinds, ``v`` excluded.

    ``v`` itself is excluded even when it lies on a cycle.
    """
    if v not in g.nodes:
        raise UnknownSignal(v)
    fwd = frozenset(_bfs(v, g.successors)) - {v}
    bwd = frozenset(_bfs(v, g.predecessors)) - {v}
    return fwd, bwd


_OBS_KINDS = frozenset({EdgeKind.CONTROL, EdgeKind.DATA})


def observability(
    g: SemanticGraph,
    *,
    count_temporal: bool = False,
    literal: bool = False,
) -> dict[str, int]:
    """Sum over backward-reachable nodes of their control/data out-edge counts.

    ``count_temporal`` also counts temporal edges as data. ``literal`` only
    counts edges that end at ``v`` itself instead of every qualifying
    out-edge of each predecessor.
    """
    kinds = _OBS_KINDS | {EdgeKind.TEMPORAL} if count_temporal else _OBS_KINDS
    weight = {n: sum(1 for e in g.out_edges[n] if e.kind in kinds) for n in g.nodes}
    out = {}
    for v in g.nodes:
        _, back = reachable_sets(g, v)
        if literal:
            out[v] = sum(1 for e in g.in_edges[v] if e.kind in kinds and e.src in back)
        else:
            out[v] = sum(weight[p] for p in back)
    return out


def output_boost(g: SemanticGraph, obs: Mapping[str, int]) -> dict[str, int]:
    return {v: (obs[v] if n.cls is SignalClass.OUTPUT_PORT else 0) for v, n in g.nodes.items()}


def mux_branch(g: SemanticGraph) -> dict[str, int]:
    """Number of distinct successors reached through at least one control edge."""
    return {
        v: len({e.dst for e in g.out_edges[v] if e.kind is EdgeKind.CONTROL})
        for v in g.nodes
    }


def minmax(values: Mapping[str, float]) -> dict[str, float]:
    """Min-max scale to [0, 1]; a constant feature maps to all zeros."""
    if not values:
        return {}
    lo, hi = min(values.values()), max(values.values())
    if hi == lo:
        return {k: 0.0 for k in values}
    return {k: (x - lo) / (hi - lo) for k, x in values.items()}


@dataclass(frozen=True)
class FeatureScores:
    pr: float
    obs: float
    outboost: float
    muxbranch: float
    pr_norm: float
    obs_norm: float
    outboost_norm: float
    muxbranch_norm: float
    hybrid: float

    @property
    def normalized(self) -> tuple[float, float, float, float]:
        return (self.pr_norm, self.obs_norm, self.outboost_norm, self.muxbranch_norm)


def combine(
    raw: Mapping[str, tuple[float, float, float, float]],
    weights: tuple[float, float, float, float] = DEFAULT_WEIGHTS,
) -> dict[str, FeatureScores]:
    """Normalise each raw feature column and take the weighted sum."""
    cols = [minmax({k: r[i] for k, r in raw.items()}) for i in range(4)]
    out = {}
    for k, r in raw.items():
        norm = [cols[i][k] for i in range(4)]
        hybrid = sum(w * x for w, x in zip(weights, norm))
        out[k] = FeatureScores(*r, *norm, hybrid)
    return out


def hybrid_scores(
    g: SemanticGraph,
    weights: tuple[float, float, float, float] = DEFAULT_WEIGHTS,
    *,
    alpha: float = 0.85,
    tol: float = 1e-9,
    max_iter: int = 200,
    count_temporal: bool = False,
    literal_obs: bool = False,
) -> dict[str, FeatureScores]:
    if not len(g):
        raise EmptyGraph("cannot score an empty graph")
    pr = pagerank(g, alpha, tol, max_iter)
    obs = observability(g, count_temporal=count_temporal, literal=literal_obs)
    boost = output_boost(g, obs)
    mux = mux_branch(g)
    raw = {v: (pr[v], float(obs[v]), float(boost[v]), float(mux[v])) for v in g.nodes}
    return combine(raw, weights)


# --------------------------------------------------------------------------
# similarity and selection
# --------------------------------------------------------------------------


def jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    union = a | b
    if not union:
        return 0.0
    return len(a & b) / len(union)


class Reachability:
    """Memoised forward/backward reachable sets for one graph."""

    def __init__(self, g: SemanticGraph):
        self.g = g
        self._cache: dict[str, tuple[frozenset[str], frozenset[str]]] = {}

    def __call__(self, v: str) -> tuple[frozenset[str], frozenset[str]]:
        if v not in self._cache:
            self._cache[v] = reachable_sets(self.g, v)
        return self._cache[v]

    def similarity(self, u: str, v: str, lam: float = 0.5) -> float:
        fu, bu = self(u)
        fv, bv = self(v)
        return lam * jaccard(fu, fv) + (1 - lam) * jaccard(bu, bv)


def bidirectional_jaccard(g: SemanticGraph, u: str, v: str, lam: float = 0.5) -> float:
    return Reachability(g).similarity(u, v, lam)


@dataclass(frozen=True)
class RankedSignal:
    qualified_name: str
    module: str
    cls: SignalClass
    scores: FeatureScores
    rank: int
    selected: bool
    reason: str  # selected / combinational / redundant / beyond_k
    pruned_by: str | None = None
    similarity: float | None = None

    def to_dict(self) -> dict:
        s = self.scores
        return {
            "rank": self.rank,
            "qualified_name": self.qualified_name,
            "module": self.module,
            "class": self.cls.value,
            "pr": s.pr,
            "obs": s.obs,
            "outboost": s.outboost,
            "muxbranch": s.muxbranch,
            "pr_norm": s.pr_norm,
            "obs_norm": s.obs_norm,
            "outboost_norm": s.outboost_norm,
            "muxbranch_norm": s.muxbranch_norm,
            "hybrid": s.hybrid,
            "selected": self.selected,
            "reason": self.reason,
            "pruned_by": self.pruned_by,
            "similarity": self.similarity,
        }


def ranked_order(scores: Mapping[str, FeatureScores]) -> list[str]:
    return sorted(scores, key=lambda k: (-scores[k].hybrid, k))


def rank_signals(
    g: SemanticGraph,
    scores: Mapping[str, FeatureScores],
    k: int,
    theta: float = 0.4,
    lam: float = 0.5,
) -> list[RankedSignal]:
    """Full ranking table with the greedy selection outcome for every node."""
    if not len(g):
        raise EmptyGraph("cannot rank an empty graph")
    if k < 1:
        raise ValueError("k must be >= 1")
    missing = set(g.nodes) - set(scores)
    if missing:
        raise UnknownSignal(f"no scores for {sorted(missing)[:3]}")
    reach = Reachability(g)
    kept: list[str] = []
    table = []
    for rank, key in enumerate(ranked_order({n: scores[n] for n in g.nodes}), start=1):
        node = g.nodes[key]
        pruned_by = sim = None
        if node.cls is SignalClass.INTERNAL_SIGNAL and node.combinational:
            reason = "combinational"
        else:
            for s in kept:
                j = reach.similarity(key, s, lam)
                if j > theta:
                    pruned_by, sim = s, j
                    break
            if pruned_by is None:
                kept.append(key)
                reason = "selected" if len(kept) <= k else "beyond_k"
            else:
                reason = "redundant"
        table.append(
            RankedSignal(key, node.module, node.cls, scores[key], rank, reason == "selected", reason, pruned_by, sim)
        )
    return table


def select_top_k(
    g: SemanticGraph,
    scores: Mapping[str, FeatureScores],
    k: int,
    theta: float = 0.4,
    lam: float = 0.5,
) -> list[RankedSignal]:
    """The first ``k`` signals that survive combinational and similarity pruning."""
    return [r for r in rank_signals(g, scores, k, theta, lam) if r.selected]


# --------------------------------------------------------------------------
# end-to-end ranking and rendering
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RankConfig:
    k: int = 3
    weights: tuple[float, float, float, float] = DEFAULT_WEIGHTS
    alpha: float = 0.85
    lam: float = 0.5
    theta: float = 0.4
    tol: float = 1e-9
    max_iter: int = 200
    count_temporal: bool = False
    literal_obs: bool = False
    filter: FilterConfig = field(default_factory=FilterConfig)


def rank_graph(g: SemanticGraph, cfg: RankConfig | None = None) -> tuple[SemanticGraph, list[RankedSignal]]:
    """Filter ``g`` and return the filtered graph plus its ranking table."""
    cfg = cfg or RankConfig()
    sub = filter_subgraph(g, cfg.filter)
    if not len(sub):
        raise EmptyGraph("no signals left after filtering")
    scores = hybrid_scores(
        sub,
        cfg.weights,
        alpha=cfg.alpha,
        tol=cfg.tol,
        max_iter=cfg.max_iter,
        count_temporal=cfg.count_temporal,
        literal_obs=cfg.literal_obs,
    )
    return sub, rank_signals(sub, scores, cfg.k, cfg.theta, cfg.lam)


def ranking_to_json(table: list[RankedSignal], cfg: RankConfig | None = None) -> bytes:
    cfg = cfg or RankConfig()
    doc = {
        "schema": RANKING_SCHEMA,
        "config": {
            "k": cfg.k,
            "weights": list(cfg.weights),
            "alpha": cfg.alpha,
            "lambda": cfg.lam,
            "theta": cfg.theta,
            "filter": asdict(cfg.filter),
        },
        "signals": [r.to_dict() for r in table],
    }
    return (json.dumps(doc, indent=2) + "\n").encode()


def ranking_table_text(table: list[RankedSignal]) -> str:
    header = f"{'rank':>4}  {'signal':<40} {'class':<15} {'pr':>9} {'obs':>6} {'boost':>6} {'mux':>4} {'score':>7}  sel"
    lines = [header, "-" * len(header)]
    for r in table:
        s = r.scores
        mark = "*" if r.selected else ("" if r.reason == "beyond_k" else r.reason[:5])
        lines.append(
            f"{r.rank:>4}  {r.qualified_name:<40} {r.cls.value:<15} {s.pr:>9.4f} {s.obs:>6g} "
            f"{s.outboost:>6g} {s.muxbranch:>4g} {s.hybrid:>7.4f}  {mark}"
        )
    return "\n".join(lines) + "\n"
