"""Compare top-K selections under alternative feature weightings.

Each row reruns ranking with one weight vector (PageRank, Observability,
OutputBoost, MuxBranch) and reports the chosen signals, how many of them
the default weighting also chooses, and the mean pairwise cone similarity.

    python scripts/weight_ablation.py tests/fixtures/i2c/*.v --k 3
"""

import argparse
import itertools

from keysig.frontend import SourceFile, parse_sources, resolve_hierarchy
from keysig.graph import build_graph
from keysig.ranking import DEFAULT_WEIGHTS, RankConfig, Reachability, rank_graph

VARIANTS = {
    "default": DEFAULT_WEIGHTS,
    "uniform": (0.25, 0.25, 0.25, 0.25),
    "pagerank-only": (1.0, 0.0, 0.0, 0.0),
    "observability-only": (0.0, 1.0, 0.0, 0.0),
    "boost-only": (0.0, 0.0, 1.0, 0.0),
    "mux-only": (0.0, 0.0, 0.0, 1.0),
    "no-pagerank": (0.0, 0.45, 0.35, 0.20),
}


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("files", nargs="+")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--theta", type=float, default=0.4)
    args = p.parse_args()

    ast = parse_sources([SourceFile.load(f) for f in args.files])
    g = build_graph(ast, resolve_hierarchy(ast))
    picks = {}
    reach = None
    for name, w in VARIANTS.items():
        sub, table = rank_graph(g, RankConfig(k=args.k, weights=w, theta=args.theta))
        reach = reach or Reachability(sub)
        picks[name] = [r.qualified_name for r in table if r.selected]
    base = set(picks["default"])
    print(f"{'variant':<20}{'overlap':>8}{'mean J':>8}  selected")
    for name, sel in picks.items():
        pairs = list(itertools.combinations(sel, 2))
        mean_j = sum(reach.similarity(a, b) for a, b in pairs) / len(pairs) if pairs else 0.0
        print(f"{name:<20}{len(base & set(sel)):>8}{mean_j:>8.3f}  {', '.join(sel)}")


if __name__ == "__main__":
    main()
