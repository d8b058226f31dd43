"""Token cost of slice-based prompts versus whole-design prompts.

For every selected signal the prompt is rendered twice: once with its RTL
slice and once with the full source text in place of the slice. Token
counts are whitespace estimates, the same ones the budget guard uses.

    python scripts/slice_token_savings.py tests/fixtures/i2c/*.v \
        --overview tests/fixtures/i2c/overview.txt
"""

import argparse
import dataclasses
from pathlib import Path

from keysig.assertions import build_prompt, load_overview
from keysig.frontend import SourceFile, parse_sources, resolve_hierarchy
from keysig.graph import build_graph
from keysig.ranking import RankConfig, rank_graph
from keysig.slicing import Fragment, slice_signal


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("files", nargs="+")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--overview")
    p.add_argument("--depth", type=int, default=None, help="slice depth limit")
    args = p.parse_args()

    ast = parse_sources([SourceFile.load(f) for f in args.files])
    hier = resolve_hierarchy(ast)
    g = build_graph(ast, hier)
    overview = load_overview(args.overview)
    full_text = "\n".join(Path(f).read_text() for f in args.files)
    _, table = rank_graph(g, RankConfig(k=args.k))

    print(f"{'signal':<40}{'slice':>8}{'full':>8}{'saving':>9}")
    tot_s = tot_f = 0
    for r in table:
        if not r.selected:
            continue
        s = slice_signal(g, ast, hier, r.qualified_name, depth_limit=args.depth)
        whole = dataclasses.replace(s, fragments=(Fragment("design", full_text),))
        ts = build_prompt(s, overview).token_estimate
        tf = build_prompt(whole, overview).token_estimate
        tot_s, tot_f = tot_s + ts, tot_f + tf
        print(f"{r.qualified_name:<40}{ts:>8}{tf:>8}{1 - ts / tf:>9.1%}")
    if tot_f:
        print(f"{'total':<40}{tot_s:>8}{tot_f:>8}{1 - tot_s / tot_f:>9.1%}")


if __name__ == "__main__":
    main()
