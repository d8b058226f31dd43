"""Rank the signals of a Verilog design and summarise the selected slices.

    python scripts/rank_design.py tests/fixtures/i2c/*.v --k 3
"""

import argparse

from keysig.config import RunConfig
from keysig.frontend import SourceFile, parse_sources, resolve_hierarchy
from keysig.graph import build_graph
from keysig.ranking import rank_graph, ranking_table_text
from keysig.slicing import slice_signal


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("files", nargs="+")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--top", default="auto")
    p.add_argument("--rows", type=int, default=15, help="ranking rows to print")
    args = p.parse_args()

    ast = parse_sources([SourceFile.load(f) for f in args.files])
    hier = resolve_hierarchy(ast, args.top)
    g = build_graph(ast, hier)
    cfg = RunConfig(k=args.k).validate().rank_config()
    sub, table = rank_graph(g, cfg)
    print(f"design: top={hier.top} modules={len(ast.modules)} nodes={len(g)} edges={len(g.edges)} ranked={len(sub)}")
    print("\n".join(ranking_table_text(table).splitlines()[: args.rows + 2]))
    print()
    print(f"{'selected signal':<40}{'class':<16}{'nodes':>7}{'lines':>7}{'tokens':>8}  chain")
    for r in table:
        if r.selected:
            s = slice_signal(g, ast, hier, r.qualified_name)
            st = s.stats
            print(f"{r.qualified_name:<40}{r.cls:<16}{st['node_count']:>7}{st['fragment_lines']:>7}{st['token_estimate']:>8}  {s.chain}")


if __name__ == "__main__":
    main()
