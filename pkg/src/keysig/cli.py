"""Command-line interface.

Every subcommand that consumes configuration accepts ``--config FILE`` plus
one flag per configuration key (``--node-cap``, ``--weights``, ...); flags
override the file. Exit codes: 0 success, 1 usage or configuration error,
2 Verilog parse/elaboration error, 3 failure in a later pipeline stage.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields
from pathlib import Path

from . import __version__
from .config import ConfigError, RunConfig
from .frontend import check_references
from .graph import build_graph, export_graph, import_graph
from .pipeline import PipelineError, parse_design, run_pipeline
from .ranking import EmptyGraph, UnknownSignal, rank_graph, ranking_table_text, ranking_to_json
from .report import EmptyBatch, load_batch, metrics_table, metrics_to_json, normalized_metrics
from .slicing import load_slice, slice_signal, write_slice

EXIT_OK, EXIT_CONFIG, EXIT_PARSE, EXIT_PIPELINE = 0, 1, 2, 3

log = logging.getLogger("keysig")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # usage errors share the config exit code
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _flag_type(type_str: str):
    if "list[float]" in type_str:
        return dict(type=float, nargs=4, metavar="W")
    if "list[str]" in type_str:
        return dict(type=str, nargs="+")
    if "bool" in type_str:
        return dict(action=argparse.BooleanOptionalAction)
    if "int" in type_str:
        return dict(type=int)
    if "float" in type_str:
        return dict(type=float)
    return dict(type=str)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("configuration")
    g.add_argument("--config", help="YAML or JSON file of configuration keys")
    for f in fields(RunConfig):
        if f.name in ("sources", "output_dir"):
            continue
        names = [f"--{f.name.replace('_', '-')}"]
        if f.name == "lam":
            names.append("--lambda")
        kw = _flag_type(str(f.type))
        if "action" not in kw:
            kw.setdefault("metavar", f.name.upper())
        g.add_argument(*names, dest=f"cfg_{f.name}", default=argparse.SUPPRESS, **kw)


def _config(args: argparse.Namespace) -> RunConfig:
    base = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    data = base.to_dict()
    for key, value in vars(args).items():
        if key.startswith("cfg_"):
            data[key[4:]] = value
    if getattr(args, "files", None):
        data["sources"] = list(args.files)
    if getattr(args, "output_dir", None):
        data["output_dir"] = args.output_dir
    return RunConfig.from_mapping(data).validate()


def _emit(data: bytes | str, path: str | None) -> None:
    if isinstance(data, str):
        data = data.encode()
    if path:
        Path(path).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


# ---------------------------------------------------------------- commands


def cmd_parse(args) -> int:
    cfg = _config(args)
    ast, hier = parse_design(cfg.sources, cfg.top)
    for d in check_references(ast):
        print(d, file=sys.stderr)
    summary = {
        "top": hier.top,
        "modules": [
            {
                "name": m.name,
                "ports": [{"name": p.name, "direction": p.direction, "width": p.width} for p in m.ports],
                "items": len(m.items),
                "instances": [{"name": i.name, "module": i.module} for i in m.instances()],
            }
            for m in ast.modules
        ],
        "hierarchy": [list(e) for e in hier.edges()],
    }
    _emit(json.dumps(summary, indent=2) + "\n", args.output)
    return EXIT_OK


def cmd_graph(args) -> int:
    cfg = _config(args)
    ast, hier = parse_design(cfg.sources, cfg.top)
    g = build_graph(ast, hier)
    for d in g.diagnostics:
        print(d, file=sys.stderr)
    _emit(export_graph(g, args.format), args.output)
    return EXIT_OK


def cmd_rank(args) -> int:
    cfg = _config(args)
    if args.graph:
        g = import_graph(Path(args.graph).read_bytes())
    else:
        g = build_graph(*parse_design(cfg.sources, cfg.top))
    rank_cfg = cfg.rank_config()
    try:
        _, table = rank_graph(g, rank_cfg)
    except EmptyGraph as exc:
        raise PipelineError("rank", exc) from exc
    if args.table:
        _emit(ranking_table_text(table), args.output)
    else:
        _emit(ranking_to_json(table, rank_cfg), args.output)
    return EXIT_OK


def cmd_slice(args) -> int:
    cfg = _config(args)
    ast, hier = parse_design(cfg.sources, cfg.top)
    g = build_graph(ast, hier)
    targets = list(args.signal or [])
    if args.ranking:
        doc = json.loads(Path(args.ranking).read_text())
        targets += [s["qualified_name"] for s in doc["signals"] if s["selected"]]
    if not targets:
        raise ConfigError("slice needs --signal or --ranking")
    out = Path(args.output_dir or cfg.output_dir) / "slices"
    for t in targets:
        try:
            s = slice_signal(g, ast, hier, t, cfg.depth_limit, cfg.node_cap)
        except UnknownSignal as exc:
            raise PipelineError("slice", f"unknown signal {exc}") from exc
        d = write_slice(s, out)
        print(d)
    return EXIT_OK


def cmd_gen(args) -> int:
    from .assertions import ExternalVerifier, Template, TokenLedger, generate_all, load_overview, make_client, write_records
    from .assertions.llm import LLMError

    cfg = _config(args)
    root = Path(args.slices)
    dirs = sorted(p for p in root.iterdir() if (p / "meta.json").is_file()) if root.is_dir() else []
    if (root / "meta.json").is_file():
        dirs = [root]
    if not dirs:
        raise ConfigError(f"no slices found under {root}")
    slices = [load_slice(d) for d in dirs]
    ledger = TokenLedger(cfg.run_token_budget)
    try:
        records = generate_all(
            slices,
            load_overview(cfg.overview),
            make_client(cfg.endpoint_config()),
            parallelism=cfg.parallelism,
            ledger=ledger,
            template=Template.load(cfg.template) if cfg.template else None,
            max_attempts=cfg.max_attempts,
            transport_retries=cfg.transport_retries,
            feedback=cfg.feedback,
            verifier=ExternalVerifier(cfg.verifier_command) if cfg.verifier_command else None,
            token_budget=cfg.prompt_token_budget,
        )
    except LLMError as exc:
        raise PipelineError("generate", exc) from exc
    report = write_records(records, ledger, args.output_dir or cfg.output_dir)
    print(json.dumps({k: report[k] for k in ("signals", "accepted", "skipped", "input_tokens", "output_tokens")}))
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        batch = load_batch(args.batch)
        values = normalized_metrics(batch)
    except (OSError, KeyError, ValueError, EmptyBatch) as exc:
        raise ConfigError(f"bad coverage batch {args.batch}: {exc}") from exc
    _emit(metrics_to_json(batch, values) if args.json else metrics_table(values), args.output)
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _config(args)
    res = run_pipeline(cfg)
    print(f"selected: {', '.join(r.qualified_name for r in res.selected)}")
    if res.report:
        print(f"assertions: {res.report['accepted']} accepted, {res.report['skipped']} skipped")
    print(f"artifacts in {res.out_dir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="keysig", description="Key-signal selection and targeted assertion generation for Verilog RTL.")
    p.add_argument("--version", action="version", version=f"keysig {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help, files=True, config=True):
        sp = sub.add_parser(name, help=help)
        if files:
            sp.add_argument("files", nargs="*", help="Verilog source files")
        if config:
            _add_config_flags(sp)
        sp.set_defaults(func=func)
        return sp

    sp = add("parse", cmd_parse, "parse sources and print a module summary")
    sp.add_argument("-o", "--output")
    sp = add("graph", cmd_graph, "build and export the semantic graph")
    sp.add_argument("--format", choices=("json", "dot"), default="json")
    sp.add_argument("-o", "--output")
    sp = add("rank", cmd_rank, "rank signals and select the top K")
    sp.add_argument("--graph", help="rank a previously exported graph JSON instead of sources")
    sp.add_argument("--table", action="store_true", help="print a text table instead of JSON")
    sp.add_argument("-o", "--output")
    sp = add("slice", cmd_slice, "extract backward slices for signals")
    sp.add_argument("--signal", action="append", help="qualified signal name (repeatable)")
    sp.add_argument("--ranking", help="slice every selected signal of a ranking JSON")
    sp.add_argument("-o", "--output-dir")
    sp = add("gen", cmd_gen, "generate assertions for written slices", files=False)
    sp.add_argument("slices", help="slices directory (or a single slice directory)")
    sp.add_argument("-o", "--output-dir")
    sp = add("report", cmd_report, "normalise a batch of coverage counts", files=False, config=False)
    sp.add_argument("batch", help="CSV (run,metric,covered,total) or JSON batch")
    sp.add_argument("--json", action="store_true")
    sp.add_argument("-o", "--output")
    sp = add("run", cmd_run, "run the full pipeline")
    sp.add_argument("-o", "--output-dir")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"keysig: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PipelineError as exc:
        print(f"keysig: {exc}", file=sys.stderr)
        if exc.stage == "config":
            return EXIT_CONFIG
        return EXIT_PARSE if exc.stage == "parse" else EXIT_PIPELINE
    except OSError as exc:
        print(f"keysig: {exc}", file=sys.stderr)
        return EXIT_PIPELINE


if __name__ == "__main__":
    sys.exit(main())
