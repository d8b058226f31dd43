"""End-to-end orchestration: parse, graph, rank, slice and (optionally) generate."""

from __future__ import annotations

import json
import logging
import shutil
from dataclasses import dataclass, field
from pathlib import Path

from .assertions import (
    AssertionRecord,
    ExternalVerifier,
    Template,
    TemplateError,
    TokenLedger,
    generate_all,
    load_overview,
    make_client,
    write_records,
)
from .assertions.llm import LLMError
from .config import ConfigError, RunConfig
from .frontend import Ast, FrontendError, Hierarchy, HierarchyError, SourceFile, parse_sources, resolve_hierarchy
from .graph import SemanticGraph, build_graph, export_graph
from .ranking import EmptyGraph, RankedSignal, rank_graph, ranking_table_text, ranking_to_json
from .slicing import RtlSlice, SpanMismatch, slice_signal, write_slice

log = logging.getLogger(__name__)

STAGES = ("parse", "graph", "rank", "slice", "generate")


class PipelineError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException | str):
        self.stage = stage
        self.cause = cause
        super().__init__(f"{stage} stage failed: {cause}")


@dataclass
class PipelineResult:
    out_dir: Path
    ast: Ast
    hierarchy: Hierarchy
    graph: SemanticGraph
    filtered: SemanticGraph
    ranking: list[RankedSignal]
    slices: list[RtlSlice] = field(default_factory=list)
    records: list[AssertionRecord] = field(default_factory=list)
    report: dict | None = None

    @property
    def selected(self) -> list[RankedSignal]:
        return [r for r in self.ranking if r.selected]


def parse_design(paths: list[str], top: str = "auto") -> tuple[Ast, Hierarchy]:
    if not paths:
        raise PipelineError("parse", "no source files given")
    try:
        files = [SourceFile.load(p) for p in paths]
    except (OSError, ValueError) as exc:
        raise PipelineError("parse", exc) from exc
    try:
        ast = parse_sources(files)
        return ast, resolve_hierarchy(ast, top)
    except (FrontendError, HierarchyError) as exc:
        raise PipelineError("parse", exc) from exc


def _write(path: Path, data: bytes | str) -> None:
    if isinstance(data, str):
        data = data.encode()
    path.write_bytes(data)


def run_pipeline(cfg: RunConfig, client=None) -> PipelineResult:
    """Run every stage and write its artifacts under ``cfg.output_dir``.

    Artifacts of completed stages stay on disk when a later stage fails.
    ``client`` overrides the endpoint configured in ``cfg`` (used for tests).
    """
    try:
        cfg.validate()
    except ConfigError as exc:
        raise PipelineError("config", exc) from exc
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg.dump(out / "config.json")

    ast, hierarchy = parse_design(cfg.sources, cfg.top)

    graph = build_graph(ast, hierarchy)
    for d in graph.diagnostics:
        log.warning("%s", d)
    _write(out / "graph.json", export_graph(graph, "json"))
    _write(out / "graph.dot", export_graph(graph, "dot"))

    rank_cfg = cfg.rank_config()
    try:
        filtered, table = rank_graph(graph, rank_cfg)
    except EmptyGraph as exc:
        raise PipelineError("rank", exc) from exc
    _write(out / "ranking.json", ranking_to_json(table, rank_cfg))
    _write(out / "ranking.txt", ranking_table_text(table))

    slice_dir = out / "slices"
    if slice_dir.exists():
        shutil.rmtree(slice_dir)
    slices = []
    for r in table:
        if not r.selected:
            continue
        try:
            s = slice_signal(graph, ast, hierarchy, r.qualified_name, cfg.depth_limit, cfg.node_cap)
        except SpanMismatch as exc:
            raise PipelineError("slice", exc) from exc
        write_slice(s, slice_dir)
        slices.append(s)
    result = PipelineResult(out, ast, hierarchy, graph, filtered, table, slices)

    if not cfg.generate:
        return result
    try:
        template = Template.load(cfg.template) if cfg.template else None
        overview = load_overview(cfg.overview)
    except (OSError, TemplateError) as exc:
        raise PipelineError("generate", exc) from exc
    if (out / "assertions").exists():
        shutil.rmtree(out / "assertions")
    client = client or make_client(cfg.endpoint_config())
    ledger = TokenLedger(cfg.run_token_budget)
    try:
        records = generate_all(
            slices,
            overview,
            client,
            parallelism=cfg.parallelism,
            ledger=ledger,
            template=template,
            max_attempts=cfg.max_attempts,
            transport_retries=cfg.transport_retries,
            feedback=cfg.feedback,
            verifier=ExternalVerifier(cfg.verifier_command) if cfg.verifier_command else None,
            token_budget=cfg.prompt_token_budget,
        )
    except LLMError as exc:
        raise PipelineError("generate", exc) from exc
    result.records = records
    result.report = write_records(records, ledger, out)
    log.info("run report: %s", json.dumps({k: result.report[k] for k in ("signals", "accepted", "skipped")}))
    return result
