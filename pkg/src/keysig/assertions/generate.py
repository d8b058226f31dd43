"""Per-signal generation loop with the bounded retry protocol."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from ..slicing import RtlSlice, safe_name
from .llm import BudgetExceeded, ChatClient, TokenLedger, TransportError, request_assertions
from .prompt import PromptBundle, Template, build_prompt
from .sva import ExternalVerifier, Verdict, extract_and_validate

log = logging.getLogger(__name__)

RECORD_SCHEMA = "keysig-assertions/1"
REPORT_SCHEMA = "keysig-run/1"
ACCEPTED = "Accepted"
SKIPPED = "Skipped"


@dataclass
class Attempt:
    number: int
    prompt_hash: str
    response: str
    assertions: list[tuple[str, Verdict]]
    input_tokens: int = 0
    output_tokens: int = 0
    transport_failures: int = 0

    def to_dict(self) -> dict:
        return {
            "attempt": self.number,
            "prompt_hash": self.prompt_hash,
            "response": self.response,
            "assertions": [{"text": t, "verdict": str(v), **v.to_dict()} for t, v in self.assertions],
            "input_tokens": self.input_tokens,
            "output_tokens": self.output_tokens,
            "transport_failures": self.transport_failures,
        }


@dataclass
class AssertionRecord:
    signal: str
    cls: str
    chain: str
    attempts: list[Attempt] = field(default_factory=list)
    status: str = SKIPPED
    accepted: list[str] = field(default_factory=list)
    note: str | None = None

    @property
    def input_tokens(self) -> int:
        return sum(a.input_tokens for a in self.attempts)

    @property
    def output_tokens(self) -> int:
        return sum(a.output_tokens for a in self.attempts)

    def to_dict(self) -> dict:
        return {
            "schema": RECORD_SCHEMA,
            "signal": self.signal,
            "class": self.cls,
            "chain": self.chain,
            "status": self.status,
            "accepted": self.accepted,
            "attempt_count": len(self.attempts),
            "attempts": [a.to_dict() for a in self.attempts],
            "note": self.note,
        }


def _failure_summary(results: list[tuple[str, Verdict]]) -> str:
    if not results:
        return "- no `assert property` statement could be extracted from the answer"
    return "\n".join(f"- {text[:120]}: {v.reason}" for text, v in results if not v.passed)


def generate_for_signal(
    slice: RtlSlice,
    overview: str | None,
    client: ChatClient,
    *,
    template: Template | None = None,
    ledger: TokenLedger | None = None,
    max_attempts: int = 3,
    transport_retries: int = 2,
    feedback: bool = False,
    verifier: ExternalVerifier | None = None,
    token_budget: int | None = None,
) -> AssertionRecord:
    """Prompt, request and validate until an attempt yields a passing assertion.

    Transport failures are retried up to ``transport_retries`` times per
    attempt and never count as attempts; after that the error propagates.
    """
    record = AssertionRecord(slice.root, slice.root_class, slice.chain)
    previous: str | None = None
    for number in range(1, max_attempts + 1):
        bundle: PromptBundle = build_prompt(
            slice, overview, template, token_budget=token_budget, feedback=previous if feedback else None
        )
        failures = 0
        while True:
            try:
                response = request_assertions(bundle, client, ledger, number)
                break
            except TransportError as exc:
                failures += 1
                log.warning("%s attempt %d: transport failure %d: %s", slice.root, number, failures, exc)
                if failures > transport_retries:
                    raise
        results = extract_and_validate(response.text, slice, verifier)
        record.attempts.append(
            Attempt(
                number,
                bundle.prompt_hash,
                response.text,
                results,
                response.input_tokens,
                response.output_tokens,
                failures,
            )
        )
        passing = [t for t, v in results if v.passed]
        if passing:
            record.status = ACCEPTED
            record.accepted = passing
            return record
        previous = _failure_summary(results)
    record.status = SKIPPED
    return record


def generate_all(
    slices: list[RtlSlice],
    overview: str | None,
    client: ChatClient,
    *,
    parallelism: int = 1,
    ledger: TokenLedger | None = None,
    **kwargs,
) -> list[AssertionRecord]:
    """Run :func:`generate_for_signal` for every slice, preserving input order.

    A signal whose prompt would overrun the run budget, or whose transport
    retries ran out, is recorded as skipped with a note.
    """

    def one(s: RtlSlice) -> AssertionRecord:
        try:
            return generate_for_signal(s, overview, client, ledger=ledger, **kwargs)
        except BudgetExceeded as exc:
            return AssertionRecord(s.root, s.root_class, s.chain, note=f"budget exceeded: {exc}")
        except TransportError as exc:
            return AssertionRecord(s.root, s.root_class, s.chain, note=f"transport failure: {exc}")

    if parallelism <= 1:
        return [one(s) for s in slices]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(one, slices))


def run_report(records: list[AssertionRecord], ledger: TokenLedger) -> dict:
    return {
        "schema": REPORT_SCHEMA,
        "signals": len(records),
        "accepted": sum(r.status == ACCEPTED for r in records),
        "skipped": sum(r.status == SKIPPED for r in records),
        "input_tokens": ledger.input_tokens,
        "output_tokens": ledger.output_tokens,
        "requests": len(ledger.requests),
        "per_signal": [
            {
                "signal": r.signal,
                "status": r.status,
                "attempts": len(r.attempts),
                "accepted_assertions": len(r.accepted),
                "input_tokens": r.input_tokens,
                "output_tokens": r.output_tokens,
            }
            for r in records
        ],
    }


def write_records(records: list[AssertionRecord], ledger: TokenLedger, out_dir: str | Path) -> dict:
    out = Path(out_dir)
    (out / "assertions").mkdir(parents=True, exist_ok=True)
    for r in records:
        (out / "assertions" / f"{safe_name(r.signal)}.json").write_text(json.dumps(r.to_dict(), indent=2) + "\n")
    report = run_report(records, ledger)
    (out / "run_report.json").write_text(json.dumps(report, indent=2) + "\n")
    return report
