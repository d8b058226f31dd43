"""Targeted assertion generation: prompts, transport, lint and retries."""

from .generate import AssertionRecord, Attempt, generate_all, generate_for_signal, run_report, write_records
from .llm import (
    AuthError,
    BudgetExceeded,
    EndpointConfig,
    HttpChatClient,
    LLMResponse,
    MockChatClient,
    TokenLedger,
    TransportError,
    make_client,
    request_assertions,
)
from .prompt import PromptBundle, Template, TemplateError, build_prompt, default_template, load_overview
from .sva import ExternalVerifier, LintContext, Verdict, extract_and_validate, extract_assertions, lint_assertion

__all__ = [
    "AssertionRecord",
    "Attempt",
    "AuthError",
    "BudgetExceeded",
    "EndpointConfig",
    "ExternalVerifier",
    "HttpChatClient",
    "LLMResponse",
    "LintContext",
    "MockChatClient",
    "PromptBundle",
    "Template",
    "TemplateError",
    "TokenLedger",
    "TransportError",
    "Verdict",
    "build_prompt",
    "default_template",
    "extract_and_validate",
    "extract_assertions",
    "generate_all",
    "generate_for_signal",
    "lint_assertion",
    "load_overview",
    "make_client",
    "request_assertions",
    "run_report",
    "write_records",
]
