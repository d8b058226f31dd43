"""Verilog frontend: lexer, parser, AST and module hierarchy."""

from .ast import Ast, ModuleDecl
from .hierarchy import AUTO, Hierarchy, check_references, resolve_hierarchy
from .parser import parse_item, parse_sources, parse_statement, parse_text
from .source import (
    AmbiguousTop,
    CyclicInstantiation,
    Diagnostic,
    FrontendError,
    HierarchyError,
    SourceFile,
    Span,
    UnresolvedModule,
    UnsupportedConstruct,
    VerilogSyntaxError,
)

__all__ = [
    "AUTO",
    "AmbiguousTop",
    "Ast",
    "CyclicInstantiation",
    "Diagnostic",
    "FrontendError",
    "Hierarchy",
    "HierarchyError",
    "ModuleDecl",
    "SourceFile",
    "Span",
    "UnresolvedModule",
    "UnsupportedConstruct",
    "VerilogSyntaxError",
    "check_references",
    "parse_item",
    "parse_sources",
    "parse_statement",
    "parse_text",
    "resolve_hierarchy",
]
