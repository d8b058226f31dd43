"""Recursive-descent parser for a synthesizable Verilog subset.

Accepted: module declarations (ANSI and non-ANSI ports, ``#(...)`` parameter
lists), wire/reg/integer/parameter/localparam declarations, continuous
assignments, ``always`` blocks with edge, level or ``*`` sensitivity,
if/else, case/casex/casez, for loops, blocking and non-blocking assignments,
module instances with named or positional bindings, and the usual
expression operators. Generate blocks, functions, tasks, interfaces, gate
primitives and timing controls raise :class:`UnsupportedConstruct`.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Iterable

from . import ast as A
from .lexer import Tok, Token, tokenize
from .source import SourceFile, Span, UnsupportedConstruct, VerilogSyntaxError

DIRECTIONS = ("input", "output", "inout")
NET_TYPES = ("wire", "reg", "integer", "tri", "wand", "wor", "supply0", "supply1")

_UNSUPPORTED_ITEMS = {
    "generate": "generate blocks",
    "genvar": "genvar declarations",
    "function": "functions",
    "task": "tasks",
    "interface": "interfaces",
    "initial": "initial blocks",
    "specify": "specify blocks",
    "primitive": "user-defined primitives",
    "defparam": "defparam",
    "real": "real declarations",
    "realtime": "realtime declarations",
    "time": "time declarations",
    "event": "named events",
    "for": "module-level for (generate) loops",
    "if": "module-level if (generate) conditions",
    "case": "module-level case (generate) statements",
    "and": "gate primitives",
    "nand": "gate primitives",
    "or": "gate primitives",
    "nor": "gate primitives",
    "not": "gate primitives",
    "xor": "gate primitives",
    "xnor": "gate primitives",
    "buf": "gate primitives",
    "bufif0": "gate primitives",
    "bufif1": "gate primitives",
    "notif0": "gate primitives",
    "notif1": "gate primitives",
}

_UNSUPPORTED_STMTS = {
    "while": "while loops",
    "repeat": "repeat loops",
    "forever": "forever loops",
    "wait": "wait statements",
    "disable": "disable statements",
    "fork": "fork/join blocks",
    "force": "force statements",
    "release": "release statements",
    "deassign": "deassign statements",
    "assign": "procedural continuous assignments",
}

# binary operator precedence, loosest first
_BINARY_LEVELS: list[tuple[str, ...]] = [
    ("||",),
    ("&&",),
    ("|", "~|"),
    ("^", "^~", "~^"),
    ("&", "~&"),
    ("==", "!=", "===", "!=="),
    ("<", "<=", ">", ">="),
    ("<<", ">>", "<<<", ">>>"),
    ("+", "-"),
    ("*", "/", "%"),
    ("**",),
]
_UNARY_OPS = ("+", "-", "!", "~", "&", "~&", "|", "~|", "^", "~^", "^~")


class Parser:
    def __init__(self, tokens: list[Token], sources: dict[str, SourceFile]):
        self.toks = tokens
        self.pos = 0
        self.sources = sources

    # ---- token navigation ----

    @property
    def cur(self) -> Token:
        return self.toks[self.pos]

    def peek(self, offset: int = 1) -> Token:
        return self.toks[min(self.pos + offset, len(self.toks) - 1)]

    def advance(self) -> Token:
        tok = self.toks[self.pos]
        if tok.kind is not Tok.EOF:
            self.pos += 1
        return tok

    def error(self, msg: str, tok: Token | None = None) -> VerilogSyntaxError:
        tok = tok or self.cur
        got = "end of file" if tok.kind is Tok.EOF else repr(tok.value)
        return VerilogSyntaxError.at(tok.span, f"{msg} (got {got})")

    def unsupported(self, what: str, tok: Token | None = None) -> UnsupportedConstruct:
        return UnsupportedConstruct.at((tok or self.cur).span, f"unsupported construct: {what}")

    def expect_op(self, value: str) -> Token:
        if not self.cur.is_op(value):
            raise self.error(f"expected '{value}'")
        return self.advance()

    def expect_kw(self, value: str) -> Token:
        if not self.cur.is_kw(value):
            raise self.error(f"expected '{value}'")
        return self.advance()

    def accept_op(self, value: str) -> Token | None:
        if self.cur.is_op(value):
            return self.advance()
        return None

    def accept_kw(self, value: str) -> Token | None:
        if self.cur.is_kw(value):
            return self.advance()
        return None

    def ident(self) -> Token:
        if self.cur.kind is not Tok.IDENT:
            raise self.error("expected identifier")
        return self.advance()

    def span_from(self, start: Token) -> Span:
        end = self.toks[self.pos - 1] if self.pos > 0 else start
        if end.span.path != start.span.path or end.span.end < start.span.start:
            return start.span
        src = self.sources.get(start.span.path)
        if src is None:
            return Span(start.span.path, start.span.start, end.span.end, start.span.line, start.span.col)
        return src.span(start.span.start, end.span.end)

    def range_text(self) -> str | None:
        """Parse an optional ``[msb:lsb]`` and return its source text."""
        if not self.cur.is_op("["):
            return None
        start = self.advance()
        self.expression()
        self.expect_op(":")
        self.expression()
        self.expect_op("]")
        span = self.span_from(start)
        return self.sources[span.path].text[span.start:span.end] if span.path in self.sources else None

    # ---- design units ----

    def parse_file(self) -> list[A.ModuleDecl]:
        modules = []
        while self.cur.kind is not Tok.EOF:
            if self.cur.is_kw("module", "macromodule"):
                modules.append(self.module())
            elif self.cur.is_kw("interface", "primitive"):
                raise self.unsupported(_UNSUPPORTED_ITEMS[self.cur.value])
            else:
                raise self.error("expected 'module'")
        return modules

    def module(self) -> A.ModuleDecl:
        start = self.advance()
        name = self.ident().value
        header_params: list[A.ParamDecl] = []
        if self.accept_op("#"):
            self.expect_op("(")
            header_params = self.header_params()
            self.expect_op(")")
        ansi_ports: list[A.Port] = []
        port_names: list[str] = []
        ansi = True
        if self.accept_op("("):
            if not self.cur.is_op(")"):
                if self.cur.is_kw(*DIRECTIONS):
                    ansi_ports = self.ansi_ports()
                else:
                    ansi = False
                    port_names = self.port_name_list()
            self.expect_op(")")
        self.expect_op(";")
        header_span = self.span_from(start)

        items: list[A.Item] = []
        while not self.cur.is_kw("endmodule"):
            if self.cur.kind is Tok.EOF:
                raise self.error("missing 'endmodule'")
            items.extend(self.module_item())
        self.advance()
        span = self.span_from(start)

        if ansi:
            ports = tuple(ansi_ports)
            for item in items:
                if isinstance(item, A.PortDecl):
                    raise VerilogSyntaxError.at(
                        item.span, "port declaration in body of a module with an ANSI port list"
                    )
        else:
            ports = self.merge_ports(port_names, items, start)
        return A.ModuleDecl(name, ports, tuple(header_params), tuple(items), ansi, span, header_span)

    def merge_ports(self, names: list[str], items: list[A.Item], start: Token) -> tuple[A.Port, ...]:
        decls: dict[str, tuple[A.PortDecl, str]] = {}
        net_types: dict[str, str] = {}
        for item in items:
            if isinstance(item, A.PortDecl):
                for n in item.names:
                    if n not in names:
                        raise VerilogSyntaxError.at(item.span, f"'{n}' is not in the module port list")
                    decls[n] = (item, n)
            elif isinstance(item, A.NetDecl):
                for n in item.names:
                    net_types.setdefault(n, item.kind)
        ports = []
        for n in names:
            if n not in decls:
                raise VerilogSyntaxError.at(start.span, f"port '{n}' has no direction declaration")
            decl, _ = decls[n]
            ports.append(A.Port(n, decl.direction, decl.net_type or net_types.get(n), decl.width, decl.span))
        return tuple(ports)

    def port_name_list(self) -> list[str]:
        names = [self.ident().value]
        while self.accept_op(","):
            names.append(self.ident().value)
        if self.cur.is_op(".", "["):
            raise self.unsupported("port expressions in non-ANSI port lists")
        return names

    def ansi_ports(self) -> list[A.Port]:
        ports: list[A.Port] = []
        direction = net_type = width = None
        while True:
            start = self.cur
            if self.cur.is_kw(*DIRECTIONS):
                direction = self.advance().value
                net_type = None
                if self.cur.is_kw(*NET_TYPES):
                    net_type = self.advance().value
                self.accept_kw("signed")
                width = self.range_text()
            elif direction is None:
                raise self.error("expected port direction")
            name = self.ident().value
            ports.append(A.Port(name, direction, net_type, width, self.span_from(start)))
            if not self.accept_op(","):
                break
        return ports

    def header_params(self) -> list[A.ParamDecl]:
        decls: list[A.ParamDecl] = []
        kind, width = "parameter", None
        while True:
            start = self.cur
            if self.cur.is_kw("parameter", "localparam"):
                kind = self.advance().value
                self.accept_kw("signed")
                self.accept_kw("integer")
                width = self.range_text()
            name = self.ident().value
            self.expect_op("=")
            value = self.expression()
            decls.append(A.ParamDecl(kind, width, ((name, value),), self.span_from(start)))
            if not self.accept_op(","):
                break
        return decls

    # ---- module items ----

    def module_item(self) -> list[A.Item]:
        tok = self.cur
        if tok.is_kw(*DIRECTIONS):
            return [self.port_decl()]
        if tok.is_kw(*NET_TYPES):
            return [self.net_decl()]
        if tok.is_kw("parameter", "localparam"):
            return [self.param_decl()]
        if tok.is_kw("assign"):
            return [self.cont_assign()]
        if tok.is_kw("always"):
            return [self.always()]
        if tok.kind is Tok.KEYWORD and tok.value in _UNSUPPORTED_ITEMS:
            raise self.unsupported(_UNSUPPORTED_ITEMS[tok.value])
        if tok.kind is Tok.IDENT:
            return [self.instance()]
        if tok.is_kw("module"):
            raise self.error("nested module declaration; missing 'endmodule'?")
        raise self.error("expected module item")

    def port_decl(self) -> A.PortDecl:
        start = self.advance()
        net_type = None
        if self.cur.is_kw(*NET_TYPES):
            net_type = self.advance().value
        signed = bool(self.accept_kw("signed"))
        width = self.range_text()
        names = [self.ident().value]
        while self.accept_op(","):
            names.append(self.ident().value)
        self.expect_op(";")
        return A.PortDecl(start.value, net_type, signed, width, tuple(names), self.span_from(start))

    def net_decl(self) -> A.NetDecl:
        start = self.advance()
        signed = bool(self.accept_kw("signed"))
        width = self.range_text()
        names: list[str] = []
        inits: list[tuple[str, A.Expr]] = []
        while True:
            name = self.ident().value
            names.append(name)
            while self.cur.is_op("["):
                self.range_text()  # unpacked array dimension
            if self.accept_op("="):
                inits.append((name, self.expression()))
            if not self.accept_op(","):
                break
        self.expect_op(";")
        return A.NetDecl(start.value, signed, width, tuple(names), tuple(inits), self.span_from(start))

    def param_decl(self) -> A.ParamDecl:
        start = self.advance()
        self.accept_kw("signed")
        self.accept_kw("integer")
        width = self.range_text()
        assigns = []
        while True:
            name = self.ident().value
            self.expect_op("=")
            assigns.append((name, self.expression()))
            if not self.accept_op(","):
                break
        self.expect_op(";")
        return A.ParamDecl(start.value, width, tuple(assigns), self.span_from(start))

    def cont_assign(self) -> A.ContAssign:
        start = self.advance()
        if self.cur.is_op("#"):
            raise self.unsupported("delays")
        pairs = []
        while True:
            lhs = self.lvalue()
            self.expect_op("=")
            pairs.append((lhs, self.expression()))
            if not self.accept_op(","):
                break
        self.expect_op(";")
        return A.ContAssign(tuple(pairs), self.span_from(start))

    def always(self) -> A.Always:
        start = self.advance()
        if not self.accept_op("@"):
            raise self.unsupported("always blocks without an event control")
        star = False
        items: list[A.SensItem] = []
        if self.accept_op("*"):
            star = True
        else:
            self.expect_op("(")
            if self.cur.is_op("*") and self.peek().is_op(")"):
                self.advance()
                star = True
            else:
                while True:
                    edge = None
                    if self.cur.is_kw("posedge", "negedge"):
                        edge = self.advance().value
                    items.append(A.SensItem(edge, self.expression()))
                    if not (self.accept_kw("or") or self.accept_op(",")):
                        break
            self.expect_op(")")
        body = self.statement()
        return A.Always(star, tuple(items), body, self.span_from(start))

    def instance(self) -> A.Instance:
        start = self.advance()
        params: list[A.PortConn] = []
        if self.accept_op("#"):
            self.expect_op("(")
            params = self.bindings()
            self.expect_op(")")
        name = self.ident().value
        if self.cur.is_op("["):
            raise self.unsupported("instance arrays")
        self.expect_op("(")
        conns = self.bindings()
        self.expect_op(")")
        if self.cur.is_op(","):
            raise self.unsupported("multiple instances in one statement")
        self.expect_op(";")
        return A.Instance(start.value, name, tuple(params), tuple(conns), self.span_from(start))

    def bindings(self) -> list[A.PortConn]:
        if self.cur.is_op(")"):
            return []
        conns = []
        while True:
            start = self.cur
            if self.accept_op("."):
                if self.cur.is_op("*"):
                    raise self.unsupported("wildcard port connections")
                port = self.ident().value
                if not self.cur.is_op("("):
                    raise self.unsupported("implicit named port connections")
                self.advance()
                expr = None if self.cur.is_op(")") else self.expression()
                self.expect_op(")")
                conns.append(A.PortConn(port, expr, self.span_from(start)))
            else:
                expr = None if self.cur.is_op(",", ")") else self.expression()
                conns.append(A.PortConn(None, expr, self.span_from(start)))
            if not self.accept_op(","):
                break
        if len({c.port is None for c in conns}) > 1:
            raise VerilogSyntaxError.at(start.span, "mixed named and positional bindings")
        return conns

    # ---- statements ----

    def statement(self) -> A.Stmt:
        tok = self.cur
        if tok.is_kw("begin"):
            return self.block()
        if tok.is_kw("if"):
            return self.if_stmt()
        if tok.is_kw("case", "casex", "casez"):
            return self.case_stmt()
        if tok.is_kw("for"):
            return self.for_stmt()
        if tok.is_op(";"):
            self.advance()
            return A.NullStmt(tok.span)
        if tok.kind is Tok.SYSID:
            return self.sys_task()
        if tok.is_op("#"):
            raise self.unsupported("delay controls")
        if tok.is_op("@"):
            raise self.unsupported("event controls inside statements")
        if tok.kind is Tok.KEYWORD and tok.value in _UNSUPPORTED_STMTS:
            raise self.unsupported(_UNSUPPORTED_STMTS[tok.value])
        if tok.kind is Tok.KEYWORD and tok.value in NET_TYPES + ("parameter", "localparam"):
            raise self.unsupported("declarations inside procedural blocks")
        if tok.kind is Tok.IDENT and self.peek().is_op("(", ";"):
            raise self.unsupported("task calls")
        if tok.kind is Tok.IDENT or tok.is_op("{"):
            stmt = self.assignment()
            self.expect_op(";")
            return A.ProcAssign(stmt.lhs, stmt.rhs, stmt.nonblocking, self.span_from(tok))
        raise self.error("expected statement")

    def assignment(self) -> A.ProcAssign:
        start = self.cur
        lhs = self.lvalue()
        if self.accept_op("="):
            nonblocking = False
        elif self.accept_op("<="):
            nonblocking = True
        else:
            raise self.error("expected '=' or '<='")
        if self.cur.is_op("#", "@"):
            raise self.unsupported("intra-assignment timing controls")
        rhs = self.expression()
        return A.ProcAssign(lhs, rhs, nonblocking, self.span_from(start))

    def block(self) -> A.Block:
        start = self.advance()
        name = None
        if self.accept_op(":"):
            name = self.ident().value
        stmts = []
        while not self.cur.is_kw("end"):
            if self.cur.kind is Tok.EOF:
                raise self.error("missing 'end'")
            stmts.append(self.statement())
        self.advance()
        if name is not None and self.accept_op(":"):
            self.ident()
        return A.Block(tuple(stmts), name, self.span_from(start))

    def if_stmt(self) -> A.If:
        start = self.advance()
        self.expect_op("(")
        cond = self.expression()
        self.expect_op(")")
        then = self.statement()
        other = None
        if self.accept_kw("else"):
            other = self.statement()
        return A.If(cond, then, other, self.span_from(start))

    def case_stmt(self) -> A.Case:
        start = self.advance()
        self.expect_op("(")
        subject = self.expression()
        self.expect_op(")")
        items = []
        while not self.cur.is_kw("endcase"):
            if self.cur.kind is Tok.EOF:
                raise self.error("missing 'endcase'")
            istart = self.cur
            if self.accept_kw("default"):
                self.accept_op(":")
                labels: tuple[A.Expr, ...] = ()
            else:
                labs = [self.expression()]
                while self.accept_op(","):
                    labs.append(self.expression())
                self.expect_op(":")
                labels = tuple(labs)
            body = self.statement()
            items.append(A.CaseItem(labels, body, self.span_from(istart)))
        self.advance()
        return A.Case(start.value, subject, tuple(items), self.span_from(start))

    def for_stmt(self) -> A.For:
        start = self.advance()
        self.expect_op("(")
        init = self.assignment()
        self.expect_op(";")
        cond = self.expression()
        self.expect_op(";")
        step = self.assignment()
        self.expect_op(")")
        body = self.statement()
        return A.For(init, cond, step, body, self.span_from(start))

    def sys_task(self) -> A.SysTask:
        start = self.advance()
        args: list[A.Expr] = []
        if self.accept_op("("):
            if not self.cur.is_op(")"):
                args.append(self.expression())
                while self.accept_op(","):
                    args.append(self.expression())
            self.expect_op(")")
        self.expect_op(";")
        return A.SysTask(start.value, tuple(args), self.span_from(start))

    # ---- expressions ----

    def lvalue(self) -> A.Expr:
        start = self.cur
        if self.cur.is_op("{"):
            self.advance()
            items = [self.lvalue()]
            while self.accept_op(","):
                items.append(self.lvalue())
            self.expect_op("}")
            return A.Concat(tuple(items), self.span_from(start))
        tok = self.ident()
        if self.cur.is_op("."):
            raise self.unsupported("hierarchical references")
        return self.selects(A.Ident(tok.value, tok.span), start)

    def selects(self, base: A.Expr, start: Token) -> A.Expr:
        while self.accept_op("["):
            first = self.expression()
            if self.cur.is_op(":", "+:", "-:"):
                mode = self.advance().value
                second = self.expression()
                self.expect_op("]")
                base = A.PartSelect(base, first, second, mode, self.span_from(start))
            else:
                self.expect_op("]")
                base = A.Index(base, first, self.span_from(start))
        return base

    def expression(self) -> A.Expr:
        start = self.cur
        cond = self.binary(0)
        if self.accept_op("?"):
            then = self.expression()
            self.expect_op(":")
            other = self.expression()
            return A.Ternary(cond, then, other, self.span_from(start))
        return cond

    def binary(self, level: int) -> A.Expr:
        if level == len(_BINARY_LEVELS):
            return self.unary()
        start = self.cur
        lhs = self.binary(level + 1)
        ops = _BINARY_LEVELS[level]
        while self.cur.kind is Tok.OP and self.cur.value in ops:
            op = self.advance().value
            # ** is right-associative
            rhs = self.binary(level if op == "**" else level + 1)
            lhs = A.Binary(op, lhs, rhs, self.span_from(start))
        return lhs

    def unary(self) -> A.Expr:
        start = self.cur
        if self.cur.kind is Tok.OP and self.cur.value in _UNARY_OPS:
            op = self.advance().value
            return A.Unary(op, self.unary(), self.span_from(start))
        return self.primary()

    def primary(self) -> A.Expr:
        tok = self.cur
        if tok.kind is Tok.NUMBER:
            self.advance()
            return A.Number(tok.value, tok.span)
        if tok.kind is Tok.STRING:
            self.advance()
            return A.String(tok.value, tok.span)
        if tok.kind is Tok.IDENT:
            self.advance()
            if self.cur.is_op("("):
                raise self.unsupported("function calls", tok)
            if self.cur.is_op(".") and self.peek().kind is Tok.IDENT:
                raise self.unsupported("hierarchical references", tok)
            return self.selects(A.Ident(tok.value, tok.span), tok)
        if tok.kind is Tok.SYSID:
            self.advance()
            args: list[A.Expr] = []
            if self.accept_op("("):
                if not self.cur.is_op(")"):
                    args.append(self.expression())
                    while self.accept_op(","):
                        args.append(self.expression())
                self.expect_op(")")
            return A.SysCall(tok.value, tuple(args), self.span_from(tok))
        if tok.is_op("("):
            self.advance()
            inner = self.expression()
            self.expect_op(")")
            return inner
        if tok.is_op("{"):
            self.advance()
            first = self.expression()
            if self.cur.is_op("{"):
                # replication {n{...}}
                self.advance()
                items = [self.expression()]
                while self.accept_op(","):
                    items.append(self.expression())
                self.expect_op("}")
                self.expect_op("}")
                return self.selects(A.Repeat(first, tuple(items), self.span_from(tok)), tok)
            items = [first]
            while self.accept_op(","):
                items.append(self.expression())
            self.expect_op("}")
            return self.selects(A.Concat(tuple(items), self.span_from(tok)), tok)
        raise self.error("expected expression")


# --------------------------------------------------------------------------
# entry points
# --------------------------------------------------------------------------


def _parse_one(source: SourceFile) -> tuple[list[A.ModuleDecl], list[SourceFile]]:
    loaded: list[SourceFile] = []
    tokens = tokenize(source, loaded=loaded)
    table = {source.path: source}
    table.update({s.path: s for s in loaded})
    return Parser(tokens, table).parse_file(), loaded


def parse_sources(files: Iterable[SourceFile], *, workers: int = 1) -> A.Ast:
    """Parse every file and merge the modules into one :class:`Ast`.

    Raises the first :class:`VerilogSyntaxError` or
    :class:`UnsupportedConstruct` in file order.
    """
    files = list(files)
    if not files:
        raise ValueError("parse_sources needs at least one source file")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_parse_one, files))
    else:
        results = [_parse_one(f) for f in files]
    modules: list[A.ModuleDecl] = []
    sources: list[SourceFile] = []
    seen: dict[str, A.ModuleDecl] = {}
    for f, (mods, loaded) in zip(files, results):
        sources.append(f)
        sources.extend(s for s in loaded if s.path not in {x.path for x in sources})
        for m in mods:
            if m.name in seen:
                raise VerilogSyntaxError.at(m.span, f"duplicate module '{m.name}'")
            seen[m.name] = m
            modules.append(m)
    return A.Ast(tuple(modules), tuple(sources))


def parse_text(text: str, path: str = "<string>") -> A.Ast:
    return parse_sources([SourceFile(path, text)])


def _fragment_parser(text: str, path: str) -> Parser:
    source = SourceFile(path, text)
    return Parser(tokenize(source), {path: source})


def parse_statement(text: str, path: str = "<fragment>") -> A.Stmt:
    """Parse exactly one procedural statement."""
    p = _fragment_parser(text, path)
    stmt = p.statement()
    if p.cur.kind is not Tok.EOF:
        raise p.error("trailing input after statement")
    return stmt


def parse_item(text: str, path: str = "<fragment>") -> A.Item:
    """Parse exactly one module item (declaration, assign, always, instance)."""
    p = _fragment_parser(text, path)
    items = p.module_item()
    if p.cur.kind is not Tok.EOF:
        raise p.error("trailing input after module item")
    return items[0]
