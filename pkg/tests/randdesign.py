"""Random multi-module Verilog designs with independently derived edge sets.

The generator builds a small structural description first, renders it to
Verilog text, and derives the expected (src, dst, kind) triples from the
description itself, rule by rule, without touching the package parser.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

BINOPS = ["+", "-", "&", "|", "^", "==", "!=", "<", "&&", "||", "<<"]
UNOPS = ["~", "!", "&", "|", "^", "-"]


@dataclass
class ModSpec:
    name: str
    inputs: list[str] = field(default_factory=list)
    out_wires: list[str] = field(default_factory=list)
    out_regs: list[str] = field(default_factory=list)
    wires: list[str] = field(default_factory=list)
    regs: list[str] = field(default_factory=list)
    params: list[str] = field(default_factory=list)
    lines: list[str] = field(default_factory=list)

    @property
    def ports(self) -> list[tuple[str, str]]:
        return (
            [("input", "clk")]
            + [("input", n) for n in self.inputs]
            + [("output", n) for n in self.out_wires]
            + [("output", n) for n in self.out_regs]
        )

    @property
    def readable(self) -> list[str]:
        return self.inputs + self.out_wires + self.out_regs + self.wires + self.regs + self.params


@dataclass
class RandomDesign:
    sources: dict[str, str]
    expected: set[tuple[str, str, str]]
    modules: list[ModSpec]
    signal_count: int


class _Gen:
    def __init__(self, rng: random.Random):
        self.rng = rng
        self.expected: set[tuple[str, str, str]] = set()

    def edge(self, mod: str, src: str, dst: str, kind: str, dst_mod: str | None = None, src_mod: str | None = None):
        self.expected.add((f"{src_mod or mod}.{src}", f"{dst_mod or mod}.{dst}", kind))

    # expressions return (text, idents read)
    def expr(self, pool: list[str], depth: int = 0) -> tuple[str, set[str]]:
        r = self.rng
        choice = r.random()
        if depth >= 2 or choice < 0.3:
            if r.random() < 0.15 or not pool:
                return str(r.randint(0, 9)), set()
            n = r.choice(pool)
            sel = r.random()
            if sel < 0.1:
                return f"{n}[0]", {n}
            if sel < 0.15:
                return f"{n}[1:0]", {n}
            return n, {n}
        if choice < 0.45:
            t, i = self.expr(pool, depth + 1)
            return f"{r.choice(UNOPS)}({t})", i
        if choice < 0.75:
            a, ia = self.expr(pool, depth + 1)
            b, ib = self.expr(pool, depth + 1)
            return f"({a} {r.choice(BINOPS)} {b})", ia | ib
        if choice < 0.85:
            c, ic = self.expr(pool, depth + 1)
            a, ia = self.expr(pool, depth + 1)
            b, ib = self.expr(pool, depth + 1)
            return f"({c} ? {a} : {b})", ic | ia | ib
        if choice < 0.95:
            a, ia = self.expr(pool, depth + 1)
            b, ib = self.expr(pool, depth + 1)
            return "{" + f"{a}, {b}" + "}", ia | ib
        a, ia = self.expr(pool, depth + 1)
        return "{2{" + a + "}}", ia

    def stmt(
        self,
        m: ModSpec,
        targets: list[str],
        guards: set[str],
        kind: str,
        op: str,
        indent: str,
        depth: int = 0,
    ) -> list[str]:
        r = self.rng
        pick = r.random()
        if depth >= 3 or pick < 0.4:
            t = r.choice(targets)
            text, reads = self.expr(m.readable)
            for s in reads:
                self.edge(m.name, s, t, kind)
            for g in guards:
                self.edge(m.name, g, t, "control")
            return [f"{indent}{t} {op} {text};"]
        if pick < 0.65:
            cond, ci = self.expr(m.readable, 1)
            out = [f"{indent}if ({cond}) begin"]
            out += self.stmt(m, targets, guards | ci, kind, op, indent + "    ", depth + 1)
            if r.random() < 0.6:
                out.append(f"{indent}end else begin")
                out += self.stmt(m, targets, guards | ci, kind, op, indent + "    ", depth + 1)
            out.append(f"{indent}end")
            return out
        if pick < 0.8:
            subj, si = self.expr(m.readable, 2)
            labels_used: set[str] = set()
            out = [f"{indent}case ({subj})"]
            items = []
            for k in range(r.randint(1, 3)):
                if m.params and r.random() < 0.4:
                    lab = r.choice(m.params)
                    labels_used.add(lab)
                else:
                    lab = str(k)
                items.append(lab)
            g2 = guards | si | labels_used
            for lab in items:
                out.append(f"{indent}    {lab}: begin")
                out += self.stmt(m, targets, g2, kind, op, indent + "        ", depth + 1)
                out.append(f"{indent}    end")
            if r.random() < 0.5:
                out.append(f"{indent}    default: begin")
                out += self.stmt(m, targets, g2, kind, op, indent + "        ", depth + 1)
                out.append(f"{indent}    end")
            out.append(f"{indent}endcase")
            return out
        out = [f"{indent}begin"]
        for _ in range(r.randint(1, 3)):
            out += self.stmt(m, targets, guards, kind, op, indent + "    ", depth + 1)
        out.append(f"{indent}end")
        return out


def random_design(seed: int, max_modules: int = 5, max_signals: int = 40) -> RandomDesign:
    rng = random.Random(seed)
    gen = _Gen(rng)
    n_mod = rng.randint(1, max_modules)
    budget = max_signals - n_mod  # clk in every module
    per_mod = max(3, budget // n_mod)
    mods: list[ModSpec] = []
    for i in range(n_mod):
        m = ModSpec(f"rm{seed}_{i}")
        left = per_mod
        def take(prefix: str, lo: int, hi: int) -> list[str]:
            nonlocal left
            n = max(0, min(rng.randint(lo, hi), left))
            left -= n
            return [f"{prefix}{j}" for j in range(n)]
        m.inputs = take("in", 1, 3)
        m.out_wires = take("ow", 1, 2)
        m.out_regs = take("or", 0, 2)
        m.params = take("P", 0, 2)
        m.wires = take("w", 0, 3)
        m.regs = take("r", 0, 3)
        mods.append(m)

    # each non-top module gets at least one parent with a lower index
    instances: dict[int, list[int]] = {i: [] for i in range(n_mod)}
    for j in range(1, n_mod):
        instances[rng.randrange(j)].append(j)
        if rng.random() < 0.3:
            instances[rng.randrange(j)].append(j)

    for i, m in enumerate(mods):
        body: list[str] = []
        for idx, p in enumerate(m.params):
            body.append(f"    localparam {p} = {idx + 1};")
        for w in m.wires:
            body.append(f"    wire [3:0] {w};")
        for r_ in m.regs:
            body.append(f"    reg [3:0] {r_};")

        # child outputs may drive some parent wires; the rest get assigns
        wire_drivers = list(m.wires + m.out_wires)
        rng.shuffle(wire_drivers)
        for k, c in enumerate(instances[i]):
            child = mods[c]
            conns = []
            for direction, port in child.ports:
                if direction == "input":
                    if port == "clk":
                        conns.append((port, "clk", {"clk"}))
                    else:
                        text, reads = gen.expr(m.readable + ["clk"], 1)
                        conns.append((port, text, reads))
                        for s in reads:
                            gen.edge(m.name, s, port, "module", dst_mod=child.name)
                else:
                    if wire_drivers and rng.random() < 0.7:
                        tgt = wire_drivers.pop()
                        conns.append((port, tgt, set()))
                        gen.edge(child.name, port, tgt, "module", dst_mod=m.name)
                    else:
                        conns.append((port, "", set()))
            # clk -> clk module edge
            gen.edge(m.name, "clk", "clk", "module", dst_mod=child.name)
            if rng.random() < 0.25 and all(t for _, t, _ in conns):
                body.append(f"    {child.name} u{k} ({', '.join(t for _, t, _ in conns)});")
            else:
                body.append(f"    {child.name} u{k} (" + ", ".join(f".{p}({t})" for p, t, _ in conns) + ");")

        # continuous assigns for the remaining wires
        while wire_drivers:
            if len(wire_drivers) >= 2 and rng.random() < 0.2:
                a, b = wire_drivers.pop(), wire_drivers.pop()
                text, reads = gen.expr(m.readable)
                for s in reads:
                    gen.edge(m.name, s, a, "data")
                    gen.edge(m.name, s, b, "data")
                body.append(f"    assign {{{a}, {b}}} = {text};")
            else:
                t = wire_drivers.pop()
                text, reads = gen.expr(m.readable)
                for s in reads:
                    gen.edge(m.name, s, t, "data")
                body.append(f"    assign {t} = {text};")

        # registers split across sequential and combinational blocks
        regs = list(m.regs + m.out_regs)
        rng.shuffle(regs)
        while regs:
            n = rng.randint(1, min(3, len(regs)))
            group, regs = regs[:n], regs[n:]
            if rng.random() < 0.65:
                head, kind, op = "always @(posedge clk)", "temporal", "<="
            else:
                head, kind, op = rng.choice(["always @*", "always @(*)"]), "data", "="
            body.append(f"    {head} begin")
            # give every reg in the group at least one assignment
            for t in group:
                text, reads = gen.expr(m.readable)
                for s in reads:
                    gen.edge(m.name, s, t, kind)
                body.append(f"        {t} {op} {text};")
            body += gen.stmt(m, group, set(), kind, op, "        ")
            body.append("    end")

        ports = ", ".join(
            ["input clk"]
            + [f"input [3:0] {n}" for n in m.inputs]
            + [f"output [3:0] {n}" for n in m.out_wires]
            + [f"output reg [3:0] {n}" for n in m.out_regs]
        )
        m.lines = [f"module {m.name} ({ports});", *body, "endmodule", ""]

    # rendered modules are spread over up to two files
    sources: dict[str, str] = {}
    for i, m in enumerate(mods):
        path = f"rand{seed}_{i % 2}.v"
        sources[path] = sources.get(path, "") + "\n".join(m.lines) + "\n"
    count = sum(len(m.readable) + 1 for m in mods)
    return RandomDesign(sources, gen.expected, mods, count)
