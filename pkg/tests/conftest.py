from pathlib import Path

import pytest
from hypothesis import settings

from keysig.frontend import SourceFile, parse_sources, resolve_hierarchy
from keysig.graph import build_graph

HERE = Path(__file__).parent
CORPUS = HERE / "corpus"
BAD = CORPUS / "bad"
FIXTURES = HERE / "fixtures"
I2C = FIXTURES / "i2c"
I2C_SOURCES = [I2C / "i2c_master_top.v", I2C / "i2c_master_byte_ctrl.v", I2C / "i2c_master_bit_ctrl.v"]

settings.register_profile("ci", max_examples=60, deadline=None)
settings.load_profile("ci")


def corpus_files():
    return sorted(CORPUS.glob("*.v"))


def load_design(paths):
    ast = parse_sources([SourceFile.load(p) for p in paths])
    hier = resolve_hierarchy(ast)
    return ast, hier, build_graph(ast, hier)


def design_from_text(text: str, path: str = "t.v"):
    ast = parse_sources([SourceFile(path, text)])
    hier = resolve_hierarchy(ast)
    return ast, hier, build_graph(ast, hier)


@pytest.fixture(scope="session")
def i2c():
    return load_design(I2C_SOURCES)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
