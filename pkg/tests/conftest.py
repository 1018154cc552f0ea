import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))


@pytest.fixture(scope="session")
def factor_table():
    """Full 28-cell factor table keyed by ``(G, m)``, computed once."""
    from rational_feast.analysis import TABLE_G, TABLE_M, table_one

    rows = table_one(TABLE_G, TABLE_M, workers=os.cpu_count())
    return {(r["G"], r["m"]): r for r in rows}


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
