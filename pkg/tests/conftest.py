import numpy as np
import pytest

from stcindex.dataset import CountryRecord, DataMatrix, reference_specs

_ACCEPTANCE = []


@pytest.fixture
def criterion():
    """Record one acceptance line: ``criterion(label, ok, detail)``."""

    def record(label, ok, detail=""):
        _ACCEPTANCE.append((label, bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {label}" + (f"  ({detail})" if detail else ""))


def make_matrix(values, codes=None, specs=None, pop=None, gdp=None):
    values = np.asarray(values, dtype=float)
    n, k = values.shape
    specs = specs or reference_specs()[:k]
    codes = codes or [f"C{chr(65 + i // 26)}{chr(65 + i % 26)}" for i in range(n)]
    countries = [
        CountryRecord(c, f"Country {c}", None if pop is None else pop[i], None if gdp is None else gdp[i])
        for i, c in enumerate(codes)
    ]
    return DataMatrix(countries, specs, values)


@pytest.fixture
def specs():
    return reference_specs()


# 5 countries x 8 reference indicators, two missing cells
FIXTURE_5x8 = [
    [12.0, 24000.0, 3100.0, 22.0, 2.1, 1500.0, 120.0, 800.0],
    [4.5, 3100.0, 210.0, 1.2, 0.3, 40.0, None, 25.0],
    [9.0, 11000.0, 1400.0, 6.5, 0.9, 300.0, 15.0, 210.0],
    [15.5, 31000.0, 4200.0, 40.0, 3.0, None, 260.0, 950.0],
    [6.0, 7000.0, 800.0, 2.5, 0.6, 120.0, 3.0, 90.0],
]
FIXTURE_CODES = ["AAA", "BBB", "CCC", "DDD", "EEE"]


@pytest.fixture
def panel5():
    return make_matrix([[np.nan if v is None else v for v in r] for r in FIXTURE_5x8], FIXTURE_CODES)


@pytest.fixture
def panel5_csv():
    lines = ["code,name,population,gdp_per_capita," + ",".join(s.id for s in reference_specs())]
    for code, row in zip(FIXTURE_CODES, FIXTURE_5x8):
        cells = ["" if v is None else repr(v) for v in row]
        lines.append(f"{code},Country {code},1000000,{row[1]!r}," + ",".join(cells))
    return "\n".join(lines) + "\n"
