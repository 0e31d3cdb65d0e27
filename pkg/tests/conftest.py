import json

import pytest

from knobtune.space import builtin_space_path, parse_space, space_from_dict


def pytest_terminal_summary(terminalreporter):
    """One pass/fail line per acceptance criterion at the end of the run."""
    rows = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if "test_acceptance" in rep.nodeid and rep.when == "call":
                rows.append((rep.nodeid.split("::")[-1], outcome.upper()))
    if rows:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name, outcome in sorted(rows):
            terminalreporter.write_line(f"{outcome:6s} {name}")


def knob(name, type_, **kw):
    entry = {"name": name, "type": type_}
    entry.update(kw)
    return entry


def make_space(*knobs):
    return space_from_dict({"knobs": list(knobs)})


@pytest.fixture(scope="session")
def pg96_space():
    return parse_space(builtin_space_path("postgres96"))


@pytest.fixture(scope="session")
def mini_space():
    return parse_space(builtin_space_path("postgres96_mini"))


@pytest.fixture
def write_space(tmp_path):
    def _write(doc, name="space.json"):
        path = tmp_path / name
        path.write_text(json.dumps(doc))
        return str(path)

    return _write
