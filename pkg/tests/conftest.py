import pytest
from hypothesis import settings

from mfswitch.protocols import build_protocol

# simulator calls vary in cost (first imports, compilation); timing is not under test
settings.register_profile("default", deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def protocols():
    """Built protocols cached for the whole session, keyed by (name, ft)."""
    cache = {}

    def get(name, ft=True):
        if (name, ft) not in cache:
            cache[(name, ft)] = build_protocol(name, ft)
        return cache[(name, ft)]

    return get


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        ok, detail = RESULTS[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
