import pytest

from netslice import build_virtual_network, fig1_fixture


@pytest.fixture
def example_s1():
    return fig1_fixture(1)


@pytest.fixture
def example_s2():
    return fig1_fixture(2)


@pytest.fixture
def example_vnet(example_s1):
    return build_virtual_network(example_s1)


# ------------------------------------------------------ acceptance report

_ACCEPTANCE = []


class Criterion:
    """Collects the measured values of one acceptance criterion; the
    terminal summary prints one PASS/FAIL line per criterion."""

    def __init__(self, title):
        self.title = title
        self.notes = []

    def note(self, text):
        self.notes.append(str(text))
        print(f"[{self.title}] {text}")


@pytest.fixture
def criterion(request):
    marker = request.node.get_closest_marker("criterion")
    c = Criterion(marker.args[0] if marker else request.node.name)
    request.node._criterion = c
    return c


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    c = getattr(item, "_criterion", None)
    if c is not None and (rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed")):
        _ACCEPTANCE.append((c, rep.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for c, outcome in _ACCEPTANCE:
        word = "PASS" if outcome == "passed" else "FAIL" if outcome == "failed" else outcome.upper()
        detail = "; ".join(c.notes)
        terminalreporter.write_line(f"{word}  {c.title}" + (f" -- {detail}" if detail else ""))
