from __future__ import annotations

import pytest

_ACCEPTANCE: list[str] = []


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for an acceptance criterion."""
    doc = (request.function.__doc__ or "").strip()
    state = {"label": doc or request.node.name, "detail": ""}

    def describe(label: str, detail: str = "") -> None:
        state["label"], state["detail"] = label, detail

    yield describe
    rep = getattr(request.node, "rep_call", None)
    ok = rep is not None and rep.passed
    line = f"{'PASS' if ok else 'FAIL'}  {state['label']}"
    if state["detail"]:
        line += f"  ({state['detail']})"
    _ACCEPTANCE.append(line)
    print(line)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
