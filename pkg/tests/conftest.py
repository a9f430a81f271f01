import pytest

_ACCEPTANCE: list[tuple[str, str]] = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        name = report.nodeid.split("::")[-1]
        _ACCEPTANCE.append(("PASS" if report.passed else "FAIL", name))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for outcome, name in _ACCEPTANCE:
        terminalreporter.write_line(f"{outcome}  {name}")


@pytest.fixture
def cxr_pair():
    from medtext.corpus import LabeledSentencePair

    return LabeledSentencePair(
        id="cxr",
        group_id="g-cxr",
        text_a="Her CXR was clear and it did not appear she had an infection.",
        text_b="Chest X-Ray showed infiltrates.",
        label="contradiction",
    )


@pytest.fixture
def micu_pair():
    from medtext.corpus import LabeledSentencePair

    return LabeledSentencePair(
        id="micu",
        group_id="g-micu",
        text_a="On arrival to the MICU , patient is hemodynamically stable .",
        text_b="The patient is in shock.",
        label="contradiction",
    )
