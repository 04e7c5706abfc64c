import pytest

from syntaxattn.treebank import parse_ptb

FIG1_TEXT = "(S (NP (PRP I)) (VP (VBP swim) (PP (IN across) (NP (DT the) (NN river)))) (. .))"
FIG1_TOKENS = ("I", "swim", "across", "the", "river", ".")
FIG1_DISTANCES = (4, 3, 2, 1, 4)
# inclusive 0-based column range per row
FIG1_RANGES = [(0, 5), (0, 4), (1, 4), (2, 4), (3, 5), (0, 5)]

ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


@pytest.fixture
def fig1_tree():
    return parse_ptb(FIG1_TEXT)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
