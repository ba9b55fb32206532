import mpmath as mp
import pytest

from seifert_wrt.seifert_core import make_loop

POINCARE = "2/1,3/1,5/-4"
TREFOIL = "2/1,3/-1"
LOOPS_N3 = {
    (2, 3, 5): "2/1,3/1,5/-4",
    (2, 3, 7): "2/-9,3/11,7/6",
    (2, 3, 11): "2/-7,3/10,11/2",
    (3, 4, 5): "3/-10,4/7,5/8",
}
FOUR_FIBERS = "2/-11,3/7,5/8,7/11"


@pytest.fixture(autouse=True)
def precision_256():
    saved = mp.mp.prec
    mp.mp.prec = 256
    yield
    mp.mp.prec = saved


@pytest.fixture
def poincare():
    return make_loop(POINCARE)


@pytest.fixture
def trefoil():
    return make_loop(TREFOIL)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES

    if not LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(LINES):
        terminalreporter.write_line(LINES[number])
