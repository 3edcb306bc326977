import textwrap

import pytest

from refcheck import parse_bdl, validate


def load(text: str):
    return validate(parse_bdl(textwrap.dedent(text).lstrip()))


OSCILLATOR = """
model oscillator
block x Integrator init=0
block v Integrator init=1
block neg Gain k=-1
block y Outport
wire v.0 -> x.0
wire x.0 -> neg.0
wire neg.0 -> v.0
wire x.0 -> y.0
"""

ANALYTIC_SIN = """
model analytic_sin
block t Clock
block s UnaryFn op=sin
block y Outport
wire t.0 -> s.0
wire s.0 -> y.0
"""

COS_INTEGRATOR = """
model cos_int
block t Clock
block c UnaryFn op=cos
block x Integrator init=0
block y Outport
wire t.0 -> c.0
wire c.0 -> x.0
wire x.0 -> y.0
"""


@pytest.fixture
def oscillator():
    return load(OSCILLATOR)


@pytest.fixture
def analytic_sin():
    return load(ANALYTIC_SIN)


@pytest.fixture
def cos_integrator():
    return load(COS_INTEGRATOR)


def pytest_terminal_summary(terminalreporter):
    import acceptance_log

    if acceptance_log.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_log.lines():
            terminalreporter.write_line(line)
