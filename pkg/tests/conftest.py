import sys
from pathlib import Path

import pytest

from epinarr import load_bundled_model, parse_model

GOLDEN = Path(__file__).parent / "golden"

DECAY = """\
d = 1.0;
death = d * A;
A = (death, 1) << A;
A[100]
"""

SIR = """\
beta = 0.0003;
g = 0.1;
infection = beta * S * I;
recovery = g * I;
S = (infection, 1) << S;
I = (infection, 1) >> I + (recovery, 1) << I;
R = (recovery, 1) >> R;
S[990] <*> I[10] <*> R[0]
"""

# the exposition step of the chickenpox model, in a single age group
EXPOSITION = """\
location Age1 in world : size = sizeAge, type = compartment;
sizeAge = 100000;
lambda = 0.0005;
Exposition = lambda * S * I;
S = (Exposition, 1) << S;
I = (Exposition, 1) (+) I;
Exp = (Exposition, 1) >> Exp;
S@Age1[990] <*> I@Age1[10] <*> Exp@Age1[0]
"""

LOST_VACCIN = """\
W = 0.001;
LostVaccin = W * VP;
VP = (LostVaccin, 1) << VP;
S = (LostVaccin, 1) >> S;
VP[50] <*> S[0]
"""


@pytest.fixture(scope="session")
def varicella():
    return load_bundled_model()


@pytest.fixture
def decay():
    return parse_model(DECAY)


@pytest.fixture
def sir():
    return parse_model(SIR)


@pytest.fixture
def exposition():
    return parse_model(EXPOSITION)


@pytest.fixture
def lost_vaccin():
    return parse_model(LOST_VACCIN)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
