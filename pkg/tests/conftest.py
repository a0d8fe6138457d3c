import sys
import os
from fractions import Fraction

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from dhtlab.core import FiniteSeq, PiGraded

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("thorough", max_examples=500, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

fractions = st.fractions(min_value=-10, max_value=10, max_denominator=12)
nonzero_fractions = fractions.filter(bool)


@st.composite
def pi_graded(draw, max_grade=3):
    terms = draw(st.dictionaries(st.integers(0, max_grade), fractions, max_size=4))
    return PiGraded(terms)


@st.composite
def finite_seqs(draw, max_support=8, reach=12):
    entries = draw(st.dictionaries(st.integers(-reach, reach), nonzero_fractions, max_size=max_support))
    return FiniteSeq(entries)


def as_fraction_dict(a: FiniteSeq) -> dict[int, Fraction]:
    """Entries of a rational sequence as plain Fractions."""
    return {n: v.coeff(0) for n, v in a.items()}


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
