from __future__ import annotations

from fractions import Fraction

import hypothesis.strategies as st
from hypothesis import settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

rationals = st.builds(Fraction, st.integers(0, 12), st.integers(1, 6))


@st.composite
def profiles(draw, max_n=3, max_m=5, min_n=1):
    from fairmech.core import ValuationProfile

    n = draw(st.integers(min_n, max_n))
    m = draw(st.integers(1, max_m))
    rows = draw(st.lists(st.lists(rationals, min_size=m, max_size=m), min_size=n, max_size=n))
    return ValuationProfile(tuple(tuple(r) for r in rows))


@st.composite
def profile_and_owner(draw, max_n=3, max_m=5):
    p = draw(profiles(max_n, max_m))
    owner = tuple(draw(st.lists(st.integers(0, p.n - 1), min_size=p.m, max_size=p.m)))
    return p, owner
