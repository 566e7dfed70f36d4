import random

import pytest
from gmpy2 import mpq
from hypothesis import settings, strategies as st

from n2super.field import FieldScalar
from n2super.grassmann import GrassmannElement
from n2super.moduli import ModuliData
from n2super.projective import ProjectiveParams

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


def rand_elem(rng: random.Random, L: int, parity: int, body=None, density: float = 0.4) -> GrassmannElement:
    """Random homogeneous element; small integer coefficients, optional fixed body."""
    terms = {}
    for m in range(1, 1 << L):
        if bin(m).count("1") % 2 == parity and rng.random() < density:
            terms[m] = mpq(rng.randint(-3, 3), rng.choice([1, 1, 2]))
    g = GrassmannElement(L, terms)
    if body is not None:
        g = g + body
    return g


def rand_body(rng: random.Random):
    return mpq(rng.choice([1, 2, 3, -1, -2]), rng.choice([1, 2]))


def random_moduli(rng: random.Random, L: int, W: int, scaled: bool = False, with_body: bool = True) -> ModuliData:
    even = lambda: rand_elem(rng, L, 0, mpq(rng.randint(-2, 2)) if with_body else None)
    odd = lambda: rand_elem(rng, L, 1)
    seqs = [[even() for _ in range(W)], [even() for _ in range(W)], [odd() for _ in range(W)], [odd() for _ in range(W)]]
    a0 = b0 = None
    if scaled:
        a0 = rand_elem(rng, L, 0, rand_body(rng))
        b0 = rand_elem(rng, L, 0, rand_body(rng))
    return ModuliData.from_sequences(*seqs, a0=a0, b0=b0, L=L)


def random_params(rng: random.Random, L: int = 4) -> ProjectiveParams:
    """Valid superprojective parameters with a, b, c, d all of nonzero body."""
    while True:
        a = rand_elem(rng, L, 0, rand_body(rng))
        b = rand_elem(rng, L, 0, rand_body(rng))
        c = rand_elem(rng, L, 0, rand_body(rng))
        d = (1 + b * c) * a.inverse()
        if not d.body().is_zero():
            break
    gp, gm, dp, dm = (rand_elem(rng, L, 1) for _ in range(4))
    ep = rand_elem(rng, L, 0, rand_body(rng))
    em = (1 - gp * dm + dp * gm) * ep.inverse()
    return ProjectiveParams(a, b, c, d, ep, em, gp, gm, dp, dm)


@pytest.fixture
def rng():
    return random.Random(20240611)


# hypothesis strategies ---------------------------------------------------------

small_q = st.builds(lambda n, d: mpq(n, d), st.integers(-4, 4), st.sampled_from([1, 2, 3]))
field_scalars = st.builds(FieldScalar, small_q, small_q, small_q, small_q)


def grassmann(L: int = 4, parity: int | None = None, nonzero_body: bool = False):
    masks = [m for m in range(1 << L) if parity is None or bin(m).count("1") % 2 == parity]

    @st.composite
    def build(draw):
        chosen = draw(st.dictionaries(st.sampled_from(masks), small_q, max_size=6))
        g = GrassmannElement(L, chosen)
        if nonzero_body:
            g = g.soul() + draw(st.sampled_from([mpq(1), mpq(-2), mpq(1, 3), mpq(5, 2)]))
        return g

    return build()
