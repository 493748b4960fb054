import numpy as np
import pytest

from fliess import Series, VectorSeries


def all_words(alphabet_size, max_len, min_len=0):
    out = [()] if min_len == 0 else []
    frontier = [()]
    for _ in range(max_len):
        frontier = [w + (a,) for w in frontier for a in range(alphabet_size)]
        if len(frontier[0]) >= min_len:
            out.extend(frontier)
    return out


def random_series(rng, alphabet_size, max_degree, n_terms=12, scale=1.0, proper=False):
    words = all_words(alphabet_size, max_degree, min_len=1 if proper else 0)
    idx = rng.choice(len(words), size=min(n_terms, len(words)), replace=False)
    terms = {words[i]: float(rng.normal()) * scale for i in idx}
    return Series(alphabet_size, max_degree, terms)


def random_vector(rng, m, max_degree, n_terms=12, scale=1.0, proper=False):
    return VectorSeries(
        [random_series(rng, m + 1, max_degree, n_terms, scale, proper) for _ in range(m)]
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20260814)
