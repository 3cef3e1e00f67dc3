import pytest

from rangechain import build_chain


@pytest.fixture(scope="session")
def chain_cache():
    """Memoized exact chains; building n=400 takes a couple of seconds."""
    cache = {}

    def get(n):
        if n not in cache:
            cache[n] = build_chain(n)
        return cache[n]

    return get
