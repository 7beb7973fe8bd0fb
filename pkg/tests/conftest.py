import functools

import pytest

from cncsim.codegen import generate


@functools.lru_cache(maxsize=None)
def _kernel(name: str, **kwargs):
    if kwargs:
        return generate(name, **kwargs)
    return generate(name)


@pytest.fixture(scope="session")
def gen():
    """Memoized kernel generator; programs are immutable and safe to share."""
    return _kernel
