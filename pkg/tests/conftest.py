import pytest

from symcap.cone import assemble_union_set


@pytest.fixture(scope="session")
def union_set_2():
    """Default-resolution union set for n = 2, shared across tests."""
    return assemble_union_set(2)
