import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from primerace.primes import sieve
from primerace.residues import race_weight_two_class
from primerace.zeros import ZeroStore, ensure_coverage


@pytest.fixture(scope="session")
def table_1e5():
    return sieve(10**5)


@pytest.fixture(scope="session")
def table_1e6():
    return sieve(10**6)


@pytest.fixture(scope="session")
def t_q4():
    return race_weight_two_class(4, 3, 1)


@pytest.fixture(scope="session")
def store_q4(t_q4):
    """Zeros of the mod-4 race support character up to 500."""
    store = ZeroStore()
    ensure_coverage(store, t_q4, 500.0)
    return store
