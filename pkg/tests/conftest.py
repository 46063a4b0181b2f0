"""Session fixtures for results shared across test modules.

The full fee tables are solved once per session because the acceptance
criteria and the property tests draw on the same rows.
"""

import time

import pytest

from support import TABLE_RATES, solve_table_fee


@pytest.fixture(scope="session")
def static_table_fees():
    """Quarterly static fair fees for all table rows, with the build time."""
    started = time.perf_counter()
    fees = {g: solve_table_fee(g, "static") for g in TABLE_RATES}
    return fees, time.perf_counter() - started


@pytest.fixture(scope="session")
def dynamic_table_fees():
    """Quarterly dynamic fair fees for all table rows (penalty 10%)."""
    return {g: solve_table_fee(g, "dynamic", num_levels=100) for g in TABLE_RATES}
