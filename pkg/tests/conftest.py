import pytest

from odequiv.engine import load_table, default_table_path


@pytest.fixture(scope="session")
def table():
    entries, problems = load_table(default_table_path(), check=False)
    assert entries, "bundled table is empty"
    return entries


@pytest.fixture(scope="session")
def checked_table():
    entries, problems = load_table(default_table_path(), check=True)
    assert not problems, f"bundled table inconsistent: {problems}"
    return entries
