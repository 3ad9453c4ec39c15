import pytest

from supplytask import data_path
from supplytask.synthetic import town_files

FILES = town_files()


@pytest.mark.parametrize("name", sorted(FILES))
def test_bundled_town_matches_generator(name):
    # regenerate with scripts/make_town_fixture.py if this fails
    assert data_path("town", name).read_bytes() == FILES[name]
