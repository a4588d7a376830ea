from pathlib import Path

import pytest

from cwerank import _backend
from cwerank.catalog import load_catalog
from cwerank.graph import build_composite_dag
from cwerank.nvd import filter_year, load_feeds, restrict_to_view
from cwerank.propagate import adorn, propagate

FIXTURES = Path(__file__).parent / "fixtures"
CATALOG_FILES = {v: FIXTURES / "catalog" / f"{v}.xml" for v in (1003, 1000, 699)}
FEED_FILES = [FIXTURES / "nvd" / "nvdcve-1.1-2019.json", FIXTURES / "nvd" / "nvdcve-1.1-2018.json"]


def _available_backends():
    names = ["python"]
    try:
        _backend.get("cython")
    except ImportError:
        pass
    else:
        names.append("cython")
    return names


BACKENDS = _available_backends()


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture(scope="session")
def catalog():
    return load_catalog(CATALOG_FILES)


@pytest.fixture(scope="session")
def dag(catalog):
    return build_composite_dag(catalog)


@pytest.fixture(scope="session")
def vulns(dag):
    return restrict_to_view(filter_year(load_feeds(FEED_FILES), 2019), dag)


@pytest.fixture(scope="session")
def adorned(dag, vulns):
    return propagate(adorn(dag, vulns))


@pytest.fixture
def catalog_args():
    args = []
    for view, path in CATALOG_FILES.items():
        args += ["--catalog", f"{view}={path}"]
    return args


@pytest.fixture
def feed_args():
    args = []
    for path in FEED_FILES:
        args += ["--feed", str(path)]
    return args
