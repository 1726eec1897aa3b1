import pytest

from mlcspace.config import Component, Configuration, MlcCore, SlcBase, SlcChain, Threshold
from mlcspace.context import DatasetContext
from mlcspace.tiers import load_grammar


@pytest.fixture(scope="session")
def large():
    return load_grammar("Large")


@pytest.fixture(scope="session")
def ctx():
    return DatasetContext(6, 20)


def make_config(core="BR", core_params=None, base="NB", base_params=None,
                slc_meta=None, slc_meta_params=None, meta=None, meta_params=None,
                asc=None, threshold=None):
    """Small builder for hand-written configurations."""
    slc = None
    if core != "ML-BPNN":
        smeta = Component(slc_meta, slc_meta_params or {}) if slc_meta else None
        slc = SlcChain(SlcBase(base, base_params or {}, asc), smeta)
    return Configuration(
        threshold or Threshold("PCut1"),
        MlcCore(core, core_params or {}, slc),
        Component(meta, meta_params or {}) if meta else None,
    )


@pytest.fixture
def build():
    return make_config


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
