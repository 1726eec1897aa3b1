import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_config as cfg
from mlcspace.config import Threshold
from mlcspace.constraints import CODES, ValidationReport, hard_ok, validate
from mlcspace.context import DatasetContext
from mlcspace.sampling import SamplingMode, sample_tree
from mlcspace.config import lower

CTX = DatasetContext(6, 20)

# code -> (passing configuration, failing configuration, context)
FIXTURES = {
    "H1": (cfg("PMCC", {"ps": 50, "chi": 51}), cfg("PMCC", {"ps": 50, "chi": 50}), CTX),
    "H2": (cfg("CT", {"w": -1, "d": 5}), cfg("CT", {"w": -1, "d": 6}), DatasetContext(16, 20)),
    "H3": (cfg("CDN", {"i": 101, "ci": 100}), cfg("CDN", {"i": 100, "ci": 100}), CTX),
    "H4": (cfg(base="NB", base_params={"uke": True}),
           cfg(base="NB", base_params={"uke": True, "usd": True}), CTX),
    "H5": (cfg(slc_meta="Bagging", slc_meta_params={"coob": True, "bsp": 100}),
           cfg(slc_meta="Bagging", slc_meta_params={"coob": True, "bsp": 90}), CTX),
    "H6": (cfg(base="NB", slc_meta="LWL"), cfg(base="LMT", slc_meta="LWL"), CTX),
    "H7": (cfg(base="RF", slc_meta="RC"), cfg(base="NB", slc_meta="RC"), CTX),
    "H8": (cfg("BCC", meta="EM"), cfg("BCC", meta="BaggingML"), CTX),
    "H9": (cfg("PMCC", meta="BaggingML"), cfg("PMCC", meta="EM"), CTX),
    "H10": (cfg(base="RandomTree", base_params={"nfbgt": 2}),
            cfg(base="RandomTree", base_params={"nfbgt": 1}), CTX),
    "H11": (cfg(base="C4.5", base_params={"u": True}),
            cfg(base="C4.5", base_params={"u": True, "cf": 0.25}), CTX),
    "H12": (cfg(base="PART", base_params={"rep": True, "nr": 3}),
            cfg(base="PART", base_params={"nr": 3}), CTX),
    "H13": (cfg("RAkEL", {"les": 3}), cfg("RAkEL", {"les": 4}), CTX),
    "H14": (cfg(slc_meta="Bagging", asc="BestFirst"), cfg(slc_meta="LWL", asc="BestFirst"), CTX),
    "W1": (cfg("PCC"), cfg("PCC"), None),
    "W2": (cfg("MCC"), cfg("MCC", meta="EM"), CTX),
    "W3": (cfg(base="C4.5", base_params={"u": True}),
           cfg(base="C4.5", base_params={"u": True, "ct": True}), CTX),
    "W4": (cfg(meta="EnsembleML", meta_params={"bsp": 60}),
           cfg(meta="EnsembleML", meta_params={"bsp": 90}), CTX),
}
W1_CONTEXTS = (DatasetContext(14, 20), DatasetContext(15, 20))


def test_every_code_has_fixtures():
    assert set(FIXTURES) == set(CODES)
    assert sum(c.startswith("H") for c in CODES) == 14
    assert sum(c.startswith("W") for c in CODES) == 4


@pytest.mark.parametrize("code", sorted(FIXTURES))
def test_passing_fixture(code):
    good, _, ctx = FIXTURES[code]
    ctx = W1_CONTEXTS[0] if code == "W1" else ctx
    assert code not in validate(good, ctx).codes()


@pytest.mark.parametrize("code", sorted(FIXTURES))
def test_failing_fixture(code):
    _, bad, ctx = FIXTURES[code]
    ctx = W1_CONTEXTS[1] if code == "W1" else ctx
    report = validate(bad, ctx)
    assert code in report.codes()
    if code.startswith("W"):
        assert report.valid
    else:
        assert not report.valid


@pytest.mark.parametrize("code", ["H2", "H4", "H5", "H6", "H7", "H8", "H9", "H10",
                                  "H11", "H12", "H13", "H14"])
def test_failing_fixture_is_isolated(code):
    _, bad, ctx = FIXTURES[code]
    assert [f.code for f in validate(bad, ctx).violations] == [code]


def test_width_zero_density():
    assert "H2" in validate(cfg("CDT", {"w": 0, "d": 2}), CTX).codes()
    assert validate(cfg("CDT", {"w": 0, "d": 1}), CTX).valid


def test_bagging_default_bag_size_with_coob():
    assert validate(cfg(slc_meta="Bagging", slc_meta_params={"coob": True}), CTX).valid


def test_structural_errors():
    assert "H13" in validate(cfg("NB"), CTX).codes()
    assert "H13" in validate(cfg(base="BR"), CTX).codes()
    assert "H13" in validate(cfg(base="NB", slc_meta="EM"), CTX).codes()
    assert "H13" in validate(cfg(asc="Ranker"), CTX).codes()
    assert "H13" in validate(cfg(threshold=Threshold.real(1.0)), CTX).codes()
    assert "H13" in validate(cfg(base_params={"zz": 1}), CTX).codes()


def test_context_free_validation_skips_label_bounds():
    c = cfg("RAkEL", {"les": 40})
    assert validate(c, None).valid
    assert not validate(c, CTX).valid
    assert "H13" in validate(cfg("RAkEL", {"les": "many"}), None).codes()


def test_report_shape():
    r = validate(FIXTURES["H8"][1], CTX)
    assert isinstance(r, ValidationReport)
    d = r.to_dict()
    assert d["verdict"] == "Invalid"
    assert d["violations"][0]["code"] == "H8"
    assert d["violations"][0]["source"] == CODES["H8"][1]
    assert not hard_ok(FIXTURES["H8"][1], CTX)


def test_findings_are_ordered():
    c = cfg("PMCC", {"ps": 50, "chi": 50}, base="NB",
            base_params={"uke": True, "usd": True}, meta="EM")
    codes = validate(c, CTX).codes()
    assert codes == sorted(codes, key=lambda k: (k[0], int(k[1:])))


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32), L=st.integers(2, 60), A=st.integers(1, 100),
       mode=st.sampled_from(list(SamplingMode)))
def test_sampled_configurations_have_no_violations(large, seed, L, A, mode):
    ctx = DatasetContext(L, A)
    report = validate(lower(sample_tree(large, ctx, mode, seed)), ctx)
    assert report.violations == ()
