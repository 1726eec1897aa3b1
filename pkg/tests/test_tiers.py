import pytest

from mlcspace.catalog import ALGORITHMS, declared_hp
from mlcspace.context import DatasetContext
from mlcspace.grammar import grammar_stats, print_grammar
from mlcspace.sampling import SamplingMode, first_markers, headline, sample_trees
from mlcspace.tiers import (
    EmptyTier, Tier, load_grammar, registry, restrict, tier_membership,
)

SMALL_MLC = {"BR", "CC", "LP", "ML-BPNN", "RAkEL"}
SMALL_SLC = {"JRip", "KNN", "LR", "NB", "RF"}


@pytest.mark.parametrize("tier, sizes", [("Small", (5, 5)), ("Medium", (15, 15)), ("Large", (26, 28))])
def test_membership_sizes(tier, sizes):
    mlc, slc = tier_membership(tier)
    assert (len(mlc), len(slc)) == sizes


def test_small_membership():
    assert tier_membership(Tier.SMALL) == (SMALL_MLC, SMALL_SLC)


def test_tiers_are_nested():
    s, m, l = (tier_membership(t) for t in Tier)
    assert s[0] <= m[0] <= l[0] and s[1] <= m[1] <= l[1]


def test_tier_parse():
    assert Tier.parse("medium") is Tier.MEDIUM
    with pytest.raises(ValueError):
        Tier.parse("huge")


@pytest.mark.parametrize("tier", list(Tier))
def test_grammar_markers_match_membership(tier):
    g = load_grammar(tier)
    mlc, slc = tier_membership(tier)
    assert first_markers(g, "MLC")["Start"] == mlc
    assert first_markers(g, "SLC")["ALGS-SLC"] == slc
    assert grammar_stats(g).unresolved == ()


def test_restricted_grammars_shrink():
    counts = [grammar_stats(load_grammar(t)).rule_count for t in Tier]
    assert counts[0] < counts[1] < counts[2]
    assert counts[2] == 127


@pytest.mark.parametrize("tier", [Tier.SMALL, Tier.MEDIUM])
def test_restricted_grammar_reparses(tier):
    text = print_grammar(load_grammar(tier))
    from mlcspace.grammar import parse_grammar
    assert print_grammar(parse_grammar(text)) == text


@pytest.mark.parametrize("tier", [Tier.SMALL, Tier.MEDIUM])
@pytest.mark.parametrize("mode", list(SamplingMode))
def test_no_out_of_tier_samples(tier, mode):
    g = load_grammar(tier)
    mlc, slc = tier_membership(tier)
    seen_mlc, seen_slc = set(), set()
    for t in sample_trees(g, DatasetContext(6, 20), mode, seed=11, n=500):
        m, s = headline(t)
        seen_mlc.add(m)
        if s is not None:
            seen_slc.add(s)
    assert seen_mlc <= mlc and seen_slc <= slc


def test_empty_filter():
    with pytest.raises(EmptyTier):
        restrict(load_grammar("Large"), set(), set())


def test_registry_hp_counts_agree_with_catalog():
    table = registry().hp_counts
    mismatched = {k for k, v in table.items() if k in ALGORITHMS and declared_hp(k) != v}
    assert mismatched == {"RSS"}


def test_random_tree_key_differs_from_acronym():
    rec = registry().by_key("SLC")["RandomTree"]
    assert rec.acronym == "RT"
    assert registry().by_key("MLC")["RT"].acronym == "RT"
