import itertools
import random
from fractions import Fraction

import pytest

from amrsbmt.graph import parse_penman
from amrsbmt.lm import (EOS, ROOT, STOP, AmrTreeModel, LmError, NgramModel,
                        WbTable)
from amrsbmt.transform import disconnect
from helpers import soldier_graph, random_graph


def test_witten_bell_hand_example():
    # corpus {a b, a c}: P(b|a) = (1 + 2 P(b)) / (2 + 2), unigram backed
    # off to uniform over V + 1
    m = NgramModel.train([["a", "b"], ["a", "c"]], order=2)
    v = len(m.table.vocab)
    assert v == 4  # a, b, c, end marker
    p_b = m.table.prob((), "b")
    assert abs(p_b - (1 + 4 * (1 / 5)) / (6 + 4)) < 1e-12
    p_ba = m.table.prob(("a",), "b")
    assert abs(p_ba - (1 + 2 * p_b) / (2 + 2)) < 1e-12


def test_ngram_normalization_every_context():
    rng = random.Random(2)
    corpus = [[rng.choice("abcde") for _ in range(rng.randint(1, 8))] for _ in range(30)]
    m = NgramModel.train(corpus, order=3)
    events = list(m.table.vocab) + ["<unseen-event>"]
    for ctx in m.table.counts:
        if len(ctx) != m.table.arity:
            continue
        total = sum(m.table.prob(ctx, e) for e in events)
        assert abs(total - 1.0) < 1e-9


def test_unseen_token_positive_probability():
    m = NgramModel.train([["a", "b"]], order=2)
    assert m.prob(["a"], "zzz") > 0
    assert m.score_sequence(["zzz", "zzz"]) > float("-inf")


def test_order_one_and_bad_order():
    m = NgramModel.train([["a", "b"]], order=1)
    assert m.score_sequence(["a"]) < 0
    with pytest.raises(LmError):
        NgramModel.train([["a"]], order=0)


def test_single_sentence_is_most_probable_of_its_length():
    m = NgramModel.train([["a", "b", "c"]], order=3)
    target = m.score_sequence(["a", "b", "c"])
    for seq in itertools.product(["a", "b", "c"], repeat=3):
        assert m.score_sequence(list(seq)) <= target + 1e-12


def test_deterministic_corpus_limits():
    # after the begin padding the corpus always continues with `a`, so
    # that probability tends to 1; after `a a` the corpus continues with
    # `a` and the end marker equally often, so that one tends to 1/2
    last_first, last_mid = 0.0, 0.0
    for n in (1, 10, 400):
        m = NgramModel.train([["a", "a", "a"]] * n, order=3)
        p_first = m.prob([], "a")
        p_mid = m.prob(["a", "a"], "a")
        assert p_first > last_first
        last_first, last_mid = p_first, p_mid
    assert last_first > 0.98
    assert abs(last_mid - 0.5) < 0.02


def test_training_perplexity_beats_shuffled():
    rng = random.Random(9)
    corpus = [["the", "dog", "runs"], ["the", "cat", "sleeps"],
              ["the", "dog", "sleeps"], ["the", "bird", "sings"]]
    m = NgramModel.train(corpus, order=3)
    shuffled = [list(s) for s in corpus]
    for s in shuffled:
        rng.shuffle(s)
    assert m.perplexity(corpus) <= m.perplexity(shuffled)


def test_empty_sequence_scores_eos():
    m = NgramModel.train([["a"]], order=2)
    assert abs(m.score_sequence([]) - m.logprob([], EOS)) < 1e-12


def test_ngram_save_load_round_trip(tmp_path):
    m = NgramModel.train([["a", "b", '"new york"'], ["a", "c"]], order=3)
    p = tmp_path / "m.lm"
    m.save(p)
    m2 = NgramModel.load(p)
    for seq in (["a", "b"], ["a", '"new york"'], ["zzz"]):
        assert abs(m.score_sequence(seq) - m2.score_sequence(seq)) < 1e-12


def test_arpa_export(tmp_path):
    m = NgramModel.train([["a", "b"], ["a", "c"]], order=2)
    p = tmp_path / "m.arpa"
    m.export_arpa(p)
    text = p.read_text()
    assert "\\data\\" in text and "\\2-grams:" in text and "\\end\\" in text
    for line in text.splitlines():
        if line.startswith("-") and "\t" in line:
            logp = float(line.split("\t")[0])
            assert logp <= 0.0


def _wb(count_pairs, event, lower):
    """Reference Witten-Bell step on exact fractions."""
    total = sum(count_pairs.values())
    t = len(count_pairs)
    return (Fraction(count_pairs.get(event, 0)) + t * lower) / (total + t)


def test_amr_model_soldier_factors_exact():
    gd = disconnect(soldier_graph())
    m = AmrTreeModel.train([gd])
    # independent hand computation on fractions
    uni_c = {"fear-01": 1, "soldier": 1, "die-01": 1, "-": 1, "*": 1}
    u = Fraction(1, len(uni_c) + 1)
    p_die = _wb(uni_c, "die-01", u)
    p_die_arg1 = _wb({"die-01": 1, "*": 1}, "die-01", p_die)
    p_die_full = _wb({"die-01": 1}, "die-01", p_die_arg1)
    assert p_die_full == Fraction(161, 240)
    got = m.concept.prob(("ARG1", "fear-01"), "die-01")
    assert abs(got - float(p_die_full)) < 1e-12

    uni_r = {"ARG0": 1, "ARG1": 2, "polarity": 1, STOP: 5}
    u_r = Fraction(1, len(uni_r) + 1)
    p_arg1 = _wb(uni_r, "ARG1", u_r)
    p_arg1_die = _wb({"ARG1": 1, STOP: 1}, "ARG1", p_arg1)
    assert p_arg1_die == Fraction(93, 260)
    assert abs(m.role.prob(("die-01",), "ARG1") - float(p_arg1_die)) < 1e-12


def test_amr_model_ml_estimates_before_interpolation():
    gd = disconnect(soldier_graph())
    m = AmrTreeModel.train([gd])
    d = m.concept.counts[("ARG1", "fear-01")]
    assert d == {"die-01": 1}


def test_amr_model_empty_roles_stop_only():
    g = parse_penman("(a / amr-empty)")
    m = AmrTreeModel.train([g])
    assert m.role.counts[("amr-empty",)] == {STOP: 1}
    # single instance: P(c|ROOT, ROOT) * P(STOP|c)
    facts = m.factors(g)
    assert [f.kind for f in facts] == ["concept", "stop"]
    assert facts[0].context == (ROOT, ROOT)


def test_amr_model_hand_counts_two_concepts():
    g1 = parse_penman("(a / go-02 :ARG0 (b / dog))")
    g2 = parse_penman("(a / go-02 :ARG0 (b / dog) :ARG0 (c / dog))")
    m = AmrTreeModel.train([g1, g2])
    assert m.concept.counts[("ARG0", "go-02")] == {"dog": 3}
    assert m.concept.counts[(ROOT, ROOT)] == {"go-02": 2}
    assert m.role.counts[("go-02",)] == {"ARG0": 3, STOP: 2}
    assert m.role.counts[("dog",)] == {STOP: 3}


def test_role_and_stop_share_one_event_space():
    rng = random.Random(19)
    graphs = [disconnect(random_graph(rng)) for _ in range(30)]
    m = AmrTreeModel.train(graphs)
    for ctx in [c for c in m.role.counts if len(c) == 1]:
        events = list(m.role.vocab) + ["<unseen>"]
        assert abs(sum(m.role.prob(ctx, e) for e in events) - 1.0) < 1e-9
        # empirically one stop per instance occurrence
        d = m.role.counts[ctx]
        assert STOP in d


def test_score_invariant_under_role_permutation():
    rng = random.Random(29)
    g = parse_penman("(a / see-01 :ARG0 (b / dog) :ARG1 (c / cat) :time (d / now))")
    m = AmrTreeModel.train([g, parse_penman("(a / go-02 :ARG0 (b / dog))")])
    base = m.logprob(g)
    roles = list(g.roles)
    for perm in itertools.permutations(roles):
        shuffled = type(g)(g.root, g.instances, list(perm))
        assert abs(m.logprob(shuffled) - base) < 1e-12


def test_score_invariant_under_renaming():
    gd = disconnect(soldier_graph())
    m = AmrTreeModel.train([gd])
    assert abs(m.logprob(gd) - m.logprob(gd.renamed())) < 1e-12


def test_rejects_non_tree():
    with pytest.raises(LmError, match="tree-shaped"):
        AmrTreeModel.train([soldier_graph()])


def enumerate_tree_mass(model, concepts, labels, depth, breadth):
    """Total probability of all ordered trees bounded in depth and width."""

    def node_mass(concept, inc, parent, d):
        p_c = model.concept.prob((inc, parent), concept)
        return p_c * roles_mass(concept, d)

    def roles_mass(concept, d):
        stop = model.role.prob((concept,), STOP)
        total = stop
        if d <= 0:
            return total
        # sequences of 1..breadth roles before the stop event
        single = 0.0
        for l in labels:
            p_l = model.role.prob((concept,), l)
            child = sum(node_mass(c, l, concept, d - 1) for c in concepts)
            single += p_l * child
        acc = 1.0
        for _ in range(breadth):
            acc *= single
            total += acc * stop
        return total

    return sum(node_mass(c, ROOT, ROOT, depth) for c in concepts)


def test_tree_enumeration_mass_bounded_and_monotone():
    g1 = parse_penman("(a / go-02 :ARG0 (b / dog))")
    g2 = parse_penman("(a / dog :ARG1 (b / go-02 :ARG0 (c / dog)))")
    m = AmrTreeModel.train([g1, g2])
    concepts = ["go-02", "dog"]
    labels = ["ARG0", "ARG1"]
    last = 0.0
    for depth in range(0, 5):
        mass = enumerate_tree_mass(m, concepts, labels, depth, breadth=3)
        assert mass <= 1.0 + 1e-9
        assert mass >= last - 1e-12
        last = mass
    assert last > 0.5


def test_amr_model_save_load_round_trip(tmp_path):
    rng = random.Random(31)
    graphs = [disconnect(random_graph(rng)) for _ in range(20)]
    m = AmrTreeModel.train(graphs)
    p = tmp_path / "amr.lm"
    m.save(p)
    m2 = AmrTreeModel.load(p)
    for g in graphs[:5]:
        assert abs(m.logprob(g) - m2.logprob(g)) < 1e-12


def test_semcat_model_tables(tmp_path):
    from amrsbmt.semcat import load_taxonomy
    from helpers import taxonomy_paths
    tax = load_taxonomy(*taxonomy_paths())
    g = disconnect(parse_penman("(f / fear-01 :ARG0 (s / soldier))"))
    m = AmrTreeModel.train([g], taxonomy=tax)
    assert m.with_semcat
    assert m.categories["fear-01"] == "emotion"
    assert m.categories["soldier"] == "person"
    facts = m.factors(g, use_semcat=True)
    kinds = [f.kind for f in facts]
    assert kinds == ["category", "concept", "role", "category", "concept", "stop", "stop"]
    # reformulated factorization still a proper score
    assert m.logprob(g, use_semcat=True) < 0
    # base factorization still available
    assert m.logprob(g, use_semcat=False) < 0
    p = tmp_path / "sc.lm"
    m.save(p)
    m2 = AmrTreeModel.load(p)
    assert abs(m.logprob(g, use_semcat=True) - m2.logprob(g, use_semcat=True)) < 1e-12


def test_wbtable_rejects_wrong_arity():
    t = WbTable(2)
    with pytest.raises(LmError):
        t.add(("a",), "x")
