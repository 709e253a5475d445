"""Smatch: precision/recall/F over matched AMR triples under the best
variable mapping.

The default search is hill-climbing with restarts: one greedy start that
maps variables by matching concepts, plus random starts, each improved by
single remaps and pairwise swaps until no gain.  The exact mode maximizes
over all injective mappings and serves as the oracle for the
hill-climber; it is feasible when the smaller graph has few variables.
"""

import random
from collections import Counter
from itertools import permutations

TOP_RELATION = "TOP"
INSTANCE_RELATION = "instance"

_EXACT_LIMIT = 3_000_000


class TripleSet:
    """Triple decomposition of a graph.

    instance triples (instance, var, concept); relation triples
    (role, var, var); attribute triples (role, var, constant), including
    one (TOP, root var, root concept).
    """

    __slots__ = ("instances", "relations", "attributes", "variables")

    def __init__(self, instances, relations, attributes):
        self.instances = list(instances)
        self.relations = list(relations)
        self.attributes = list(attributes)
        self.variables = [v for _, v, _ in self.instances]

    def __len__(self):
        return len(self.instances) + len(self.relations) + len(self.attributes)


def to_triples(g, include_top=True):
    instances = [(INSTANCE_RELATION, v, c) for v, c in g.instances.items()]
    relations = []
    attributes = []
    for p, l, t in g.roles:
        if g.is_var(t):
            relations.append((l, p, t))
        else:
            attributes.append((l, p, t))
    if include_top:
        attributes.append((TOP_RELATION, g.root, g.instances[g.root]))
    return TripleSet(instances, relations, attributes)


class SmatchResult:
    __slots__ = ("precision", "recall", "f_score", "mapping", "matched",
                 "test_size", "gold_size")

    def __init__(self, matched, test_size, gold_size, mapping=None):
        self.matched = matched
        self.test_size = test_size
        self.gold_size = gold_size
        self.mapping = mapping or {}
        self.precision = matched / test_size if test_size else 0.0
        self.recall = matched / gold_size if gold_size else 0.0
        s = self.precision + self.recall
        self.f_score = 2 * self.precision * self.recall / s if s else 0.0

    def __repr__(self):
        return "SmatchResult(P=%.4f R=%.4f F=%.4f)" % (self.precision, self.recall, self.f_score)


class _Matcher:
    """Counts matched triples between a test and a gold triple set under
    a variable mapping (test var -> gold var)."""

    def __init__(self, test, gold):
        self.test = test
        self.gold = gold
        self.gold_instances = Counter((c, v) for _, v, c in gold.instances)
        self.gold_attributes = Counter(gold.attributes)
        self.gold_relations = Counter(gold.relations)
        self.test_vars = test.variables
        self.gold_vars = gold.variables
        # candidate gold variables per test variable, from concept and
        # attribute agreement plus relation label agreement
        cands = {v: set() for v in self.test_vars}
        gold_by_concept = {}
        for _, v, c in gold.instances:
            gold_by_concept.setdefault(c, []).append(v)
        for _, v, c in test.instances:
            for gv in gold_by_concept.get(c, ()):
                cands[v].add(gv)
        gold_by_attr = {}
        for r, v, x in gold.attributes:
            gold_by_attr.setdefault((r, x), []).append(v)
        for r, v, x in test.attributes:
            for gv in gold_by_attr.get((r, x), ()):
                cands[v].add(gv)
        gold_by_rel = {}
        for r, v1, v2 in gold.relations:
            gold_by_rel.setdefault(r, []).append((v1, v2))
        for r, v1, v2 in test.relations:
            for g1, g2 in gold_by_rel.get(r, ()):
                cands[v1].add(g1)
                cands[v2].add(g2)
        self.candidates = {v: sorted(c) for v, c in cands.items()}

    def matched(self, mapping):
        n = 0
        inst = Counter()
        for _, v, c in self.test.instances:
            gv = mapping.get(v)
            if gv is not None:
                inst[(c, gv)] += 1
        n += sum(min(k, self.gold_instances[key]) for key, k in inst.items())
        attrs = Counter()
        for r, v, x in self.test.attributes:
            gv = mapping.get(v)
            if gv is not None:
                attrs[(r, gv, x)] += 1
        n += sum(min(k, self.gold_attributes[key]) for key, k in attrs.items())
        rels = Counter()
        for r, v1, v2 in self.test.relations:
            g1, g2 = mapping.get(v1), mapping.get(v2)
            if g1 is not None and g2 is not None:
                rels[(r, g1, g2)] += 1
        n += sum(min(k, self.gold_relations[key]) for key, k in rels.items())
        return n

    def greedy_start(self):
        """Map variables in order to an unused gold variable with the same
        concept (most frequent concept pairs first come out naturally)."""
        mapping = {}
        used = set()
        gold_concepts = {v: c for _, v, c in self.gold.instances}
        test_concepts = {v: c for _, v, c in self.test.instances}
        for v in self.test_vars:
            for gv in self.candidates[v]:
                if gv not in used and gold_concepts.get(gv) == test_concepts.get(v):
                    mapping[v] = gv
                    used.add(gv)
                    break
        return mapping

    def random_start(self, rng):
        mapping = {}
        used = set()
        for v in self.test_vars:
            pool = [gv for gv in self.candidates[v] if gv not in used]
            pool.append(None)
            gv = rng.choice(pool)
            if gv is not None:
                mapping[v] = gv
                used.add(gv)
        return mapping

    def climb(self, mapping):
        best = self.matched(mapping)
        while True:
            gain_best = 0
            move_best = None
            used = set(mapping.values())
            for v in self.test_vars:
                cur = mapping.get(v)
                options = [gv for gv in self.candidates[v] if gv not in used or gv == cur]
                options.append(None)
                for gv in options:
                    if gv == cur:
                        continue
                    trial = dict(mapping)
                    if gv is None:
                        trial.pop(v, None)
                    else:
                        trial[v] = gv
                    m = self.matched(trial)
                    if m - best > gain_best:
                        gain_best = m - best
                        move_best = trial
            for i in range(len(self.test_vars)):
                for j in range(i + 1, len(self.test_vars)):
                    a, b = self.test_vars[i], self.test_vars[j]
                    if mapping.get(a) == mapping.get(b):
                        continue
                    trial = dict(mapping)
                    va, vb = trial.pop(a, None), trial.pop(b, None)
                    if vb is not None:
                        trial[a] = vb
                    if va is not None:
                        trial[b] = va
                    m = self.matched(trial)
                    if m - best > gain_best:
                        gain_best = m - best
                        move_best = trial
            if move_best is None:
                return mapping, best
            mapping, best = move_best, best + gain_best


def _exact_best(matcher):
    test_vars = matcher.test_vars
    gold_vars = matcher.gold_vars
    if len(test_vars) <= len(gold_vars):
        small, large, invert = test_vars, gold_vars, False
    else:
        small, large, invert = gold_vars, test_vars, True
    total = 1
    for k in range(len(small)):
        total *= len(large) - k
    if total > _EXACT_LIMIT:
        raise ValueError("exact mode infeasible: %d mappings" % total)
    best = -1
    best_mapping = {}
    for perm in permutations(large, len(small)):
        if invert:
            # small holds gold variables; keep the mapping test -> gold
            mapping = {tv: gv for tv, gv in zip(perm, small)}
        else:
            mapping = dict(zip(small, perm))
        m = matcher.matched(mapping)
        if m > best:
            best = m
            best_mapping = mapping
    return best_mapping, best


def smatch_score(test, gold, restarts=4, seed=0, mode="hillclimb", include_top=True):
    """Score a test graph against a gold graph.

    mode 'hillclimb' runs a greedy start plus (restarts - 1) random
    starts; mode 'exact' enumerates all injective variable mappings
    (feasible when the smaller graph has at most ~8 variables).
    """
    ta = to_triples(test, include_top=include_top)
    tb = to_triples(gold, include_top=include_top)
    matcher = _Matcher(ta, tb)
    if mode == "exact":
        mapping, matched = _exact_best(matcher)
    elif mode == "hillclimb":
        rng = random.Random(seed)
        mapping, matched = matcher.climb(matcher.greedy_start())
        for _ in range(max(0, restarts - 1)):
            m2, n2 = matcher.climb(matcher.random_start(rng))
            if n2 > matched:
                mapping, matched = m2, n2
    else:
        raise ValueError("unknown mode %r" % mode)
    return SmatchResult(matched, len(ta), len(tb), mapping)


def smatch_corpus(pairs, restarts=4, seed=0, mode="hillclimb", include_top=True):
    """Document-level smatch over (test, gold) graph pairs.

    Returns (corpus SmatchResult, per-sentence SmatchResult list).
    Matched and total counts aggregate over the corpus; each pair gets a
    deterministic RNG stream derived from the seed."""
    matched = test_size = gold_size = 0
    per_sent = []
    for idx, (test, gold) in enumerate(pairs):
        r = smatch_score(test, gold, restarts=restarts, seed=seed + idx,
                         mode=mode, include_top=include_top)
        per_sent.append(r)
        matched += r.matched
        test_size += r.test_size
        gold_size += r.gold_size
    return SmatchResult(matched, test_size, gold_size), per_sent
