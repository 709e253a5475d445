"""Shared test utilities: random graph and alignment generators."""

import os

from amrsbmt.alignments import AlignmentSet, instance_ref, role_ref
from amrsbmt.graph import AmrGraph, parse_penman

DATA_DIR = os.path.join(os.path.dirname(__file__), "..", "data")

CONCEPTS = ["fear-01", "die-01", "soldier", "dog", "cat", "run-02", "see-01",
            "house", "book", "want-01", "child", "go-02"]
LABELS = ["ARG0", "ARG1", "ARG2", "mod", "poss", "time"]
CONSTANTS = ["-", "3", '"new york"', "interrogative"]

SOLDIER_PENMAN = "(f / fear-01 :ARG0 (s / soldier) :ARG1 (d / die-01 :ARG1 s) :polarity -)"


def soldier_graph():
    return parse_penman(SOLDIER_PENMAN)


def random_graph(rng, max_instances=8, p_constant=0.25, p_reentrant=0.2):
    """Random valid AmrGraph: a random instance tree plus optional
    re-entrant edges that keep the graph acyclic."""
    n = rng.randint(1, max_instances)
    variables = ["g%d" % i for i in range(n)]
    instances = {v: rng.choice(CONCEPTS) for v in variables}
    roles = []
    for i in range(1, n):
        parent = variables[rng.randrange(i)]
        roles.append((parent, rng.choice(LABELS), variables[i]))
    for v in variables:
        if rng.random() < p_constant:
            roles.append((v, rng.choice(LABELS), rng.choice(CONSTANTS)))
    if n > 1 and rng.random() < p_reentrant:
        for _ in range(rng.randint(1, 2)):
            parent = rng.choice(variables)
            target = rng.choice(variables)
            g = AmrGraph(variables[0], instances, roles + [(parent, rng.choice(LABELS), target)])
            try:
                g.validate()
            except ValueError:
                continue
            roles = g.roles
    rng.shuffle(roles)
    # keep a parse-order-compatible arrangement: children edges must exist;
    # role list order is free, reorder deterministically by parent depth
    g = AmrGraph(variables[0], instances, roles)
    g.validate()
    return g


def random_alignment(rng, graph, source_len=None, density=0.7):
    """Random alignment into a graph; returns (source length, AlignmentSet)."""
    elements = [instance_ref(v) for v in graph.instances]
    occ = {}
    for p, l, _ in graph.roles:
        k = occ.get((p, l), 0)
        occ[(p, l)] = k + 1
        elements.append(role_ref(p, l, k))
    if source_len is None:
        source_len = max(2, len(elements) + rng.randint(-1, 3))
    links = []
    for el in elements:
        if rng.random() < density:
            links.append((rng.randrange(source_len), el))
    links.sort(key=lambda x: (x[0], str(x[1])))
    return source_len, AlignmentSet(links)


def toy_path(name):
    return os.path.join(DATA_DIR, "toy", name)


def taxonomy_paths():
    d = os.path.join(DATA_DIR, "taxonomy")
    return (os.path.join(d, "hierarchy.tsv"), os.path.join(d, "senses.tsv"),
            os.path.join(d, "salient.txt"))
