"""Semantic categories over a small is-a taxonomy.

Each concept lemma owns a list of senses, each attached to a taxonomy
node with a raw example count.  To categorize a concept we smooth each
sense count (adding 0.1), propagate the counts upward edge by edge,
summing where paths meet, and score every salient category s reached as

    weight(s) = propagated count at s / prevalence(s)

where prevalence(s) counts the concept types (over the whole sense
vocabulary, computed once at load) for which s received any propagated
count.  The concept is assigned the highest scoring salient category;
ties prefer the deeper category, then the lexicographically smaller
name.  Unknown lemmas fall back to the category OTHER.

Because counts are pushed along every edge, a sense below a diamond
contributes once per distinct upward path; that is the intended reading
of combining counts at join points.

File formats: hierarchy.tsv has `child<TAB>parent` lines (a node may have
several parents, the graph must be acyclic); senses.tsv has
`lemma<TAB>category<TAB>count` lines (duplicate lemma/category lines sum
their counts); salient.txt lists one category per line.
"""

from .tree import Tree
from .transform import scan_units

FALLBACK_CATEGORY = "OTHER"
SMOOTHING = 0.1


class TaxonomyError(ValueError):
    pass


class SemanticTaxonomy:
    __slots__ = ("parents", "salient", "senses", "prevalence", "depth",
                 "_topo", "_assign_cache")

    def __init__(self, parents, salient, senses):
        self.parents = parents          # node -> list of parent nodes
        self.salient = list(salient)
        self.senses = senses            # lemma -> list of (node, raw count)
        self._topo = self._topo_order()
        self.depth = self._depths()
        self._assign_cache = {}
        self.prevalence = {}
        for lemma in self.senses:
            prop = self.propagate(lemma)
            for s in self.salient:
                if prop.get(s, 0.0) > 0.0:
                    self.prevalence[s] = self.prevalence.get(s, 0) + 1

    @property
    def nodes(self):
        return list(self.parents)

    def _topo_order(self):
        """Children before parents; raises on cycles."""
        indeg = {v: 0 for v in self.parents}
        for v, ps in self.parents.items():
            for p in ps:
                indeg[p] += 1
        # count children edges into each node: edge child -> parent
        pending = dict(indeg)
        order = []
        ready = [v for v, d in pending.items() if d == 0]
        while ready:
            v = ready.pop()
            order.append(v)
            for p in self.parents[v]:
                pending[p] -= 1
                if pending[p] == 0:
                    ready.append(p)
        if len(order) != len(self.parents):
            raise TaxonomyError("cycle in taxonomy hierarchy")
        return order

    def _depths(self):
        """Longest distance from any top node (one with no parents)."""
        depth = {}
        for v in reversed(self._topo):  # parents before children
            ps = self.parents[v]
            depth[v] = 0 if not ps else 1 + max(depth[p] for p in ps)
        return depth

    def propagate(self, lemma):
        """Propagated smoothed counts for one lemma at every reached node."""
        acc = {}
        for node, raw in self.senses.get(lemma, ()):
            acc[node] = acc.get(node, 0.0) + raw + SMOOTHING
        if not acc:
            return {}
        for v in self._topo:
            amount = acc.get(v)
            if amount:
                for p in self.parents[v]:
                    acc[p] = acc.get(p, 0.0) + amount
        return acc


def load_taxonomy(hierarchy_path, senses_path, salient_path):
    parents = {}

    def ensure(node):
        if node not in parents:
            parents[node] = []

    with open(hierarchy_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise TaxonomyError("malformed hierarchy line %d: %r" % (lineno, line))
            child, parent = parts
            ensure(child)
            ensure(parent)
            if parent not in parents[child]:
                parents[child].append(parent)

    senses = {}
    with open(senses_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise TaxonomyError("malformed senses line %d: %r" % (lineno, line))
            lemma, node, count = parts
            if node not in parents:
                raise TaxonomyError("senses line %d attaches %r to unknown node %r"
                                    % (lineno, lemma, node))
            try:
                value = float(count)
            except ValueError:
                raise TaxonomyError("malformed count on senses line %d: %r" % (lineno, count))
            bucket = senses.setdefault(lemma, [])
            for i, (n, c) in enumerate(bucket):
                if n == node:
                    bucket[i] = (n, c + value)
                    break
            else:
                bucket.append((node, value))

    salient = []
    with open(salient_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            name = line.strip()
            if not name or name.startswith("#"):
                continue
            if name not in parents:
                raise TaxonomyError("salient line %d names unknown category %r" % (lineno, name))
            if name not in salient:
                salient.append(name)

    return SemanticTaxonomy(parents, salient, senses)


def assign_category(tax, lemma):
    """Best salient category for a lemma, or OTHER."""
    if lemma in tax._assign_cache:
        return tax._assign_cache[lemma]
    prop = tax.propagate(lemma)
    best = None
    for s in tax.salient:
        count = prop.get(s, 0.0)
        if count <= 0.0:
            continue
        weight = count / tax.prevalence[s]
        key = (weight, tax.depth[s])
        if best is None or key > best[0] or (key == best[0] and s < best[1]):
            best = (key, s)
    result = best[1] if best is not None else FALLBACK_CATEGORY
    tax._assign_cache[lemma] = result
    return result


def apply_categories(t, tax):
    """Replace concept preterminal labels with assigned categories.

    Role labels, string fillers and all structure stay untouched, so the
    tree still converts back to the same graph."""
    from .graph import concept_lemma

    def walk(node):
        if isinstance(node, str):
            return node
        if node.is_preterminal:
            return node
        kids = list(node.children)
        for kind, i in list(scan_units(kids)):
            if kind == "concept":
                pre = kids[i]
                category = assign_category(tax, concept_lemma(pre.children[0]))
                kids[i] = Tree(category, list(pre.children), var=pre.var)
            elif kind == "role":
                kids[i + 1] = walk(kids[i + 1])
            else:
                kids[i] = walk(kids[i])
        return Tree(node.label, kids, var=node.var, edge=node.edge)

    return walk(t)
