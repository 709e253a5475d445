"""Word alignments between source tokens and AMR elements.

A link connects a 0-based source token index to an AMR element: either an
instance, addressed by its variable, or a role edge, addressed by
(parent variable, label, occurrence index) where the occurrence index
counts repeated uses of the same label under the same parent, in role
order.

File format: one sentence per line, space-separated `tokIdx-elementPath`
items where elementPath is `var` for an instance and `var.role.k` for the
k-th (0-based) occurrence of `role` under `var`.  Addresses survive the
disconnection transform unchanged, so alignments produced against the
original graphs remain valid on their tree-shaped forms.

Leaf-projected alignments (plain `i-j` token/leaf index pairs, one
sentence per line) are the form consumed by rule extraction.
"""


def instance_ref(var):
    return ("inst", var)


def role_ref(var, label, occ):
    return ("role", var, label, occ)


class AlignmentSet:
    """Links from source token indices to AMR elements, in file order."""

    __slots__ = ("links",)

    def __init__(self, links=None):
        self.links = list(links or [])

    @classmethod
    def parse(cls, line):
        links = []
        for item in line.split():
            tok, _, path = item.partition("-")
            if not _ or not tok.isdigit():
                raise ValueError("bad alignment item %r" % item)
            parts = path.split(".")
            if len(parts) == 1:
                links.append((int(tok), instance_ref(parts[0])))
            elif len(parts) == 3 and parts[2].isdigit():
                links.append((int(tok), role_ref(parts[0], parts[1], int(parts[2]))))
            else:
                raise ValueError("bad element path %r" % path)
        return cls(links)

    def format(self):
        items = []
        for tok, el in self.links:
            if el[0] == "inst":
                items.append("%d-%s" % (tok, el[1]))
            else:
                items.append("%d-%s.%s.%d" % (tok, el[1], el[2], el[3]))
        return " ".join(items)

    def validate(self, graph, source_len=None):
        """Check that every element exists in `graph` and indices fit."""
        occ = {}
        for p, l, _ in graph.roles:
            occ[(p, l)] = occ.get((p, l), 0) + 1
        for tok, el in self.links:
            if source_len is not None and not (0 <= tok < source_len):
                raise ValueError("token index %d out of range" % tok)
            if el[0] == "inst":
                if el[1] not in graph.instances:
                    raise ValueError("alignment references unknown instance %r" % (el[1],))
            else:
                _, var, label, k = el
                if occ.get((var, label), 0) <= k:
                    raise ValueError("alignment references unknown role %s.%s.%d" % (var, label, k))
        return self

    def project(self, tree):
        """Project onto tree leaves as (source index, leaf index) pairs.

        Instances project to their concept leaf, role edges to their role
        label leaf.  Raises ValueError if an element is absent from the
        tree."""
        var_leaf = {}
        edge_leaf = {}
        idx = 0
        stack = [tree]
        # leaf indices by an explicit left-to-right walk
        def walk(node):
            nonlocal idx
            if isinstance(node, str):
                idx += 1
                return
            if node.is_preterminal:
                if node.var is not None:
                    var_leaf[node.var] = idx
                if node.edge is not None:
                    edge_leaf[node.edge] = idx
                idx += 1
                return
            for c in node.children:
                walk(c)

        walk(tree)
        out = []
        for tok, el in self.links:
            if el[0] == "inst":
                if el[1] not in var_leaf:
                    raise ValueError("alignment references instance %r absent from tree" % (el[1],))
                out.append((tok, var_leaf[el[1]]))
            else:
                key = (el[1], el[2], el[3])
                if key not in edge_leaf:
                    raise ValueError("alignment references role %s.%s.%d absent from tree" % key)
                out.append((tok, edge_leaf[key]))
        return out

    def __len__(self):
        return len(self.links)


def count_crossings(links):
    """Number of link pairs (i, j), (i', j') with i < i' and j > j'.

    Links aligned to the same source or target position never cross each
    other under this strict definition; every link counts independently.
    """
    n = 0
    links = list(links)
    for a in range(len(links)):
        i, j = links[a]
        for b in range(a + 1, len(links)):
            i2, j2 = links[b]
            if (i < i2 and j > j2) or (i2 < i and j2 > j):
                n += 1
    return n


def read_alignment_file(path):
    with open(path, encoding="utf-8") as fh:
        return [AlignmentSet.parse(line.strip()) for line in fh]


def write_alignment_file(path, alignment_sets):
    with open(path, "w", encoding="utf-8") as fh:
        for a in alignment_sets:
            fh.write(a.format() + "\n")


def read_leaf_alignment_file(path):
    """Plain `i-j` pairs per line."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            pairs = []
            for item in line.split():
                i, _, j = item.partition("-")
                pairs.append((int(i), int(j)))
            out.append(pairs)
    return out


def write_leaf_alignment_file(path, links_per_sentence):
    with open(path, "w", encoding="utf-8") as fh:
        for links in links_per_sentence:
            fh.write(" ".join("%d-%d" % (i, j) for i, j in links) + "\n")
