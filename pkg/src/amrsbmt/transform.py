"""AMR-to-tree transforms and their deterministic inverse.

The forward pipeline turns a (possibly re-entrant) AMR into an ordered
tree suitable for string-to-tree rule extraction:

    disconnect    break multi-parent links, leaving `*` placeholders
    push_labels   concepts and role labels become leaves under unlabeled
                  `X` nodes, role label immediately before its filler
    reorder       greedy bottom-up child permutation toward the source
                  word order (never increases alignment crossings)
    restructure   instance-outward binarization so no node keeps more
                  than three children (modes: concept / role intermediates)
    relabel_strings   string-filler preterminals renamed S<role>

`to_amr` inverts any composition of push_labels, reorder, restructure,
relabel_strings and semantic-category relabeling back to the tree-shaped
graph.  Re-entrancies removed by `disconnect` are not recovered.
"""

from .alignments import count_crossings
from .graph import AmrGraph, GraphError, PLACEHOLDER_CONCEPT
from .tree import Tree

PRETERMINAL_MARKER = "P"
INSTANCE_LABEL = "X"
ROOT_LABEL = "ROOT"
STRING_PRETERMINAL_PREFIX = "S"


class TransformError(ValueError):
    pass


def disconnect(g):
    """Break all but one parent link per instance.

    The kept parent is the first one reached in a depth-first traversal
    from the root following role order; every other role edge pointing at
    the instance is retargeted to a fresh placeholder instance with
    concept `*` and no roles.  Already-tree graphs come back unchanged
    (as a copy).
    """
    g.validate()
    visited = set()
    instances = {}
    roles = []
    fresh = [0]
    existing = set(g.instances)

    def fresh_var():
        while True:
            v = "p%d" % fresh[0]
            fresh[0] += 1
            if v not in existing:
                existing.add(v)
                return v

    def visit(v):
        visited.add(v)
        instances[v] = g.instances[v]
        for l, t in g.out_roles(v):
            if not g.is_var(t):
                roles.append((v, l, t))
            elif t in visited:
                ph = fresh_var()
                instances[ph] = PLACEHOLDER_CONCEPT
                roles.append((v, l, ph))
            else:
                roles.append((v, l, t))
                visit(t)

    visit(g.root)
    return AmrGraph(g.root, instances, roles).validate()


def _preterminal(terminal, var=None, edge=None):
    return Tree(terminal + PRETERMINAL_MARKER, [terminal], var=var, edge=edge)


def push_labels(g):
    """Turn a tree-shaped graph into an ordered tree with leaf labels.

    Each instance becomes an `X` node whose children are: the concept as
    a leaf under a `<concept>P` preterminal, then one (role label leaf,
    filler subtree) pair per role in role order.  Role label leaves get
    `<label>P` preterminals; string fillers get a bare `X` preterminal.
    """
    if not g.is_tree():
        raise TransformError("input has a re-entrant node; disconnect first")
    g.validate()

    def build(v):
        kids = [_preterminal(g.instances[v], var=v)]
        occ = {}
        for l, t in g.out_roles(v):
            k = occ.get(l, 0)
            occ[l] = k + 1
            kids.append(_preterminal(l, edge=(v, l, k)))
            if g.is_var(t):
                kids.append(build(t))
            else:
                kids.append(Tree(INSTANCE_LABEL, [t]))
        return Tree(INSTANCE_LABEL, kids, var=v)

    return build(g.root)


def _is_string_filler(node, role):
    if isinstance(node, str) or not node.is_preterminal:
        return False
    return node.label in (INSTANCE_LABEL, STRING_PRETERMINAL_PREFIX + role)


def _is_filler(node, role):
    if isinstance(node, str):
        return False
    if node.is_preterminal:
        return _is_string_filler(node, role)
    return True


def scan_units(children):
    """Classify a node's children into units.

    Yields ('role', i) for a role-label preterminal at i whose filler sits
    at i+1, ('concept', i) for a standalone preterminal, and ('sub', i)
    for an internal child that is not a filler (a binarization
    intermediate).  Role label and filler always move as one unit.
    """
    i = 0
    n = len(children)
    while i < n:
        c = children[i]
        if isinstance(c, str):
            raise TransformError("bare terminal %r outside a preterminal" % c)
        if c.is_preterminal:
            term = c.children[0]
            nxt = children[i + 1] if i + 1 < n else None
            if c.label == term + PRETERMINAL_MARKER and nxt is not None and _is_filler(nxt, term):
                yield ("role", i)
                i += 2
                continue
            yield ("concept", i)
            i += 1
        else:
            yield ("sub", i)
            i += 1


def _units_flat(children):
    """Like scan_units but splices intermediates, yielding
    ('concept', preterm) and ('role', label_preterm, filler) units."""
    for kind, i in scan_units(children):
        if kind == "role":
            yield ("role", children[i], children[i + 1])
        elif kind == "concept":
            yield ("concept", children[i])
        else:
            yield from _units_flat(children[i].children)


def restructure(t, mode):
    """Binarize instance nodes instance-outward so that every internal
    node keeps at most three children.

    Role units attach one per level, nearest to the concept leaf first in
    the current child order (left unit before right on ties); a unit that
    sat left of the concept attaches as (label, filler, inner), a right
    unit as (inner, label, filler), so the terminal yield is unchanged.
    Intermediate nodes take the instance's concept as label in `concept`
    mode, or the instance's incoming role label (`ROOT` at the root) in
    `role` mode.
    """
    if mode not in ("concept", "role"):
        raise TransformError("unknown restructure mode %r" % mode)

    def walk(node, incoming):
        units = []
        for unit in _units_flat(node.children):
            if unit[0] == "role":
                label_pre, filler = unit[1], unit[2]
                role = label_pre.children[0]
                if isinstance(filler, Tree) and not filler.is_preterminal:
                    filler = walk(filler, role)
                units.append(("role", label_pre, filler))
            else:
                units.append(unit)
        concept_positions = [k for k, u in enumerate(units) if u[0] == "concept"]
        if len(concept_positions) != 1:
            raise TransformError("instance node with %d concept leaves" % len(concept_positions))
        cpos = concept_positions[0]
        role_units = [k for k, u in enumerate(units) if u[0] == "role"]
        if len(role_units) <= 1:
            kids = []
            for u in units:
                kids.extend(u[1:])
            return Tree(node.label, kids, var=node.var)
        if mode == "concept":
            inter_label = units[cpos][1].children[0]
        else:
            inter_label = incoming
        order = sorted(role_units, key=lambda k: (abs(k - cpos), 0 if k < cpos else 1))
        inner = units[cpos][1]
        for step, k in enumerate(order):
            _, label_pre, filler = units[k]
            last = step == len(order) - 1
            label = node.label if last else inter_label
            if k < cpos:
                inner = Tree(label, [label_pre, filler, inner])
            else:
                inner = Tree(label, [inner, label_pre, filler])
        inner.var = node.var
        return inner

    if isinstance(t, Tree) and t.is_preterminal:
        return t.copy()
    return walk(t, ROOT_LABEL)


def relabel_strings(t):
    """Rename string-filler preterminals from `X` to `S<role>`."""

    def walk(node):
        if isinstance(node, str) or node.is_preterminal:
            return node
        kids = list(node.children)
        for kind, i in list(scan_units(kids)):
            if kind == "role":
                role = kids[i].children[0]
                filler = kids[i + 1]
                if (isinstance(filler, Tree) and filler.is_preterminal
                        and filler.label == INSTANCE_LABEL):
                    kids[i + 1] = Tree(STRING_PRETERMINAL_PREFIX + role, list(filler.children))
                else:
                    kids[i + 1] = walk(filler)
            elif kind == "sub":
                kids[i] = walk(kids[i])
        out = Tree(node.label, kids, var=node.var, edge=node.edge)
        return out

    return walk(t)


def _subtree_links(node, link_index):
    """(source index, leaf offset) pairs for one subtree, plus leaf count."""
    links = []
    count = [0]

    def walk(n):
        if isinstance(n, str):
            count[0] += 1
            return
        if n.is_preterminal:
            for key in ((("inst", n.var),) if n.var is not None else ()) + \
                       ((("role",) + n.edge,) if n.edge is not None else ()):
                for tok in link_index.get(key, ()):
                    links.append((tok, count[0]))
            count[0] += 1
            return
        for c in n.children:
            walk(c)

    walk(node)
    return links, count[0]


def reorder(t, aset):
    """Greedy bottom-up reordering toward the source word order.

    At each internal node the child units (the concept preterminal, and
    each role-label-plus-filler pair) are stably sorted by the mean
    source position of the tokens aligned into the unit's subtree; a unit
    with no aligned tokens inherits the key of its nearest aligned
    preceding sibling (or -inf at the front).  The permutation is kept
    only if it does not increase the crossing count of the node's subtree
    links, so reordering never increases total crossings.

    Returns (reordered tree, alignment); the alignment is unchanged since
    links address AMR elements, but its leaf projection follows the new
    order.
    """
    link_index = {}
    for tok, el in aset.links:
        link_index.setdefault(el, []).append(tok)
    # fail fast on dangling references
    aset.project(t)

    def walk(node):
        if isinstance(node, str) or node.is_preterminal:
            return node
        if any(kind == "sub" for kind, _ in scan_units(node.children)):
            raise TransformError("reorder requires an unrestructured tree")
        units = []
        for unit in _units_flat(node.children):
            if unit[0] == "role":
                units.append(("role", unit[1], walk(unit[2])))
            else:
                units.append(unit)
        keys = []
        prev = float("-inf")
        infos = []
        for u in units:
            links = []
            total = 0
            for part in u[1:]:
                part_links, n = _subtree_links(part, link_index)
                links.append((part_links, total))
                total += n
            merged = [(tok, off + base) for part_links, base in links for tok, off in part_links]
            infos.append((merged, total))
            if merged:
                prev = sum(tok for tok, _ in merged) / len(merged)
            keys.append(prev)
        order = sorted(range(len(units)), key=lambda k: keys[k])

        def layout(perm):
            out = []
            base = 0
            for k in perm:
                merged, total = infos[k]
                out.extend((tok, base + off) for tok, off in merged)
                base += total
            return out

        before = count_crossings(layout(range(len(units))))
        after = count_crossings(layout(order))
        if after > before:
            order = list(range(len(units)))
        kids = []
        for k in order:
            kids.extend(units[k][1:])
        return Tree(node.label, kids, var=node.var)

    return walk(t), aset


def to_amr(t):
    """Rebuild the tree-shaped AMR from any transformed tree.

    Undoes binarization and relabeling, pairs each role label with its
    adjacent filler, and assigns fresh variables v0, v1, ... in
    depth-first order.
    """
    instances = {}
    roles = []

    def build(node):
        if isinstance(node, str):
            raise TransformError("bare terminal %r where an instance was expected" % node)
        var = "v%d" % len(instances)
        if node.is_preterminal:
            instances[var] = node.children[0]
            return var
        instances[var] = None
        pending = []
        concept = None
        for unit in _units_flat(node.children):
            if unit[0] == "concept":
                if concept is not None:
                    pre = unit[1]
                    if pre.label == pre.children[0] + PRETERMINAL_MARKER:
                        raise TransformError("role label %r with no adjacent filler" % pre.children[0])
                    raise TransformError("internal node with multiple concepts")
                concept = unit[1].children[0]
            else:
                pending.append((unit[1].children[0], unit[2]))
        if concept is None:
            raise TransformError("internal node with no concept")
        instances[var] = concept
        for role, filler in pending:
            if isinstance(filler, Tree) and filler.is_preterminal:
                # string filler: X or S<role> preterminal over a constant
                roles.append((var, role, filler.children[0]))
            else:
                roles.append((var, role, build(filler)))
        return var

    root = build(t)
    g = AmrGraph(root, instances, roles)
    try:
        g.validate()
    except GraphError as e:
        raise TransformError(str(e)) from e
    return g


def yield_amrese(t):
    """Left-to-right terminal sequence of a tree."""
    return t.leaves()


def pipeline(g, aset=None, restructure_mode="role", relabel=True, do_reorder=True,
             taxonomy=None):
    """Apply the full forward pipeline to one graph.

    Returns (tree, disconnected graph).  `restructure_mode` may be
    'flat' (no restructuring), 'concept' or 'role'.  Reordering happens
    only when an alignment is supplied and `do_reorder` is set; semantic
    categories are applied when a taxonomy is supplied.
    """
    gd = disconnect(g)
    t = push_labels(gd)
    if do_reorder and aset is not None:
        t, _ = reorder(t, aset)
    if restructure_mode in ("concept", "role"):
        t = restructure(t, restructure_mode)
    elif restructure_mode != "flat":
        raise TransformError("unknown restructure mode %r" % restructure_mode)
    if relabel:
        t = relabel_strings(t)
    if taxonomy is not None:
        from .semcat import apply_categories
        t = apply_categories(t, taxonomy)
    return t, gd
