"""AMR graphs and their PENMAN text form.

An AMR is a rooted, labeled, possibly re-entrant DAG.  Each instance
(node) has a variable name, exactly one concept, and an ordered list of
roles.  A role points either at another instance or at a string constant
such as `-`, a number, or a quoted string.

Conventions used throughout this package:
  * string constants keep their surface form verbatim; quoted constants
    keep their surrounding double quotes, so they stay single tokens
    even when they contain spaces
  * a bare alphanumeric filler token is a variable reference and must be
    defined somewhere in the same graph (`imperative`, `expressive` and
    `interrogative` are the only bare word constants we accept, matching
    their conventional use as mode values)
  * disconnected re-entrancies are represented by placeholder instances
    whose concept is `*` and which carry no roles
"""

import re

VAR_RE = re.compile(r"[A-Za-z][A-Za-z0-9]*$")
MODE_CONSTANTS = frozenset({"imperative", "expressive", "interrogative"})
PLACEHOLDER_CONCEPT = "*"

_TOKEN_RE = re.compile(r'"[^"]*"|[()/]|[^\s()/"]+')
_FRAME_RE = re.compile(r"^(.*?)-\d{2,3}$")


class PenmanError(ValueError):
    """Raised for malformed PENMAN input, with source position."""

    def __init__(self, msg, line=None, col=None):
        if line is not None:
            msg = "%s (line %d, column %d)" % (msg, line, col)
        super().__init__(msg)
        self.line = line
        self.col = col


class GraphError(ValueError):
    """Raised when an AmrGraph violates a structural invariant."""


class AmrGraph:
    """Rooted AMR graph: a concept per variable plus an ordered role list.

    Attributes:
        root: variable name of the root instance
        instances: dict variable -> concept label, in first-definition order
        roles: list of (parent variable, role label, target); the target is
            a variable if it is a key of `instances`, otherwise a constant
    """

    __slots__ = ("root", "instances", "roles")

    def __init__(self, root, instances, roles):
        self.root = root
        self.instances = dict(instances)
        self.roles = [tuple(r) for r in roles]

    def is_var(self, target):
        return target in self.instances

    def out_roles(self, var):
        """Ordered (label, target) pairs for one instance."""
        return [(l, t) for (p, l, t) in self.roles if p == var]

    def parent_counts(self):
        counts = {v: 0 for v in self.instances}
        for _, _, t in self.roles:
            if t in counts:
                counts[t] += 1
        return counts

    def is_tree(self):
        """True when no instance has more than one parent."""
        return all(c <= 1 for c in self.parent_counts().values())

    def copy(self):
        return AmrGraph(self.root, self.instances, self.roles)

    def validate(self):
        """Check all invariants; raises GraphError on the first violation."""
        if self.root not in self.instances:
            raise GraphError("root %r has no instance" % (self.root,))
        for p, l, t in self.roles:
            if p not in self.instances:
                raise GraphError("role parent %r is not an instance" % (p,))
        # reachability
        seen = set()
        stack = [self.root]
        while stack:
            v = stack.pop()
            if v in seen:
                continue
            seen.add(v)
            for _, t in self.out_roles(v):
                if t in self.instances:
                    stack.append(t)
        unreachable = [v for v in self.instances if v not in seen]
        if unreachable:
            raise GraphError("instances unreachable from root: %s" % ", ".join(unreachable))
        # acyclicity
        state = {}  # 0 in progress, 1 done

        def visit(v, trail):
            if state.get(v) == 1:
                return
            if state.get(v) == 0:
                raise GraphError("cycle through variable %r" % (v,))
            state[v] = 0
            for _, t in self.out_roles(v):
                if t in self.instances:
                    visit(t, trail)
            state[v] = 1

        visit(self.root, [])
        return self

    def renamed(self):
        """Canonical copy: variables renamed v0, v1, ... in first-visit
        DFS order and role edges listed in DFS pre-order, preserving each
        instance's own role order.  Isomorphic graphs with identical
        per-instance role orders have identical canonical forms."""
        names = {}
        instances = {}
        roles = []

        def visit(v):
            names[v] = "v%d" % len(names)
            instances[names[v]] = self.instances[v]
            for l, t in self.out_roles(v):
                if t in self.instances:
                    if t not in names:
                        roles.append((names[v], l, None, t))
                        visit(t)
                    else:
                        roles.append((names[v], l, None, t))
                else:
                    roles.append((names[v], l, t, None))

        visit(self.root)
        fixed = [(p, l, c if c is not None else names[t]) for (p, l, c, t) in roles]
        return AmrGraph(names[self.root], instances, fixed)

    def __eq__(self, other):
        if not isinstance(other, AmrGraph):
            return NotImplemented
        return (self.root == other.root and self.instances == other.instances
                and self.roles == other.roles)

    def __repr__(self):
        return "AmrGraph(%r, %d instances, %d roles)" % (self.root, len(self.instances), len(self.roles))


def tree_signature(g, var=None):
    """Canonical string for a tree-shaped graph, ignoring variable names
    and sibling role order.  Two tree-shaped graphs are isomorphic as
    unordered AMRs iff their signatures are equal."""
    if var is None:
        if not g.is_tree():
            raise GraphError("signature is only defined for tree-shaped graphs")
        var = g.root
    parts = []
    for l, t in g.out_roles(var):
        if g.is_var(t):
            parts.append("(%s %s)" % (l, tree_signature(g, t)))
        else:
            parts.append("(%s #%s)" % (l, t))
    parts.sort()
    return "(%s%s)" % (g.instances[var], "".join(" " + p for p in parts))


def tree_isomorphic(a, b):
    """Unordered exact isomorphism for tree-shaped graphs."""
    return tree_signature(a) == tree_signature(b)


def _tokenize(text):
    toks = []
    for lineno, line in enumerate(text.split("\n"), start=1):
        for m in _TOKEN_RE.finditer(line):
            toks.append((m.group(0), lineno, m.start() + 1))
    return toks


class _Parser:
    def __init__(self, text):
        self.toks = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.toks[self.pos][0] if self.pos < len(self.toks) else None

    def next(self, what="token"):
        if self.pos >= len(self.toks):
            last = self.toks[-1] if self.toks else (None, 1, 1)
            raise PenmanError("unexpected end of input, expected %s" % what, last[1], last[2])
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def fail(self, msg, tok):
        raise PenmanError(msg, tok[1], tok[2])


def parse_penman(text):
    """Parse one PENMAN block into a validated AmrGraph.

    Raises PenmanError with line/column on: unbalanced parentheses,
    duplicate variable definitions, undefined variable references,
    instances with zero or multiple concepts, and cyclic references.
    """
    p = _Parser(text)
    if not p.toks:
        raise PenmanError("empty input", 1, 1)
    defined = {}
    roles = []       # (parent, label, raw filler token or VARMARK)
    order = []       # variables in definition order
    raw_fillers = [] # (index into roles, token tuple)

    def parse_node():
        opener = p.next("'('")
        if opener[0] != "(":
            p.fail("expected '('", opener)
        var_tok = p.next("variable")
        var = var_tok[0]
        if not VAR_RE.match(var):
            p.fail("invalid variable name %r" % var, var_tok)
        if var in defined:
            p.fail("duplicate definition of variable %r" % var, var_tok)
        defined[var] = None
        order.append(var)
        slash = p.next("'/'")
        if slash[0] != "/":
            p.fail("instance %r has no concept" % var, slash)
        concept_tok = p.next("concept")
        if concept_tok[0] in "()/":
            p.fail("instance %r has no concept" % var, concept_tok)
        defined[var] = concept_tok[0]
        while True:
            tok = p.peek()
            if tok is None:
                last = p.toks[-1]
                raise PenmanError("unbalanced parentheses: missing ')'", last[1], last[2])
            if tok == ")":
                p.next()
                return var
            if tok == "/":
                p.fail("instance %r has multiple concepts" % var, p.next())
            label_tok = p.next("role label")
            label = label_tok[0]
            if not label.startswith(":") or len(label) < 2:
                p.fail("expected a :role label, got %r" % label, label_tok)
            label = label[1:]
            filler = p.peek()
            if filler is None or filler == ")":
                p.fail("role :%s has no filler" % label, label_tok)
            if filler == "(":
                child = parse_node()
                roles.append([var, label, child])
            else:
                ftok = p.next()
                roles.append([var, label, None])
                raw_fillers.append((len(roles) - 1, ftok))

    root = parse_node()
    if p.peek() is not None:
        p.fail("unbalanced parentheses: trailing input", p.toks[p.pos])

    for idx, ftok in raw_fillers:
        value = ftok[0]
        if value.startswith('"'):
            roles[idx][2] = value
        elif VAR_RE.match(value):
            if value in defined:
                roles[idx][2] = value
            elif value in MODE_CONSTANTS:
                roles[idx][2] = value
            else:
                p.fail("undefined variable %r" % value, ftok)
        else:
            roles[idx][2] = value

    instances = {v: defined[v] for v in order}
    g = AmrGraph(root, instances, [tuple(r) for r in roles])
    try:
        g.validate()
    except GraphError as e:
        raise PenmanError(str(e), p.toks[0][1], p.toks[0][2]) from e
    return g


def emit_penman(g, indent=None):
    """Serialize a graph to PENMAN text.

    Variables are renamed v0, v1, ... in first-visit DFS order; the first
    textual mention of a re-entrant variable carries its concept, later
    mentions are bare.  Role order is preserved as stored.
    """
    g.validate()
    names = {}
    expanded = set()

    def name_of(v):
        if v not in names:
            names[v] = "v%d" % len(names)
        return names[v]

    def render(v, depth):
        nm = name_of(v)
        if v in expanded:
            return nm
        expanded.add(v)
        parts = ["(%s / %s" % (nm, g.instances[v])]
        for l, t in g.out_roles(v):
            if indent is None:
                sep = " "
            else:
                sep = "\n" + " " * (indent * (depth + 1))
            if g.is_var(t):
                parts.append("%s:%s %s" % (sep, l, render(t, depth + 1)))
            else:
                parts.append("%s:%s %s" % (sep, l, t))
        parts.append(")")
        return "".join(parts)

    return render(g.root, 0)


class AmrEntry:
    """A corpus entry: graph plus its `#` metadata lines."""

    __slots__ = ("graph", "meta", "raw_meta")

    def __init__(self, graph, meta=None, raw_meta=None):
        self.graph = graph
        self.meta = dict(meta or {})
        self.raw_meta = list(raw_meta or [])


def _parse_meta_line(line, meta):
    body = line.lstrip("#").strip()
    fields = re.split(r"\s::(?=\S)", " " + body)
    for field in fields:
        field = field.strip()
        if field.startswith("::"):
            field = field[2:]
        if not field:
            continue
        key, _, value = field.partition(" ")
        meta[key] = value.strip()


def read_amr_blocks(text):
    """Split corpus text into (meta_lines, penman_text) blocks.

    Blocks are separated by blank lines; `#` lines are metadata."""
    blocks = []
    meta_lines = []
    graph_lines = []
    for line in text.split("\n") + [""]:
        if not line.strip():
            if graph_lines:
                blocks.append((meta_lines, "\n".join(graph_lines)))
            meta_lines, graph_lines = [], []
        elif line.lstrip().startswith("#"):
            meta_lines.append(line)
        else:
            graph_lines.append(line)
    return blocks


def read_amr_corpus(path_or_text, from_path=True):
    """Read a PENMAN corpus file into AmrEntry objects."""
    if from_path:
        with open(path_or_text, encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = path_or_text
    entries = []
    for meta_lines, block in read_amr_blocks(text):
        meta = {}
        for line in meta_lines:
            if line.lstrip().startswith("# ::") or "::" in line:
                _parse_meta_line(line, meta)
        entries.append(AmrEntry(parse_penman(block), meta, meta_lines))
    return entries


def write_amr_corpus(path, entries, indent=4):
    with open(path, "w", encoding="utf-8") as fh:
        for entry in entries:
            for line in entry.raw_meta:
                fh.write(line + "\n")
            fh.write(emit_penman(entry.graph, indent=indent) + "\n\n")


def concept_lemma(concept):
    """Lemma used for taxonomy lookups: quotes stripped, frame sense
    suffixes like -01 removed."""
    if concept.startswith('"') and concept.endswith('"'):
        concept = concept[1:-1]
    m = _FRAME_RE.match(concept)
    if m and m.group(1):
        return m.group(1)
    return concept
