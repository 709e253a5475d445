"""Ordered labeled trees in the string-to-tree style.

Internal nodes have a nonterminal label and a list of children; children
are either Tree objects or plain strings (terminals).  A preterminal is a
node whose single child is a terminal.

Nodes produced by the AMR transforms carry two optional annotations used
to project word alignments onto leaves:
  * `var`  on concept preterminals and instance nodes: the AMR variable
  * `edge` on role-label preterminals: (parent variable, label, occurrence)

Serialization is the usual bracketed form `(LABEL child ...)`; terminals
are written verbatim, and double-quoted terminals (which may contain
spaces) are read back as single tokens.
"""

import re

_TOKEN_RE = re.compile(r'"[^"]*"|[()]|[^\s()"]+')


class TreeError(ValueError):
    pass


class Tree:
    __slots__ = ("label", "children", "var", "edge")

    def __init__(self, label, children=None, var=None, edge=None):
        self.label = label
        self.children = list(children) if children is not None else []
        self.var = var
        self.edge = edge

    @property
    def is_preterminal(self):
        return len(self.children) == 1 and isinstance(self.children[0], str)

    def leaves(self):
        """Terminal tokens, left to right."""
        out = []
        stack = [self]
        while stack:
            node = stack.pop()
            if isinstance(node, str):
                out.append(node)
            else:
                stack.extend(reversed(node.children))
        return out

    def internal_nodes(self):
        """All Tree nodes in preorder (includes preterminals)."""
        out = []
        stack = [self]
        while stack:
            node = stack.pop()
            if isinstance(node, Tree):
                out.append(node)
                stack.extend(reversed(node.children))
        return out

    def copy(self):
        kids = [c.copy() if isinstance(c, Tree) else c for c in self.children]
        return Tree(self.label, kids, var=self.var, edge=self.edge)

    def __str__(self):
        parts = [self.label]
        for c in self.children:
            parts.append(str(c) if isinstance(c, Tree) else c)
        return "(%s)" % " ".join(parts)

    def __repr__(self):
        return "Tree(%s)" % str(self)


def tree_equal(a, b):
    """Structural equality on labels and children; annotations ignored."""
    if isinstance(a, str) or isinstance(b, str):
        return a == b
    if a.label != b.label or len(a.children) != len(b.children):
        return False
    return all(tree_equal(x, y) for x, y in zip(a.children, b.children))


def parse_tree(text):
    """Read one bracketed tree."""
    toks = _TOKEN_RE.findall(text)
    if not toks:
        raise TreeError("empty tree text")
    pos = 0

    def parse_node():
        nonlocal pos
        if toks[pos] != "(":
            raise TreeError("expected '(' at token %d (%r)" % (pos, toks[pos]))
        pos += 1
        if pos >= len(toks) or toks[pos] in "()":
            raise TreeError("missing node label at token %d" % pos)
        node = Tree(toks[pos])
        pos += 1
        while True:
            if pos >= len(toks):
                raise TreeError("unbalanced parentheses")
            tok = toks[pos]
            if tok == ")":
                pos += 1
                return node
            if tok == "(":
                node.children.append(parse_node())
            else:
                node.children.append(tok)
                pos += 1

    root = parse_node()
    if pos != len(toks):
        raise TreeError("trailing input after tree")
    return root


def read_tree_file(path):
    """One bracketed tree per non-empty line."""
    trees = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                trees.append(parse_tree(line))
    return trees


def write_tree_file(path, trees):
    with open(path, "w", encoding="utf-8") as fh:
        for t in trees:
            fh.write(str(t) + "\n")
