"""String-to-tree rule extraction from aligned (sentence, tree) pairs.

A node of the target tree is a frontier node when the contiguous closure
of its aligned source span does not intersect the source positions
aligned outside its subtree; the root is always frontier.  One minimal
rule is extracted per frontier node with a nonempty span: its target
fragment reaches down to the nearest such descendants, which become
variable sites, and its source side covers the node's closure span with
each descendant's closure span collapsed into the matching variable.
Unaligned source tokens attach as terminals to the lowest rule whose
span contains them; tokens outside every closure span attach to the
root rule, whose span is widened to the whole sentence.

Variables are numbered x0, x1, ... left to right on the source side.
Grammar files store one rule per line as

    rootLabel <TAB> source side <TAB> target fragment <TAB> feat=val,...

with variable sites written `xk:LABEL`; loading and saving round-trips
bit-exactly.
"""

import math
import re
from collections import Counter

from .tree import Tree, parse_tree

SITE_RE = re.compile(r"^x(\d+):(.+)$")


class ExtractionError(ValueError):
    pass


def _is_site(leaf):
    return isinstance(leaf, str) and SITE_RE.match(leaf) is not None


class TranslationRule:
    """One string-to-tree rule.

    src is a tuple of source symbols: terminal strings and integer
    variable indices.  tgt is the target fragment whose variable sites
    are leaves `xk:LABEL`; var_labels[k] is the root label required of
    the k-th substituted child."""

    __slots__ = ("root", "src", "tgt", "var_labels", "features")

    def __init__(self, root, src, tgt, var_labels, features=None):
        self.root = root
        self.src = tuple(src)
        self.tgt = tgt
        self.var_labels = tuple(var_labels)
        self.features = dict(features or {})

    @property
    def n_vars(self):
        return len(self.var_labels)

    @property
    def src_terminals(self):
        return [s for s in self.src if isinstance(s, str)]

    def src_string(self):
        return " ".join("x%d" % s if isinstance(s, int) else s for s in self.src)

    def tgt_string(self):
        return str(self.tgt)

    def key(self):
        return (self.root, self.src, self.tgt_string())

    def __repr__(self):
        return "TranslationRule(%s -> %s / %s)" % (self.root, self.src_string(), self.tgt_string())


class RuleGrammar:
    """Rule store with duplicate merging, indexed by root label and by
    leftmost source terminal (None for all-variable sides)."""

    def __init__(self):
        self.rules = []
        self._by_key = {}
        self.by_root = {}
        self.by_first_terminal = {}

    def add(self, rule, count=1.0):
        key = rule.key()
        existing = self._by_key.get(key)
        if existing is not None:
            existing.features["count"] = existing.features.get("count", 0.0) + count
            return existing
        rule.features.setdefault("count", count)
        self.rules.append(rule)
        self._by_key[key] = rule
        self.by_root.setdefault(rule.root, []).append(rule)
        terms = rule.src_terminals
        self.by_first_terminal.setdefault(terms[0] if terms else None, []).append(rule)
        return rule

    def __len__(self):
        return len(self.rules)

    def candidates(self, tokens):
        """Rules whose leftmost source terminal occurs among `tokens`,
        plus the all-variable rules."""
        seen = set(tokens)
        out = list(self.by_first_terminal.get(None, ()))
        for tok in sorted(seen):
            out.extend(self.by_first_terminal.get(tok, ()))
        return out

    def source_vocabulary(self):
        vocab = set()
        for r in self.rules:
            vocab.update(r.src_terminals)
        return vocab

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("# amrsbmt-grammar v1\n")
            for r in self.rules:
                feats = ",".join("%s=%s" % (k, repr(v)) for k, v in sorted(r.features.items()))
                fh.write("%s\t%s\t%s\t%s\n" % (r.root, r.src_string(), r.tgt_string(), feats))

    @classmethod
    def load(cls, path):
        g = cls()
        with open(path, encoding="utf-8") as fh:
            header = fh.readline()
            if not header.startswith("# amrsbmt-grammar v1"):
                raise ExtractionError("unrecognized grammar file header in %s" % path)
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                root, src_text, tgt_text, feat_text = line.split("\t")
                tgt = parse_tree(tgt_text)
                var_labels = _site_labels(tgt)
                src = []
                for tok in src_text.split(" "):
                    if re.match(r"^x\d+$", tok) and int(tok[1:]) < len(var_labels):
                        src.append(int(tok[1:]))
                    else:
                        src.append(tok)
                features = {}
                if feat_text:
                    for item in feat_text.split(","):
                        k, _, v = item.partition("=")
                        features[k] = float(v)
                rule = TranslationRule(root, src, tgt, var_labels, features)
                count = features.pop("count", 1.0)
                rule.features = features
                g.add(rule, count=count)
        return g


def _site_labels(tgt):
    found = {}

    def walk(node):
        for c in node.children:
            if isinstance(c, str):
                m = SITE_RE.match(c)
                if m:
                    found[int(m.group(1))] = m.group(2)
            else:
                walk(c)

    walk(tgt)
    labels = []
    for k in range(len(found)):
        if k not in found:
            raise ExtractionError("non-contiguous variable numbering in fragment")
        labels.append(found[k])
    return labels


class _NodeInfo:
    __slots__ = ("node", "span", "lo", "hi", "frontier", "children")

    def __init__(self, node):
        self.node = node
        self.span = Counter()  # multiset of aligned source indices
        self.lo = None
        self.hi = None
        self.frontier = False
        self.children = []


def _analyze(tree, links):
    """Span and frontier computation for every Tree node."""
    by_leaf = {}
    for src, leaf in links:
        by_leaf.setdefault(leaf, []).append(src)
    infos = {}
    counter = [0]

    def walk(node):
        info = _NodeInfo(node)
        infos[id(node)] = info
        if isinstance(node, Tree) and node.is_preterminal:
            info.span.update(by_leaf.get(counter[0], ()))
            counter[0] += 1
            return info
        for c in node.children:
            if isinstance(c, str):
                info.span.update(by_leaf.get(counter[0], ()))
                counter[0] += 1
            else:
                child = walk(c)
                info.children.append(child)
                info.span.update(child.span)
        return info

    root = walk(tree)
    total = Counter()
    for srcs in by_leaf.values():
        total.update(srcs)

    def mark(info):
        if info.span:
            info.lo, info.hi = min(info.span), max(info.span)
            complement = total - info.span  # counts aligned outside the subtree
            hull = set(range(info.lo, info.hi + 1))
            info.frontier = not (hull & set(complement))
        else:
            info.frontier = True
        for c in info.children:
            mark(c)

    mark(root)
    root.frontier = True
    return root, infos


def frontier_set(tree, links):
    """Frontier nodes of a leaf-aligned tree (the root included)."""
    root, infos = _analyze(tree, links)
    return {info.node for info in infos.values() if info.frontier}


def extract_minimal_rules(source_tokens, tree, links):
    """Minimal rules for one training tuple.

    `links` are leaf-projected (source index, leaf index) pairs.  Returns
    an empty list when nothing is aligned."""
    for src, _ in links:
        if not 0 <= src < len(source_tokens):
            raise ExtractionError("alignment index %d out of range" % src)
    for tok in source_tokens:
        if re.match(r"^x\d+$", tok):
            raise ExtractionError("source token %r collides with variable syntax" % tok)
    root, _ = _analyze(tree, links)
    if not root.span:
        return []
    rules = []

    def cut_points(info):
        """Nearest frontier descendants with nonempty spans."""
        out = []
        for c in info.children:
            if c.frontier and c.span:
                out.append(c)
            else:
                out.extend(cut_points(c))
        return out

    def build(info, eff_lo, eff_hi):
        cuts = cut_points(info)
        cuts_by_id = {id(c.node): c for c in cuts}
        placeholders = []

        def fragment(node, is_root):
            if not is_root and isinstance(node, Tree) and id(node) in cuts_by_id:
                placeholders.append(cuts_by_id[id(node)])
                return "\x00%d" % (len(placeholders) - 1)
            if isinstance(node, str):
                if _is_site(node):
                    raise ExtractionError("terminal %r collides with variable site syntax" % node)
                return node
            return Tree(node.label, [fragment(c, False) for c in node.children])

        frag = fragment(info.node, True)
        order = sorted(range(len(placeholders)), key=lambda k: placeholders[k].lo)
        var_index = {k: x for x, k in enumerate(order)}
        var_labels = [placeholders[k].node.label for k in order]

        def renumber(node):
            if isinstance(node, str):
                if node.startswith("\x00"):
                    k = int(node[1:])
                    return "x%d:%s" % (var_index[k], placeholders[k].node.label)
                return node
            return Tree(node.label, [renumber(c) for c in node.children])

        frag = renumber(frag)
        src_side = []
        p = eff_lo
        starts = {placeholders[k].lo: k for k in range(len(placeholders))}
        while p < eff_hi:
            if p in starts:
                k = starts[p]
                src_side.append(var_index[k])
                p = placeholders[k].hi + 1
            else:
                src_side.append(source_tokens[p])
                p += 1
        rules.append(TranslationRule(info.node.label, src_side, frag, var_labels))
        for k, cut in enumerate(placeholders):
            build(cut, cut.lo, cut.hi + 1)

    build(root, 0, len(source_tokens))
    return rules


def extract_grammar(tuples):
    """Extract and merge minimal rules over (source tokens, tree, links)
    training tuples."""
    grammar = RuleGrammar()
    for source_tokens, tree, links in tuples:
        for rule in extract_minimal_rules(source_tokens, tree, links):
            grammar.add(rule)
    return grammar


def score_grammar(grammar):
    """Attach statistical and indicator features to every rule.

    rfreq_root: relative frequency of the rule among rules sharing its
    root label; psrc_tgt: relative frequency of the source side given the
    target fragment; count: occurrence count; unique_src: 1 when no other
    rule shares the source side; nsrcterms / nvars: source terminal and
    variable counts."""
    root_totals = {}
    tgt_totals = {}
    src_rules = {}
    for r in grammar.rules:
        c = r.features.get("count", 1.0)
        root_totals[r.root] = root_totals.get(r.root, 0.0) + c
        tgt_totals[r.tgt_string()] = tgt_totals.get(r.tgt_string(), 0.0) + c
        src_rules[r.src] = src_rules.get(r.src, 0) + 1
    for r in grammar.rules:
        c = r.features.get("count", 1.0)
        r.features["rfreq_root"] = c / root_totals[r.root]
        r.features["psrc_tgt"] = c / tgt_totals[r.tgt_string()]
        r.features["unique_src"] = 1.0 if src_rules[r.src] == 1 else 0.0
        r.features["nsrcterms"] = float(len(r.src_terminals))
        r.features["nvars"] = float(r.n_vars)
    return grammar


def rule_feature_score(rule, weights):
    """Weighted rule-local feature score used by the decoder.

    Probability features enter in log space, the count feature as
    log(1 + count); indicator and size features enter linearly."""
    f = rule.features
    s = 0.0
    if "rfreq_root" in f:
        s += weights.get("rfreq_root", 0.0) * math.log(f["rfreq_root"])
    if "psrc_tgt" in f:
        s += weights.get("psrc_tgt", 0.0) * math.log(f["psrc_tgt"])
    if "count" in f:
        s += weights.get("count", 0.0) * math.log1p(f["count"])
    s += weights.get("unique_src", 0.0) * f.get("unique_src", 0.0)
    s += weights.get("nsrcterms", 0.0) * f.get("nsrcterms", 0.0)
    s += weights.get("nvars", 0.0) * f.get("nvars", 0.0)
    s += weights.get("oov", 0.0) * f.get("oov", 0.0)
    return s
