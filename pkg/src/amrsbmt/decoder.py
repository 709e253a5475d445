"""Beamed bottom-up chart decoding of a token sequence into trees.

Items are built CKY-style over spans; a rule matches a span when its
source side can be segmented into its terminals and variables, each
variable consuming a subspan that already holds an item with the required
root label.  Every item keeps a boundary n-gram state (the first and last
order-1 target tokens of its yield) so the token-sequence language models
score incrementally; an item's score covers rule features, out-of-
vocabulary penalties, and every n-gram fully determined inside its yield.
Sentence-boundary n-grams are added when complete parses are finalized.

The generative AMR model is applied as a k-best rescoring step: its
context (parent concept and role) is nonlocal to chart items, so the
top derivations are converted to graphs and rescored before the final
ranking.  Out-of-vocabulary tokens are covered by generated identity
rules `X -> w / X(wP w)` carrying an indicator penalty feature.  When no
complete parse exists, the best chart items covering the sentence left to
right are glued under a synthetic root and flagged.
"""

import math

from .ghkm import TranslationRule, rule_feature_score, SITE_RE
from .graph import AmrGraph
from .lm import BOS, EOS
from .transform import to_amr, TransformError, PRETERMINAL_MARKER, INSTANCE_LABEL
from .tree import Tree

GLUE_LABEL = "GLUE"
GOAL_LABEL = INSTANCE_LABEL
MAX_UNARY_ROUNDS = 3
AMR_SCORE_FLOOR = -1000.0  # stands in for log P when a tree cannot convert

DEFAULT_WEIGHTS = {
    "rfreq_root": 1.0,
    "psrc_tgt": 1.0,
    "count": 0.0,
    "unique_src": 0.0,
    "nsrcterms": 0.0,
    "nvars": 0.0,
    "oov": -5.0,
    "ngram": 1.0,
    "ngram2": 1.0,
    "amrlm": 1.0,
}


def default_weights():
    return dict(DEFAULT_WEIGHTS)


def load_weights(path):
    weights = default_weights()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            w = float(value.strip())
            if not math.isfinite(w):
                raise ValueError("weight %s is not finite: %r" % (key.strip(), value.strip()))
            weights[key.strip()] = w
    return weights


def save_weights(path, weights):
    with open(path, "w", encoding="utf-8") as fh:
        for key in sorted(weights):
            fh.write("%s = %s\n" % (key, repr(weights[key])))


class LmEnsemble:
    """Weighted token-sequence models sharing one boundary state.

    The state is (visible tokens, total length); when the yield is longer
    than twice the boundary width the middle is elided and `visible`
    holds the first and last width tokens."""

    def __init__(self, weighted_models):
        self.models = [(w, m) for w, m in weighted_models if w != 0.0 and m is not None]
        orders = [m.order for _, m in self.models]
        self.width = max([o - 1 for o in orders], default=0)

    def _wlogp(self, history, token):
        s = 0.0
        for w, m in self.models:
            s += w * m.table.logprob(tuple(reversed(history))[:m.order - 1], token)
        return s

    def extend(self, parts):
        """Compose child states and terminals left to right.

        Returns (state, score delta).  The delta covers exactly the
        n-grams whose full context first becomes available inside the
        composed yield."""
        k = self.width
        if k == 0 or not self.models:
            length = sum(1 if isinstance(p, str) else p.state[1] for p in parts)
            return ((), length), 0.0
        delta = 0.0
        visible = []      # full token list while it stays small
        elided = False
        prefix = []
        hist = []         # last < = k real tokens
        pos = 0

        def emit(tok, scored_in_child):
            nonlocal delta, pos
            if pos >= k and not scored_in_child:
                delta_add = self._wlogp(hist, tok)
                delta += delta_add
            if pos < k:
                prefix.append(tok)
            hist.append(tok)
            if len(hist) > k:
                hist.pop(0)
            if not elided:
                visible.append(tok)
            pos += 1

        for part in parts:
            if isinstance(part, str):
                emit(part, False)
                continue
            ptoks, plen = part.state
            if plen <= len(ptoks):
                for q, t in enumerate(ptoks):
                    emit(t, q >= k)
            else:
                # elided child: first k tokens unscored in the child,
                # middle hidden, trailing k tokens already scored
                for t in ptoks[:k]:
                    emit(t, False)
                hidden = plen - len(ptoks)
                pos += hidden
                elided = True
                for t in ptoks[k:]:
                    hist.append(t)
                    if len(hist) > k:
                        hist.pop(0)
                    pos += 1
        if not elided and len(visible) <= 2 * k:
            state = (tuple(visible), pos)
        else:
            state = (tuple(prefix + hist[-k:]), pos)
        return state, delta

    def finalize(self, state):
        """Sentence-boundary score: the leading tokens against begin
        padding plus the end marker after the trailing tokens."""
        if not self.models:
            return 0.0
        k = self.width
        toks, length = state
        lead = list(toks[:min(k, length)])
        hist = [BOS] * k
        delta = 0.0
        for t in lead:
            delta += self._wlogp(hist, t)
            hist.append(t)
            hist.pop(0)
        if length <= len(toks):
            tail = list(toks)
        else:
            tail = list(toks[-k:])
        hist = ([BOS] * k + tail)[-k:]
        delta += self._wlogp(hist, EOS)
        return delta


class Hyp:
    __slots__ = ("label", "i", "j", "score", "state", "rule", "children", "seq")

    def __init__(self, label, i, j, score, state, rule, children, seq):
        self.label = label
        self.i = i
        self.j = j
        self.score = score
        self.state = state
        self.rule = rule
        self.children = children
        self.seq = seq

    def __repr__(self):
        return "Hyp(%s, [%d,%d), %.4f)" % (self.label, self.i, self.j, self.score)


class DecodeResult:
    """One entry of the k-best list."""

    __slots__ = ("tree", "score", "amrese", "glue", "graph")

    def __init__(self, tree, score, amrese, glue, graph=None):
        self.tree = tree
        self.score = score
        self.amrese = amrese
        self.glue = glue
        self.graph = graph


def build_tree(hyp):
    """Materialize the target tree of a derivation."""
    if hyp.rule is None:  # glue
        return Tree(GLUE_LABEL, [build_tree(c) for c in hyp.children])

    def substitute(node):
        if isinstance(node, str):
            m = SITE_RE.match(node)
            if m:
                return build_tree(hyp.children[int(m.group(1))])
            return node
        return Tree(node.label, [substitute(c) for c in node.children])

    return substitute(hyp.rule.tgt)


def oov_rule(token):
    tgt = Tree(INSTANCE_LABEL, [Tree(token + PRETERMINAL_MARKER, [token])])
    return TranslationRule(INSTANCE_LABEL, (token,), tgt, (), {"oov": 1.0})


def _target_parts(rule, children):
    """Rule target yield with variable sites replaced by child items."""
    parts = []

    def walk(node):
        if isinstance(node, str):
            m = SITE_RE.match(node)
            if m:
                parts.append(children[int(m.group(1))])
            else:
                parts.append(node)
            return
        for c in node.children:
            walk(c)

    walk(rule.tgt)
    return parts


class Decoder:
    def __init__(self, grammar, ngram_models=None, amr_model=None, weights=None,
                 beam=100, goal=GOAL_LABEL):
        """ngram_models: list of (weight name, NgramModel); the weight
        names (`ngram`, `ngram2`) select entries of the weight vector."""
        self.grammar = grammar
        self.weights = dict(DEFAULT_WEIGHTS)
        if weights:
            self.weights.update(weights)
        models = [(self.weights.get(name, 0.0), m) for name, m in (ngram_models or [])]
        self.lms = LmEnsemble(models)
        self.amr_model = amr_model
        self.beam = beam
        self.goal = goal
        self.src_vocab = grammar.source_vocabulary()
        self._seq = 0

    def _next_seq(self):
        self._seq += 1
        return self._seq

    def _make_hyp(self, rule, i, j, children):
        score = rule_feature_score(rule, self.weights)
        score += sum(c.score for c in children)
        state, delta = self.lms.extend(_target_parts(rule, children))
        return Hyp(rule.root, i, j, score + delta, state, rule, tuple(children), self._next_seq())

    def _match(self, src, rule, i, j, cells):
        """All segmentations of [i, j) by the rule source side; returns
        lists of (var index, (a, b)) bindings."""
        out = []
        symbols = rule.src

        def rec(k, p, acc):
            if k == len(symbols):
                if p == j:
                    out.append(list(acc))
                return
            sym = symbols[k]
            if isinstance(sym, str):
                if p < j and src[p] == sym:
                    rec(k + 1, p + 1, acc)
            else:
                label = rule.var_labels[sym]
                for p2 in range(p + 1, j + 1):
                    cell = cells.get((p, p2))
                    if cell and label in cell:
                        acc.append((sym, (p, p2)))
                        rec(k + 1, p2, acc)
                        acc.pop()

        rec(0, i, [])
        return out

    def _expand(self, src, rule, i, j, cells, into):
        for binding in self._match(src, rule, i, j, cells):
            pools = []
            for var_idx, (a, b) in sorted(binding):
                pools.append(cells[(a, b)][rule.var_labels[var_idx]])
            for combo in _product(pools):
                into.append(self._make_hyp(rule, i, j, list(combo)))

    def decode(self, src, kbest=10, rescore_k=500):
        src = list(src)
        n = len(src)
        if n == 0:
            raise ValueError("empty input sentence")
        cells = {}
        pool = self.grammar.candidates(src)
        lexical_rules = [r for r in pool if not (len(r.src) == 1 and isinstance(r.src[0], int))]
        unary_rules = [r for r in pool if len(r.src) == 1 and isinstance(r.src[0], int)]
        for width in range(1, n + 1):
            for i in range(0, n - width + 1):
                j = i + width
                hyps = []
                for rule in lexical_rules:
                    self._expand(src, rule, i, j, cells, hyps)
                if width == 1 and src[i] not in self.src_vocab:
                    hyps.append(self._make_hyp(oov_rule(src[i]), i, j, []))
                cell = self._to_cell(hyps)
                cells[(i, j)] = cell
                for _ in range(MAX_UNARY_ROUNDS):
                    new = []
                    seen = {(h.rule, h.children) for h in cell["__all__"]}
                    for rule in unary_rules:
                        if rule.var_labels[0] in cell:
                            for child in list(cell[rule.var_labels[0]]):
                                if (rule, (child,)) not in seen:
                                    new.append(self._make_hyp(rule, i, j, [child]))
                    if not new:
                        break
                    cell = self._to_cell(cell["__all__"] + new)
                    cells[(i, j)] = cell
        goal_hyps = cells[(0, n)].get(self.goal, [])
        if goal_hyps:
            pool = goal_hyps[:rescore_k]
            return self._finalize(pool, kbest)
        return [self._glue(src, cells, n)]

    def _to_cell(self, hyps):
        hyps = sorted(hyps, key=lambda h: (-h.score, h.seq))
        if self.beam is not None:
            hyps = hyps[:self.beam]
        cell = {"__all__": hyps}
        for h in hyps:
            cell.setdefault(h.label, []).append(h)
        return cell

    def _finalize(self, pool, kbest):
        results = []
        for hyp in pool:
            tree = build_tree(hyp)
            score = hyp.score + self.lms.finalize(hyp.state)
            delta, graph = self._amr_rescore(tree)
            results.append(DecodeResult(tree, score + delta, tree.leaves(), glue=False, graph=graph))
        results.sort(key=lambda r: (-r.score, " ".join(r.amrese), str(r.tree)))
        out = []
        seen = set()
        for r in results:
            key = (" ".join(r.amrese), str(r.tree))
            if key in seen:
                continue
            seen.add(key)
            out.append(r)
            if len(out) >= kbest:
                break
        return out

    def _amr_rescore(self, tree):
        """(weighted log probability, graph or None) for one derivation."""
        w = self.weights.get("amrlm", 0.0)
        try:
            graph = derivation_to_amr(tree)
        except (TransformError, ValueError):
            graph = None
        if w == 0.0 or self.amr_model is None:
            return 0.0, graph
        if graph is None:
            return w * AMR_SCORE_FLOOR, None
        return w * self.amr_model.logprob(graph), graph

    def _glue(self, src, cells, n):
        """Left-to-right combination of the best items under a fresh root."""
        best = {}
        for (i, j), cell in cells.items():
            if cell["__all__"]:
                best[(i, j)] = cell["__all__"][0]
        dp = [None] * (n + 1)
        dp[0] = (0.0, None, None)
        for j in range(1, n + 1):
            for i in range(j):
                if dp[i] is None:
                    continue
                hyp = best.get((i, j))
                if hyp is None and j - i == 1:
                    hyp = self._make_hyp(oov_rule(src[i]), i, j, [])
                if hyp is None:
                    continue
                cand = dp[i][0] + hyp.score
                if dp[j] is None or cand > dp[j][0]:
                    dp[j] = (cand, i, hyp)
        fragments = []
        j = n
        while j > 0:
            _, i, hyp = dp[j]
            fragments.append(hyp)
            j = i
        fragments.reverse()
        if len(fragments) == 1:
            hyp = fragments[0]
            tree = build_tree(hyp)
            score = hyp.score + self.lms.finalize(hyp.state)
            delta, graph = self._amr_rescore(tree)
            return DecodeResult(tree, score + delta, tree.leaves(), glue=True, graph=graph)
        tree = Tree(GLUE_LABEL, [build_tree(h) for h in fragments])
        score = dp[n][0]
        return DecodeResult(tree, score, tree.leaves(), glue=True,
                            graph=derivation_to_amr(tree))


def _product(pools):
    if not pools:
        yield ()
        return
    head, tail = pools[0], pools[1:]
    for item in head:
        for rest in _product(tail):
            yield (item,) + rest


def derivation_to_amr(tree):
    """Convert a decoded tree to a valid graph.

    Glue trees wrap their fragments under a multi-sentence root with
    snt1, snt2, ... roles; fragments that do not convert on their own
    become placeholder instances."""
    if isinstance(tree, Tree) and tree.label == GLUE_LABEL:
        parts = []
        for frag in tree.children:
            try:
                parts.append(to_amr(frag))
            except TransformError:
                leafs = frag.leaves() if isinstance(frag, Tree) else [frag]
                parts.append(AmrGraph("f0", {"f0": leafs[0] if len(leafs) == 1 else "amr-fragment"}, []))
        if len(parts) == 1:
            return parts[0]
        instances = {"m": "multi-sentence"}
        roles = []
        for idx, g in enumerate(parts, 1):
            rename = {v: "s%d_%s" % (idx, v) for v in g.instances}
            for v, c in g.instances.items():
                instances[rename[v]] = c
            roles.append(("m", "snt%d" % idx, rename[g.root]))
            for p, l, t in g.roles:
                roles.append((rename[p], l, rename.get(t, t) if t in g.instances else t))
        return AmrGraph("m", instances, roles).validate()
    return to_amr(tree)


def format_kbest(sent_id, results):
    """`sentId ||| score ||| AMRese ||| PENMAN` lines; glue fallbacks get
    a trailing ||| glue marker."""
    from .graph import emit_penman
    lines = []
    for r in results:
        g = r.graph
        if g is None:
            try:
                g = derivation_to_amr(r.tree)
            except (TransformError, ValueError):
                g = AmrGraph("f0", {"f0": "amr-fragment"}, [])
        fields = [str(sent_id), "%.6f" % r.score, " ".join(r.amrese), emit_penman(g)]
        if r.glue:
            fields.append("glue")
        lines.append(" ||| ".join(fields))
    return lines
