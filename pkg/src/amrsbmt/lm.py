"""Language models: an interpolated n-gram model over AMRese token
sequences and a generative model over tree-shaped AMRs.

Both share one smoothing scheme, Witten-Bell interpolation: with c(.) the
event counts under a context h and T(h) the number of distinct event
types seen after h,

    P(e | h) = (c(h, e) + T(h) * P(e | h')) / (c(h) + T(h))

where h' drops the rightmost context element, bottoming out in a unigram
interpolated with the uniform distribution 1 / (V + 1); the extra slot
reserves mass for unseen events, so every context distribution sums to
one over the vocabulary plus an unknown event.

The AMR model generates each instance from its ancestry: a concept given
the incoming role label and parent concept, then per role a label given
the concept and a recursive instance, then exactly one stop event per
instance.  Role labels and the stop event share one event space, so their
probabilities sum to one per context by construction.  String constants
and `*` placeholders act as instances with no roles.  With a semantic
taxonomy, the reformulated factorization first generates the concept's
category, then the concept given its category, and conditions role and
stop events on the category as well; every chain backs off by discarding
conditioning context right to left.
"""

import math

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"
ROOT = "<root>"
STOP = "<stop>"

_FORMAT_VERSION = "1"


class LmError(ValueError):
    pass


class WbTable:
    """Witten-Bell interpolated conditional table with fixed context arity.

    Counts are kept for the full context and every prefix of it, so the
    backoff chain (drop the rightmost element repeatedly) is served from
    one structure."""

    __slots__ = ("arity", "counts", "totals")

    def __init__(self, arity):
        self.arity = arity
        self.counts = {}  # context tuple -> {event: count}
        self.totals = {}  # context tuple -> total count

    def add(self, ctx, event, n=1):
        if len(ctx) != self.arity:
            raise LmError("context %r does not match arity %d" % (ctx, self.arity))
        for k in range(self.arity, -1, -1):
            sub = tuple(ctx[:k])
            d = self.counts.setdefault(sub, {})
            d[event] = d.get(event, 0) + n
            self.totals[sub] = self.totals.get(sub, 0) + n

    @property
    def vocab(self):
        return self.counts.get((), {})

    def prob(self, ctx, event):
        """Interpolated probability; a context shorter than the arity
        queries the corresponding backoff level directly."""
        if len(ctx) > self.arity:
            raise LmError("context %r longer than arity %d" % (ctx, self.arity))
        v = len(self.vocab)
        p = 1.0 / (v + 1)
        for k in range(0, len(ctx) + 1):
            sub = tuple(ctx[:k])
            d = self.counts.get(sub)
            if not d:
                continue
            t = len(d)
            total = self.totals[sub]
            p = (d.get(event, 0) + t * p) / (total + t)
        return p

    def logprob(self, ctx, event):
        return math.log(self.prob(ctx, event))

    def full_events(self):
        """(context, event, count) for full-arity contexts, insertion order."""
        for ctx, d in self.counts.items():
            if len(ctx) == self.arity:
                for ev, n in d.items():
                    yield ctx, ev, n


def _join_symbols(symbols):
    return " ".join(symbols)


def _split_symbols(text, expected=None):
    """Split space-joined symbols, treating a double-quoted span as one
    symbol (constants keep their quotes and may contain spaces)."""
    out = []
    i = 0
    n = len(text)
    while i < n:
        if text[i] == " ":
            i += 1
            continue
        if text[i] == '"':
            j = text.find('"', i + 1)
            if j < 0:
                raise LmError("unterminated quote in %r" % text)
            out.append(text[i:j + 1])
            i = j + 1
        else:
            j = text.find(" ", i)
            if j < 0:
                j = n
            out.append(text[i:j])
            i = j
    if expected is not None and len(out) != expected:
        raise LmError("expected %d symbols in %r, got %d" % (expected, text, len(out)))
    return out


class NgramModel:
    """Interpolated n-gram model over token sequences.

    Sequences are padded with order-1 beginning markers and one end
    marker.  Contexts are stored nearest-token-first so the shared
    backoff (drop rightmost) discards the most distant word first.
    """

    def __init__(self, order=5):
        if order < 1:
            raise LmError("order must be >= 1")
        self.order = order
        self.table = WbTable(order - 1)
        self.vocab = {}

    @classmethod
    def train(cls, corpus, order=5):
        corpus = list(corpus)
        if not corpus:
            raise LmError("empty corpus")
        m = cls(order)
        for seq in corpus:
            m.add_sequence(seq)
        return m

    def add_sequence(self, seq):
        padded = [BOS] * (self.order - 1) + list(seq) + [EOS]
        for i in range(self.order - 1, len(padded)):
            ctx = tuple(reversed(padded[i - self.order + 1:i]))
            self.table.add(ctx, padded[i])
            self.vocab[padded[i]] = None

    def logprob(self, history, token):
        """Log probability of one token after `history` (natural order,
        oldest first; shorter histories are BOS padded)."""
        hist = [BOS] * (self.order - 1) + list(history)
        ctx = tuple(reversed(hist[len(hist) - self.order + 1:]))
        return self.table.logprob(ctx, token)

    def prob(self, history, token):
        return math.exp(self.logprob(history, token))

    def score_sequence(self, seq):
        """Total log probability of a sequence including the end marker."""
        seq = list(seq)
        total = 0.0
        for i, tok in enumerate(seq):
            total += self.logprob(seq[:i], tok)
        total += self.logprob(seq, EOS)
        return total

    def perplexity(self, corpus):
        logp = 0.0
        n = 0
        for seq in corpus:
            seq = list(seq)
            logp += self.score_sequence(seq)
            n += len(seq) + 1
        if n == 0:
            raise LmError("empty corpus")
        return math.exp(-logp / n)

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("# amrsbmt-lm v%s\n" % _FORMAT_VERSION)
            fh.write("[meta]\n")
            fh.write("type\tngram\n")
            fh.write("order\t%d\n" % self.order)
            fh.write("[ngrams]\n")
            for ctx, ev, n in self.table.full_events():
                natural = tuple(reversed(ctx))
                fh.write("%s\t%s\t%d\n" % (_join_symbols(natural), ev, n))

    @classmethod
    def load(cls, path):
        meta, sections = _read_model_file(path)
        if meta.get("type") != "ngram":
            raise LmError("not an n-gram model file: %s" % path)
        m = cls(int(meta["order"]))
        for line in sections.get("ngrams", ()):
            ctx_text, ev, n = line.split("\t")
            natural = _split_symbols(ctx_text, expected=m.order - 1) if ctx_text else []
            m.table.add(tuple(reversed(natural)), ev, int(n))
            m.vocab[ev] = None
        return m

    def export_arpa(self, path):
        """ARPA-style section layout with interpolated log10 probabilities
        for every seen n-gram (no separate backoff weights)."""
        grams = {k: [] for k in range(1, self.order + 1)}
        for ctx, d in self.table.counts.items():
            order = len(ctx) + 1
            natural = tuple(reversed(ctx))
            for ev in d:
                grams[order].append(natural + (ev,))
        unigrams = set(g[0] for g in grams[1])
        unigrams.add(UNK)
        grams[1] = [(w,) for w in sorted(unigrams)]
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\\data\\\n")
            for k in range(1, self.order + 1):
                fh.write("ngram %d=%d\n" % (k, len(grams[k])))
            for k in range(1, self.order + 1):
                fh.write("\n\\%d-grams:\n" % k)
                for gram in grams[k]:
                    ctx = tuple(reversed(gram[:-1]))
                    logp = self.table.logprob(ctx, gram[-1]) / math.log(10.0)
                    fh.write("%.6f\t%s\n" % (logp, " ".join(gram)))
            fh.write("\n\\end\\\n")


class Factor:
    """One factor of the generative AMR score, for inspection."""

    __slots__ = ("kind", "context", "event", "logprob")

    def __init__(self, kind, context, event, logprob):
        self.kind = kind
        self.context = context
        self.event = event
        self.logprob = logprob

    def __repr__(self):
        return "Factor(%s, %s | %s, %.6f)" % (self.kind, self.event, " ".join(self.context), self.logprob)


class AmrTreeModel:
    """Generative model over tree-shaped AMRs.

    Tables:
        concept:   P(c | incoming label, parent concept), backoff to
                   P(c | incoming label) then P(c)
        role:      P(x | c) with x a role label or the stop event
    and, when trained with a taxonomy:
        category:  P(s_c | incoming label, parent category, parent concept)
        concept_sc: P(c | s_c, incoming label, parent category, parent concept)
        role_sc:   P(x | s_c, c)
    """

    def __init__(self, with_semcat=False):
        self.concept = WbTable(2)
        self.role = WbTable(1)
        self.with_semcat = with_semcat
        self.category = WbTable(3) if with_semcat else None
        self.concept_sc = WbTable(4) if with_semcat else None
        self.role_sc = WbTable(2) if with_semcat else None
        self.categories = {}

    @classmethod
    def train(cls, graphs, taxonomy=None):
        m = cls(with_semcat=taxonomy is not None)
        for g in graphs:
            m.add_graph(g, taxonomy)
        return m

    def _category_of(self, concept):
        if concept == ROOT:
            return ROOT
        return self.categories.get(concept, "OTHER")

    def add_graph(self, g, taxonomy=None):
        if not g.is_tree():
            raise LmError("the generative AMR model is defined over tree-shaped AMRs only")
        if self.with_semcat and taxonomy is None:
            raise LmError("model was started with semantic categories; taxonomy required")

        if taxonomy is not None:
            from .semcat import assign_category
            from .graph import concept_lemma
            for c in list(g.instances.values()):
                if c not in self.categories:
                    self.categories[c] = assign_category(taxonomy, concept_lemma(c))
            for _, _, t in g.roles:
                if not g.is_var(t) and t not in self.categories:
                    self.categories[t] = assign_category(taxonomy, concept_lemma(t))

        def visit(concept, roles, inc_label, parent_concept):
            self.concept.add((inc_label, parent_concept), concept)
            if self.with_semcat:
                s = self._category_of(concept)
                sp = self._category_of(parent_concept)
                self.category.add((inc_label, sp, parent_concept), s)
                self.concept_sc.add((s, inc_label, sp, parent_concept), concept)
            for label, child_concept, child_roles in roles:
                self.role.add((concept,), label)
                if self.with_semcat:
                    self.role_sc.add((self._category_of(concept), concept), label)
                visit(child_concept, child_roles, label, concept)
            self.role.add((concept,), STOP)
            if self.with_semcat:
                self.role_sc.add((self._category_of(concept), concept), STOP)

        visit(*_node_view(g, g.root), ROOT, ROOT)

    def factors(self, g, use_semcat=None):
        """Per-event factors of the log score, in generation order."""
        if not g.is_tree():
            raise LmError("the generative AMR model is defined over tree-shaped AMRs only")
        if use_semcat is None:
            use_semcat = self.with_semcat
        if use_semcat and not self.with_semcat:
            raise LmError("model was trained without semantic categories")
        out = []

        def visit(concept, roles, inc_label, parent_concept):
            if use_semcat:
                s = self._category_of(concept)
                sp = self._category_of(parent_concept)
                ctx = (inc_label, sp, parent_concept)
                out.append(Factor("category", ctx, s, self.category.logprob(ctx, s)))
                ctx = (s, inc_label, sp, parent_concept)
                out.append(Factor("concept", ctx, concept, self.concept_sc.logprob(ctx, concept)))
                role_ctx = (s, concept)
                role_table = self.role_sc
            else:
                ctx = (inc_label, parent_concept)
                out.append(Factor("concept", ctx, concept, self.concept.logprob(ctx, concept)))
                role_ctx = (concept,)
                role_table = self.role
            for label, child_concept, child_roles in roles:
                out.append(Factor("role", role_ctx, label, role_table.logprob(role_ctx, label)))
                visit(child_concept, child_roles, label, concept)
            out.append(Factor("stop", role_ctx, STOP, role_table.logprob(role_ctx, STOP)))

        visit(*_node_view(g, g.root), ROOT, ROOT)
        return out

    def logprob(self, g, use_semcat=None):
        return sum(f.logprob for f in self.factors(g, use_semcat=use_semcat))

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("# amrsbmt-lm v%s\n" % _FORMAT_VERSION)
            fh.write("[meta]\n")
            fh.write("type\tamr-tree\n")
            fh.write("semcat\t%d\n" % int(self.with_semcat))
            tables = [("concept", self.concept), ("role", self.role)]
            if self.with_semcat:
                tables += [("category", self.category), ("concept_sc", self.concept_sc),
                           ("role_sc", self.role_sc)]
            for name, table in tables:
                fh.write("[%s]\n" % name)
                for ctx, ev, n in table.full_events():
                    fh.write("%s\t%s\t%d\n" % (_join_symbols(ctx), ev, n))
            if self.with_semcat:
                fh.write("[categories]\n")
                for c, s in self.categories.items():
                    fh.write("%s\t%s\n" % (c, s))

    @classmethod
    def load(cls, path):
        meta, sections = _read_model_file(path)
        if meta.get("type") != "amr-tree":
            raise LmError("not an AMR tree model file: %s" % path)
        m = cls(with_semcat=bool(int(meta.get("semcat", "0"))))
        tables = [("concept", m.concept), ("role", m.role)]
        if m.with_semcat:
            tables += [("category", m.category), ("concept_sc", m.concept_sc),
                       ("role_sc", m.role_sc)]
        for name, table in tables:
            for line in sections.get(name, ()):
                ctx_text, ev, n = line.split("\t")
                ctx = tuple(_split_symbols(ctx_text, expected=table.arity)) if ctx_text else ()
                table.add(ctx, ev, int(n))
        for line in sections.get("categories", ()):
            c, s = line.split("\t")
            m.categories[c] = s
        return m


def _node_view(g, var):
    """(concept, roles) view of an instance where roles are
    (label, child concept, child roles) and constants act as leaf
    instances."""
    roles = []
    for l, t in g.out_roles(var):
        if g.is_var(t):
            child = _node_view(g, t)
            roles.append((l, child[0], child[1]))
        else:
            roles.append((l, t, []))
    return g.instances[var], roles


def _read_model_file(path):
    meta = {}
    sections = {}
    current = None
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("# amrsbmt-lm v"):
            raise LmError("unrecognized model file header in %s" % path)
        if header.strip().rsplit("v", 1)[-1] != _FORMAT_VERSION:
            raise LmError("unsupported model file version in %s" % path)
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                current = line[1:-1]
                if current != "meta":
                    sections[current] = []
                continue
            if current == "meta":
                key, _, value = line.partition("\t")
                meta[key] = value
            elif current is not None:
                sections[current].append(line)
            else:
                raise LmError("content before first section in %s" % path)
    return meta, sections
