"""Weight tuning: corpus BLEU over AMRese and coordinate ascent.

The tuner optimizes the decoder weight vector on a development corpus
toward either corpus-level Smatch of the 1-best graphs or BLEU of the
1-best AMRese yields against reference AMRese (the yields of the
transformed gold trees; multiple references per sentence are supported).
Each pass tries, per feature, a fixed ladder of multipliers
{0.25, 0.5, 0.8, 1.25, 2, 4} plus a sign flip (and small absolute probes
when the current weight is zero), keeping a change only when the selected
objective improves, so the accepted-step trace is non-decreasing by
construction.  Both objectives are logged at every evaluation regardless
of which one is optimized.
"""

import math
import statistics
from collections import Counter

from .decoder import Decoder, default_weights
from .smatch import smatch_corpus

LADDER = (0.25, 0.5, 0.8, 1.25, 2.0, 4.0, -1.0)
ZERO_PROBES = (1.0, -1.0, 0.5, -0.5)


def _ngrams(tokens, n):
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidates, references, max_n=4):
    """Corpus-level BLEU with clipped n-gram precisions and brevity
    penalty; `references` holds one or more reference token sequences per
    candidate.  Returns a value in [0, 1]; zero when any n-gram order has
    no match (no smoothing)."""
    if len(candidates) != len(references):
        raise ValueError("candidate/reference count mismatch")
    if not candidates:
        raise ValueError("empty corpus")
    matched = [0] * max_n
    total = [0] * max_n
    cand_len = 0
    ref_len = 0
    for cand, refs in zip(candidates, references):
        cand = list(cand)
        refs = [list(r) for r in refs]
        if not refs:
            raise ValueError("candidate without references")
        cand_len += len(cand)
        ref_len += min((abs(len(r) - len(cand)), len(r)) for r in refs)[1]
        for n in range(1, max_n + 1):
            counts = _ngrams(cand, n)
            if not counts:
                continue
            clip = Counter()
            for r in refs:
                rc = _ngrams(r, n)
                for gram in counts:
                    clip[gram] = max(clip[gram], rc.get(gram, 0))
            total[n - 1] += sum(counts.values())
            matched[n - 1] += sum(min(c, clip[gram]) for gram, c in counts.items())
    if any(t == 0 for t in total) or any(m == 0 for m in matched):
        return 0.0
    log_prec = sum(math.log(m / t) for m, t in zip(matched, total)) / max_n
    bp = 1.0 if cand_len > ref_len else math.exp(1.0 - ref_len / max(cand_len, 1))
    return bp * math.exp(log_prec)


class TuneStep:
    __slots__ = ("weights", "bleu", "smatch", "feature", "accepted")

    def __init__(self, weights, bleu_value, smatch_value, feature=None, accepted=False):
        self.weights = dict(weights)
        self.bleu = bleu_value
        self.smatch = smatch_value
        self.feature = feature
        self.accepted = accepted


class TuneReport:
    """Evaluation log, accepted-step trace, final weights and the
    correlation between the two objective series."""

    def __init__(self, objective):
        self.objective = objective
        self.evaluations = []
        self.accepted = []
        self.final_weights = {}
        self.correlation = None

    def finish(self, weights):
        self.final_weights = dict(weights)
        bleus = [e.bleu for e in self.evaluations]
        smatches = [e.smatch for e in self.evaluations]
        try:
            self.correlation = statistics.correlation(bleus, smatches)
        except statistics.StatisticsError:
            self.correlation = None
        return self

    def objective_trace(self):
        key = "bleu" if self.objective == "bleu" else "smatch"
        return [getattr(s, key) for s in self.accepted]


class DevCorpus:
    """Development data for tuning: tokenized sources, gold graphs, and
    one or more reference AMRese sequences per sentence."""

    def __init__(self, sources, gold_graphs, reference_amrese):
        if not (len(sources) == len(gold_graphs) == len(reference_amrese)):
            raise ValueError("development corpus lists must align")
        self.sources = sources
        self.gold_graphs = gold_graphs
        self.reference_amrese = reference_amrese

    def __len__(self):
        return len(self.sources)


def evaluate_weights(dev, weights, grammar, ngram_models, amr_model, beam=100,
                     rescore_k=100, smatch_restarts=4, seed=0):
    """Decode the dev corpus under `weights`; returns (bleu, smatch F).

    Decoder failures cannot occur: unparseable sentences fall back to
    glued partial derivations."""
    dec = Decoder(grammar, ngram_models=ngram_models, amr_model=amr_model,
                  weights=weights, beam=beam)
    cands = []
    graphs = []
    for src in dev.sources:
        best = dec.decode(src, kbest=1, rescore_k=rescore_k)[0]
        cands.append(best.amrese)
        graphs.append(best.graph)
    b = bleu(cands, dev.reference_amrese)
    corpus, _ = smatch_corpus(zip(graphs, dev.gold_graphs),
                              restarts=smatch_restarts, seed=seed)
    return b, corpus.f_score


def coordinate_ascent(dev, grammar, ngram_models, amr_model, objective="smatch",
                      initial_weights=None, max_passes=3, beam=100, rescore_k=100,
                      smatch_restarts=4, seed=0, log=None):
    """Optimize decoder weights by per-feature line search.

    Returns a TuneReport whose accepted trace is non-decreasing in the
    selected objective.  Deterministic given the corpus and seed."""
    if objective not in ("smatch", "bleu"):
        raise ValueError("objective must be 'smatch' or 'bleu'")
    weights = default_weights()
    if initial_weights:
        weights.update(initial_weights)
    report = TuneReport(objective)

    def evaluate(w, feature=None):
        b, s = evaluate_weights(dev, w, grammar, ngram_models, amr_model,
                                beam=beam, rescore_k=rescore_k,
                                smatch_restarts=smatch_restarts, seed=seed)
        step = TuneStep(w, b, s, feature=feature)
        report.evaluations.append(step)
        if log:
            log("eval %s=%r bleu=%.4f smatch=%.4f" % (feature, w.get(feature), b, s))
        return step

    def score_of(step):
        return step.bleu if objective == "bleu" else step.smatch

    current = evaluate(weights, feature="initial")
    current.accepted = True
    report.accepted.append(current)
    features = sorted(weights)
    for _ in range(max_passes):
        improved = False
        for feature in features:
            base = weights[feature]
            candidates = [base * m for m in LADDER]
            if base == 0.0:
                candidates = list(ZERO_PROBES)
            best_step = None
            best_value = None
            for cand in candidates:
                if cand == base:
                    continue
                trial = dict(weights)
                trial[feature] = cand
                step = evaluate(trial, feature=feature)
                if best_step is None or score_of(step) > best_value:
                    best_step = step
                    best_value = score_of(step)
            if best_step is not None and best_value > score_of(current):
                weights = dict(best_step.weights)
                current = best_step
                current.accepted = True
                report.accepted.append(current)
                improved = True
        if not improved:
            break
    return report.finish(weights)
