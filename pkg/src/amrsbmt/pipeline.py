"""End-to-end experiment pipeline with reproducible configuration.

A run reads parallel data (PENMAN graphs, source text, alignments),
transforms the graphs to trees, trains the language models, extracts and
scores a rule grammar, decodes the tune and test sources, and reports
Smatch, writing every stage product under one run directory together
with a manifest.  Identical configurations and seeds produce
byte-identical score files.
"""

import json
import re
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .alignments import count_crossings, read_alignment_file
from .decoder import Decoder, default_weights, format_kbest, load_weights
from .ghkm import extract_grammar, score_grammar
from .graph import emit_penman, read_amr_corpus
from .lm import AmrTreeModel, NgramModel
from .semcat import load_taxonomy
from .smatch import smatch_corpus
from .transform import disconnect, pipeline as transform_pipeline, yield_amrese
from .tree import write_tree_file

CONFIG_VERSION = "1"

_TOKENIZER_RE = re.compile(r"\w+(?:[-']\w+)*|[^\w\s]")

_CONFIG_FIELDS = [
    ("config_version", str, CONFIG_VERSION),
    ("train_penman", str, ""),
    ("train_source", str, ""),
    ("train_align", str, ""),
    ("train_align2", str, ""),
    ("tune_penman", str, ""),
    ("tune_source", str, ""),
    ("tune_align", str, ""),
    ("test_penman", str, ""),
    ("test_source", str, ""),
    ("restructure", str, "role"),
    ("relabel", bool, True),
    ("reorder", bool, True),
    ("semcat", bool, False),
    ("taxonomy_hierarchy", str, ""),
    ("taxonomy_senses", str, ""),
    ("taxonomy_salient", str, ""),
    ("amr_lm", bool, True),
    ("ngram_order", int, 5),
    ("beam", int, 100),
    ("kbest", int, 10),
    ("rescore_k", int, 500),
    ("weights", str, ""),
    ("lowercase", bool, True),
    ("smatch_restarts", int, 4),
    ("seed", int, 0),
]


def tokenize(text, lowercase=True):
    """Whitespace plus punctuation splitting; hyphenated words and
    apostrophe contractions stay single tokens."""
    if lowercase:
        text = text.lower()
    return _TOKENIZER_RE.findall(text)


class ConfigError(ValueError):
    pass


class PipelineConfig:
    """Versioned key = value configuration; serialization is canonical
    (fixed key order) so load/save round trips are byte-identical."""

    __slots__ = [name for name, _, _ in _CONFIG_FIELDS]

    def __init__(self, **kwargs):
        for name, _, default in _CONFIG_FIELDS:
            setattr(self, name, kwargs.pop(name, default))
        if kwargs:
            raise ConfigError("unknown config keys: %s" % ", ".join(sorted(kwargs)))
        if self.restructure not in ("flat", "concept", "role"):
            raise ConfigError("restructure must be flat, concept or role")

    @classmethod
    def load(cls, path):
        values = {}
        types = {name: typ for name, typ, _ in _CONFIG_FIELDS}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                key, eq, value = line.partition("=")
                key, value = key.strip(), value.strip()
                if not eq or key not in types:
                    raise ConfigError("bad config line %d: %r" % (lineno, line))
                typ = types[key]
                if typ is bool:
                    values[key] = value.lower() in ("1", "true", "yes", "on")
                else:
                    values[key] = typ(value)
        cfg = cls(**values)
        if cfg.config_version != CONFIG_VERSION:
            raise ConfigError("unsupported config version %r" % cfg.config_version)
        return cfg

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())

    def dumps(self):
        lines = []
        for name, typ, _ in _CONFIG_FIELDS:
            value = getattr(self, name)
            if typ is bool:
                value = "true" if value else "false"
            lines.append("%s = %s" % (name, value))
        return "\n".join(lines) + "\n"

    def validate_paths(self):
        for name in ("train_penman", "train_source", "train_align", "tune_penman",
                     "tune_source", "tune_align", "test_penman", "test_source",
                     "taxonomy_hierarchy", "taxonomy_senses", "taxonomy_salient",
                     "weights", "train_align2"):
            value = getattr(self, name)
            if value and not Path(value).exists():
                raise ConfigError("config path %s = %r does not exist" % (name, value))
        if not self.train_penman:
            raise ConfigError("train_penman is required")
        if self.semcat and not (self.taxonomy_hierarchy and self.taxonomy_senses
                                and self.taxonomy_salient):
            raise ConfigError("semcat requires the three taxonomy files")
        return self


def _read_sources(path, lowercase):
    with open(path, encoding="utf-8") as fh:
        return [tokenize(line.rstrip("\n"), lowercase) for line in fh]


def _read_graphs(path, lowercase):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if lowercase:
        text = text.lower()
    return read_amr_corpus(text, from_path=False)


def _decode_one(args):
    decoder, src, kbest, rescore_k = args
    return decoder.decode(src, kbest=kbest, rescore_k=rescore_k)


class PipelineRun:
    def __init__(self, config, outdir, jobs=1):
        self.config = config
        self.outdir = Path(outdir)
        self.jobs = max(1, jobs)
        self.manifest = {"stages": [], "config": config.dumps().split("\n")[:-1]}
        self.taxonomy = None
        self.trees = []
        self.gold_disconnected = []
        self.grammar = None
        self.ngram_models = []
        self.amr_model = None
        self.weights = None
        self.scores = {}

    def _stage(self, name, fn):
        t0 = time.time()
        entry = {"name": name, "status": "ok", "seconds": 0.0}
        try:
            fn()
        except Exception as e:  # noqa: BLE001  (recorded, later stages skipped)
            entry["status"] = "failed"
            entry["error"] = "%s: %s" % (type(e).__name__, e)
            self.manifest["stages"].append(entry)
            entry["seconds"] = round(time.time() - t0, 3)
            return False
        entry["seconds"] = round(time.time() - t0, 3)
        self.manifest["stages"].append(entry)
        return True

    def run(self):
        cfg = self.config
        self.outdir.mkdir(parents=True, exist_ok=True)
        for sub in ("trees", "lm", "grammar", "decode", "scores", "figures"):
            (self.outdir / sub).mkdir(exist_ok=True)
        cfg.save(self.outdir / "config.cfg")
        steps = [
            ("load", self._load),
            ("treeify", self._treeify),
            ("language-models", self._language_models),
            ("extract", self._extract),
            ("decode-score", self._decode_and_score),
        ]
        ok = True
        for name, fn in steps:
            if ok:
                ok = self._stage(name, fn)
            else:
                self.manifest["stages"].append({"name": name, "status": "skipped"})
        with open(self.outdir / "manifest.json", "w", encoding="utf-8") as fh:
            json.dump(self.manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return self.manifest

    def _load(self):
        cfg = self.config.validate_paths()
        self.train_entries = _read_graphs(cfg.train_penman, cfg.lowercase)
        self.train_sources = _read_sources(cfg.train_source, cfg.lowercase)
        self.train_aligns = read_alignment_file(cfg.train_align)
        if not (len(self.train_entries) == len(self.train_sources) == len(self.train_aligns)):
            raise ConfigError("training corpus sizes differ")
        self.train_aligns2 = None
        if cfg.train_align2:
            self.train_aligns2 = read_alignment_file(cfg.train_align2)
            if len(self.train_aligns2) != len(self.train_entries):
                raise ConfigError("second alignment set size differs")
        if cfg.semcat:
            self.taxonomy = load_taxonomy(cfg.taxonomy_hierarchy, cfg.taxonomy_senses,
                                          cfg.taxonomy_salient)
        if cfg.weights:
            self.weights = load_weights(cfg.weights)
        else:
            self.weights = default_weights()
        self.manifest["training_sentences"] = len(self.train_entries)

    def _transform_corpus(self, aligns):
        cfg = self.config
        trees = []
        gold = []
        leaf_links = []
        crossings_before = []
        crossings_after = []
        for entry, src, aset in zip(self.train_entries, self.train_sources, aligns):
            aset.validate(entry.graph, source_len=len(src))
            gd = disconnect(entry.graph)
            if cfg.reorder:
                from .transform import push_labels
                flat = push_labels(gd)
                crossings_before.append(count_crossings(aset.project(flat)))
            tree, gd = transform_pipeline(
                entry.graph, aset if cfg.reorder else None,
                restructure_mode=cfg.restructure, relabel=cfg.relabel,
                do_reorder=cfg.reorder, taxonomy=self.taxonomy)
            links = aset.project(tree)
            if cfg.reorder:
                crossings_after.append(count_crossings(links))
            trees.append(tree)
            gold.append(gd)
            leaf_links.append(links)
        return trees, gold, leaf_links, crossings_before, crossings_after

    def _treeify(self):
        from . import report  # deferred: pulls in matplotlib
        cfg = self.config
        trees, gold, links, cb, ca = self._transform_corpus(self.train_aligns)
        self.trees = trees
        self.gold_disconnected = gold
        self.leaf_links = links
        if self.train_aligns2 is not None:
            trees2, _, links2, cb2, ca2 = self._transform_corpus(self.train_aligns2)
            self.trees2, self.leaf_links2 = trees2, links2
            cb, ca = cb + cb2, ca + ca2
        else:
            self.trees2 = self.leaf_links2 = None
        write_tree_file(self.outdir / "trees" / "train.trees", self.trees)
        with open(self.outdir / "trees" / "train.amrese", "w", encoding="utf-8") as fh:
            for t in self.trees:
                fh.write(" ".join(yield_amrese(t)) + "\n")
        from .alignments import write_leaf_alignment_file
        write_leaf_alignment_file(self.outdir / "trees" / "train.leafalign", self.leaf_links)
        if cb:
            total_b, total_a = sum(cb), sum(ca)
            self.manifest["crossings_before"] = total_b
            self.manifest["crossings_after"] = total_a
            if total_b:
                self.manifest["crossing_reduction"] = round(100.0 * (total_b - total_a) / total_b, 2)
            report.crossings_figure(cb, ca, self.outdir / "figures" / "crossings.png")

    def _language_models(self):
        cfg = self.config
        amrese = [yield_amrese(t) for t in self.trees]
        m1 = NgramModel.train(amrese, order=cfg.ngram_order)
        m1.save(self.outdir / "lm" / "amrese.lm")
        self.ngram_models = [("ngram", m1)]
        if self.trees2 is not None:
            m2 = NgramModel.train([yield_amrese(t) for t in self.trees2], order=cfg.ngram_order)
            m2.save(self.outdir / "lm" / "amrese2.lm")
            self.ngram_models.append(("ngram2", m2))
        else:
            self.weights["ngram2"] = 0.0
        if cfg.amr_lm:
            self.amr_model = AmrTreeModel.train(
                self.gold_disconnected, taxonomy=self.taxonomy if cfg.semcat else None)
            self.amr_model.save(self.outdir / "lm" / "amr.lm")
        else:
            self.weights["amrlm"] = 0.0

    def _extract(self):
        tuples = list(zip(self.train_sources, self.trees, self.leaf_links))
        if self.trees2 is not None:
            tuples += list(zip(self.train_sources, self.trees2, self.leaf_links2))
        self.grammar = score_grammar(extract_grammar(tuples))
        self.grammar.save(self.outdir / "grammar" / "rules.tsv")
        self.manifest["rules"] = len(self.grammar)

    def _decoder(self):
        return Decoder(self.grammar, ngram_models=self.ngram_models,
                       amr_model=self.amr_model, weights=self.weights,
                       beam=self.config.beam)

    def _decode_set(self, name, source_path, penman_path):
        cfg = self.config
        sources = _read_sources(source_path, cfg.lowercase)
        decoder = self._decoder()
        if not sources:
            return sources, [], []
        work = [(decoder, src, cfg.kbest, cfg.rescore_k) for src in sources]
        if self.jobs > 1:
            with ProcessPoolExecutor(max_workers=self.jobs) as pool:
                all_results = list(pool.map(_decode_one, work))
        else:
            all_results = [_decode_one(w) for w in work]
        kbest_lines = []
        penman_lines = []
        for idx, results in enumerate(all_results):
            kbest_lines.extend(format_kbest(idx, results))
            penman_lines.append(emit_penman(results[0].graph) if results[0].graph is not None
                                else "(f0 / amr-fragment)")
        with open(self.outdir / "decode" / ("%s.kbest" % name), "w", encoding="utf-8") as fh:
            fh.write("\n".join(kbest_lines) + ("\n" if kbest_lines else ""))
        with open(self.outdir / "decode" / ("%s.penman" % name), "w", encoding="utf-8") as fh:
            for line in penman_lines:
                fh.write(line + "\n\n")
        golds = _read_graphs(penman_path, cfg.lowercase) if penman_path else []
        return sources, all_results, golds

    def _decode_and_score(self):
        from . import report  # deferred: pulls in matplotlib
        cfg = self.config
        corpus_scores = {}
        per_sentence = {}
        rows = []
        for name, src_path, gold_path in (("tune", cfg.tune_source, cfg.tune_penman),
                                          ("test", cfg.test_source, cfg.test_penman)):
            if not src_path:
                continue
            sources, results, golds = self._decode_set(name, src_path, gold_path)
            if not sources:
                rows.append((name, "n/a", "n/a", "n/a", 0))
                continue
            if golds and len(golds) != len(results):
                raise ConfigError("%s gold/source size mismatch" % name)
            if golds:
                pairs = [(r[0].graph, e.graph) for r, e in zip(results, golds)]
                corpus, per_sent = smatch_corpus(pairs, restarts=cfg.smatch_restarts,
                                                 seed=cfg.seed)
                corpus_scores[name] = corpus
                per_sentence[name] = [r.f_score for r in per_sent]
                rows.append((name, corpus.precision, corpus.recall, corpus.f_score,
                             len(sources)))
                self.scores[name] = corpus
        report.write_tsv(self.outdir / "scores" / "smatch.tsv",
                         ("set", "precision", "recall", "f", "sentences"), rows)
        if corpus_scores:
            report.score_figure(corpus_scores, per_sentence,
                                self.outdir / "figures" / "smatch.png")
        self.manifest["scores"] = {
            name: {"precision": round(c.precision, 6), "recall": round(c.recall, 6),
                   "f": round(c.f_score, 6)}
            for name, c in self.scores.items()}


def run_pipeline(config, outdir, jobs=1):
    """Run every stage; returns the manifest dict."""
    return PipelineRun(config, outdir, jobs=jobs).run()
