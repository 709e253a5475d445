"""Command line interface.

Subcommands: treeify, semcat, lm, extract, decode, smatch, tune, run.
Global flags --seed and --jobs apply wherever randomness or per-sentence
parallelism is involved.
"""

import argparse
import sys
from pathlib import Path

from .alignments import read_alignment_file, write_leaf_alignment_file
from .decoder import Decoder, default_weights, format_kbest, load_weights, save_weights
from .ghkm import RuleGrammar, extract_grammar, score_grammar
from .graph import emit_penman
from .lm import AmrTreeModel, NgramModel
from .pipeline import PipelineConfig, run_pipeline, tokenize, _read_graphs, _read_sources
from .semcat import assign_category, load_taxonomy
from .smatch import smatch_corpus
from .transform import pipeline as transform_pipeline, yield_amrese
from .tree import read_tree_file, write_tree_file


def _taxonomy_args(p):
    p.add_argument("--hierarchy", required=True, help="hierarchy.tsv: child<TAB>parent lines")
    p.add_argument("--senses", required=True, help="senses.tsv: lemma<TAB>category<TAB>count lines")
    p.add_argument("--salient", required=True, help="salient.txt: one category per line")


def _load_tax(args):
    return load_taxonomy(args.hierarchy, args.senses, args.salient)


def cmd_treeify(args):
    entries = _read_graphs(args.amr, args.lowercase)
    aligns = read_alignment_file(args.align) if args.align else None
    taxonomy = None
    if args.hierarchy or args.senses or args.salient:
        if not (args.hierarchy and args.senses and args.salient):
            print("treeify: semantic categories need --hierarchy, --senses and --salient",
                  file=sys.stderr)
            return 2
        taxonomy = _load_tax(args)
    trees = []
    leaf_links = []
    for idx, entry in enumerate(entries):
        aset = aligns[idx] if aligns else None
        tree, _ = transform_pipeline(entry.graph, aset,
                                     restructure_mode=args.restructure,
                                     relabel=args.relabel,
                                     do_reorder=args.reorder and aset is not None,
                                     taxonomy=taxonomy)
        trees.append(tree)
        if aset is not None:
            leaf_links.append(aset.project(tree))
    write_tree_file(args.out, trees)
    if args.amrese:
        with open(args.amrese, "w", encoding="utf-8") as fh:
            for t in trees:
                fh.write(" ".join(yield_amrese(t)) + "\n")
    if args.leafalign and leaf_links:
        write_leaf_alignment_file(args.leafalign, leaf_links)
    print("wrote %d trees to %s" % (len(trees), args.out))
    return 0


def cmd_semcat(args):
    from .graph import concept_lemma
    tax = _load_tax(args)
    if args.semcat_command == "assign":
        print(assign_category(tax, concept_lemma(args.lemma)))
        return 0
    if args.semcat_command == "apply":
        from .semcat import apply_categories
        trees = [apply_categories(t, tax) for t in read_tree_file(args.trees)]
        write_tree_file(args.out, trees)
        print("wrote %d trees to %s" % (len(trees), args.out))
        return 0
    raise AssertionError


def cmd_lm(args):
    if args.lm_command == "train-ngram":
        with open(args.input, encoding="utf-8") as fh:
            corpus = [line.split() for line in fh if line.strip()]
        model = NgramModel.train(corpus, order=args.order)
        model.save(args.out)
        if args.arpa:
            model.export_arpa(args.arpa)
        print("trained %d-gram model on %d sequences" % (args.order, len(corpus)))
        return 0
    if args.lm_command == "train-amr":
        entries = _read_graphs(args.amr, args.lowercase)
        taxonomy = None
        if args.hierarchy or args.senses or args.salient:
            if not (args.hierarchy and args.senses and args.salient):
                print("lm train-amr: semantic categories need --hierarchy, --senses "
                      "and --salient", file=sys.stderr)
                return 2
            taxonomy = _load_tax(args)
        from .transform import disconnect
        model = AmrTreeModel.train((disconnect(e.graph) for e in entries), taxonomy=taxonomy)
        model.save(args.out)
        print("trained AMR model on %d graphs" % len(entries))
        return 0
    if args.lm_command == "score":
        if not args.amr and not args.text:
            print("lm score: pass --amr or --text", file=sys.stderr)
            return 2
        if args.amr:
            model = AmrTreeModel.load(args.model)
            entries = _read_graphs(args.amr, args.lowercase)
            from .transform import disconnect
            for idx, e in enumerate(entries):
                print("%d\t%.6f" % (idx, model.logprob(disconnect(e.graph))))
        else:
            model = NgramModel.load(args.model)
            with open(args.text, encoding="utf-8") as fh:
                for idx, line in enumerate(fh):
                    if line.strip():
                        print("%d\t%.6f" % (idx, model.score_sequence(line.split())))
        return 0
    raise AssertionError


def cmd_extract(args):
    from .alignments import read_leaf_alignment_file
    sources = _read_sources(args.source, args.lowercase)
    trees = read_tree_file(args.trees)
    links = read_leaf_alignment_file(args.leafalign)
    if not (len(sources) == len(trees) == len(links)):
        print("extract: corpus sizes differ", file=sys.stderr)
        return 2
    grammar = score_grammar(extract_grammar(zip(sources, trees, links)))
    grammar.save(args.out)
    print("extracted %d rules" % len(grammar))
    return 0


def cmd_decode(args):
    grammar = RuleGrammar.load(args.grammar)
    ngram_models = []
    if args.ngram:
        ngram_models.append(("ngram", NgramModel.load(args.ngram)))
    if args.ngram2:
        ngram_models.append(("ngram2", NgramModel.load(args.ngram2)))
    amr_model = AmrTreeModel.load(args.amrlm) if args.amrlm else None
    weights = load_weights(args.weights) if args.weights else default_weights()
    decoder = Decoder(grammar, ngram_models=ngram_models, amr_model=amr_model,
                      weights=weights, beam=args.beam)
    kbest_fh = open(args.kbest_out, "w", encoding="utf-8") if args.kbest_out else None
    for idx, line in enumerate(sys.stdin):
        src = tokenize(line.rstrip("\n"), args.lowercase)
        if not src:
            continue
        results = decoder.decode(src, kbest=args.kbest, rescore_k=args.rescore_k)
        best = results[0]
        graph = best.graph
        print(emit_penman(graph) if graph is not None else "(f0 / amr-fragment)")
        print()
        if kbest_fh:
            kbest_fh.write("\n".join(format_kbest(idx, results)) + "\n")
    if kbest_fh:
        kbest_fh.close()
    return 0


def cmd_smatch(args):
    gold = _read_graphs(args.gold, args.lowercase)
    test = _read_graphs(args.test, args.lowercase)
    if len(gold) != len(test):
        print("smatch: corpora differ in size", file=sys.stderr)
        return 2
    mode = "exact" if args.exact else "hillclimb"
    corpus, per_sent = smatch_corpus(
        ((t.graph, g.graph) for t, g in zip(test, gold)),
        restarts=args.restarts, seed=args.seed, mode=mode,
        include_top=not args.no_top)
    if args.per_sent:
        for idx, r in enumerate(per_sent):
            print("%d\t%.4f\t%.4f\t%.4f" % (idx, r.precision, r.recall, r.f_score))
    print("%.4f %.4f %.4f" % (corpus.precision, corpus.recall, corpus.f_score))
    return 0


def cmd_tune(args):
    from .tune import DevCorpus, coordinate_ascent
    from . import report as report_mod
    src_path, amr_path, align_path = args.dev.split(",")
    sources = _read_sources(src_path, args.lowercase)
    entries = _read_graphs(amr_path, args.lowercase)
    aligns = read_alignment_file(align_path)
    if not (len(sources) == len(entries) == len(aligns)):
        print("tune: development corpus sizes differ", file=sys.stderr)
        return 2
    refs = []
    golds = []
    for entry, aset in zip(entries, aligns):
        tree, _ = transform_pipeline(entry.graph, aset, restructure_mode=args.restructure,
                                     relabel=True, do_reorder=True)
        refs.append([yield_amrese(tree)])
        golds.append(entry.graph)
    dev = DevCorpus(sources, golds, refs)
    grammar = RuleGrammar.load(args.grammar)
    ngram_models = [("ngram", NgramModel.load(args.ngram))] if args.ngram else []
    if args.ngram2:
        ngram_models.append(("ngram2", NgramModel.load(args.ngram2)))
    amr_model = AmrTreeModel.load(args.amrlm) if args.amrlm else None
    initial = load_weights(args.weights) if args.weights else None
    rep = coordinate_ascent(dev, grammar, ngram_models, amr_model,
                            objective=args.objective, initial_weights=initial,
                            max_passes=args.max_passes, beam=args.beam,
                            rescore_k=args.rescore_k, seed=args.seed,
                            log=(print if args.verbose else None))
    save_weights(args.out, rep.final_weights)
    if args.report:
        outdir = Path(args.report)
        outdir.mkdir(parents=True, exist_ok=True)
        rows = [(i, e.feature or "", e.bleu, e.smatch, int(e.accepted))
                for i, e in enumerate(rep.evaluations)]
        report_mod.write_tsv(outdir / "trace.tsv",
                             ("evaluation", "feature", "bleu_amrese", "smatch", "accepted"),
                             rows)
        report_mod.tune_trace_figure(rep, outdir / "trace.png")
    corr = "n/a" if rep.correlation is None else "%.4f" % rep.correlation
    print("tuned %s over %d evaluations; corr(BLEU, Smatch) = %s"
          % (args.objective, len(rep.evaluations), corr))
    return 0


def cmd_run(args):
    config = PipelineConfig.load(args.config)
    if args.seed is not None:
        config.seed = args.seed
    manifest = run_pipeline(config, args.out, jobs=args.jobs)
    failed = [s for s in manifest["stages"] if s.get("status") == "failed"]
    for s in manifest["stages"]:
        line = "%-16s %s" % (s["name"], s["status"])
        if "seconds" in s:
            line += "  (%.1fs)" % s["seconds"]
        print(line)
    for name, score in manifest.get("scores", {}).items():
        print("%s smatch F = %.4f" % (name, score["f"]))
    return 1 if failed else 0


def build_parser():
    parser = argparse.ArgumentParser(prog="amrsbmt",
                                     description="AMR parsing as string-to-tree translation")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="random seed (default 0)")
    common.add_argument("--jobs", type=int, default=1, help="parallel sentence workers")
    common.add_argument("--no-lowercase", dest="lowercase", action="store_false",
                        help="keep input case (default: lowercase all data)")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_parser(name, **kw):
        kw.setdefault("parents", [common])
        return sub.add_parser(name, **kw)

    p = add_parser("treeify", help="transform a PENMAN corpus into trees")
    p.add_argument("--amr", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--align", default="")
    p.add_argument("--restructure", choices=("flat", "concept", "role"), default="role")
    p.add_argument("--no-relabel", dest="relabel", action="store_false")
    p.add_argument("--no-reorder", dest="reorder", action="store_false")
    p.add_argument("--amrese", default="", help="also write AMRese yields here")
    p.add_argument("--leafalign", default="", help="also write leaf-projected alignments here")
    p.add_argument("--hierarchy", default="")
    p.add_argument("--senses", default="")
    p.add_argument("--salient", default="")
    p.set_defaults(fn=cmd_treeify)

    p = add_parser("semcat", help="semantic category assignment")
    sc_sub = p.add_subparsers(dest="semcat_command", required=True)
    q = sc_sub.add_parser("assign", parents=[common])
    _taxonomy_args(q)
    q.add_argument("--lemma", required=True, help="print the category of one lemma")
    q.set_defaults(fn=cmd_semcat)
    q = sc_sub.add_parser("apply", parents=[common])
    _taxonomy_args(q)
    q.add_argument("--trees", required=True, help="relabel concept preterminals in a tree file")
    q.add_argument("--out", required=True)
    q.set_defaults(fn=cmd_semcat)

    p = add_parser("lm", help="language models")
    lm_sub = p.add_subparsers(dest="lm_command", required=True)
    q = lm_sub.add_parser("train-ngram", parents=[common])
    q.add_argument("--input", required=True, help="one token sequence per line")
    q.add_argument("--out", required=True)
    q.add_argument("--order", type=int, default=5)
    q.add_argument("--arpa", default="", help="also export an ARPA-style file")
    q.set_defaults(fn=cmd_lm)
    q = lm_sub.add_parser("train-amr", parents=[common])
    q.add_argument("--amr", required=True)
    q.add_argument("--out", required=True)
    q.add_argument("--hierarchy", default="")
    q.add_argument("--senses", default="")
    q.add_argument("--salient", default="")
    q.set_defaults(fn=cmd_lm)
    q = lm_sub.add_parser("score", parents=[common])
    q.add_argument("--model", required=True)
    q.add_argument("--amr", default="", help="score graphs with an AMR model")
    q.add_argument("--text", default="", help="score token sequences with an n-gram model")
    q.set_defaults(fn=cmd_lm)

    p = add_parser("extract", help="extract a rule grammar")
    p.add_argument("--source", required=True, help="tokenized source sentences")
    p.add_argument("--trees", required=True)
    p.add_argument("--leafalign", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_extract)

    p = add_parser("decode", help="decode source sentences from stdin to PENMAN on stdout")
    p.add_argument("--grammar", required=True)
    p.add_argument("--ngram", default="")
    p.add_argument("--ngram2", default="")
    p.add_argument("--amrlm", default="")
    p.add_argument("--weights", default="")
    p.add_argument("--beam", type=int, default=100)
    p.add_argument("--kbest", type=int, default=10)
    p.add_argument("--rescore-k", type=int, default=500)
    p.add_argument("--kbest-out", default="", help="write the k-best list here")
    p.set_defaults(fn=cmd_decode)

    p = add_parser("smatch", help="score test graphs against gold graphs")
    p.add_argument("--gold", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--exact", action="store_true")
    p.add_argument("--restarts", type=int, default=4)
    p.add_argument("--per-sent", action="store_true")
    p.add_argument("--no-top", action="store_true", help="drop the TOP triple")
    p.set_defaults(fn=cmd_smatch)

    p = add_parser("tune", help="coordinate-ascent weight tuning")
    p.add_argument("--objective", choices=("smatch", "bleu"), default="smatch")
    p.add_argument("--dev", required=True, help="source,amr,align file triple")
    p.add_argument("--grammar", required=True)
    p.add_argument("--ngram", default="")
    p.add_argument("--ngram2", default="")
    p.add_argument("--amrlm", default="")
    p.add_argument("--weights", default="", help="initial weights file")
    p.add_argument("--restructure", choices=("flat", "concept", "role"), default="role")
    p.add_argument("--max-passes", type=int, default=3)
    p.add_argument("--beam", type=int, default=100)
    p.add_argument("--rescore-k", type=int, default=100)
    p.add_argument("--out", required=True, help="final weights file")
    p.add_argument("--report", default="", help="write trace.tsv and trace.png here")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(fn=cmd_tune)

    p = add_parser("run", help="run the full pipeline from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_run)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "seed", None) is None and args.command != "run":
        args.seed = 0
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
