import io
import json
import sys

import pytest

from amrsbmt.cli import main
from amrsbmt.pipeline import ConfigError, PipelineConfig, tokenize
from helpers import taxonomy_paths, toy_path

HIER, SENSES, SALIENT = taxonomy_paths()


def run_cli(argv, stdin_text=None, capsys=None):
    old = sys.stdin
    if stdin_text is not None:
        sys.stdin = io.StringIO(stdin_text)
    try:
        code = main(argv)
    finally:
        sys.stdin = old
    return code


def test_tokenizer():
    assert tokenize("The soldier did not fear death.") == \
        ["the", "soldier", "did", "not", "fear", "death", "."]
    assert tokenize("Don't stop, O'Neil-san!") == ["don't", "stop", ",", "o'neil-san", "!"]
    assert tokenize("keep CASE", lowercase=False) == ["keep", "CASE"]


def test_config_round_trip(tmp_path):
    cfg = PipelineConfig(train_penman="a", tune_source="b", beam=17, semcat=True,
                         taxonomy_hierarchy=HIER, taxonomy_senses=SENSES,
                         taxonomy_salient=SALIENT)
    p = tmp_path / "c.cfg"
    cfg.save(p)
    text1 = p.read_bytes()
    cfg2 = PipelineConfig.load(p)
    cfg2.save(p)
    assert p.read_bytes() == text1
    assert cfg2.beam == 17 and cfg2.semcat is True


def test_config_rejects_unknown_keys(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("nonsense = 1\n")
    with pytest.raises(ConfigError):
        PipelineConfig.load(p)


def test_config_rejects_bad_mode():
    with pytest.raises(ConfigError):
        PipelineConfig(restructure="sideways")


def test_semcat_assign_cli(capsys):
    code = main(["semcat", "assign", "--hierarchy", HIER, "--senses", SENSES,
                 "--salient", SALIENT, "--lemma", "computer"])
    assert code == 0
    assert capsys.readouterr().out.strip() == "artefact"


def test_treeify_semcat_and_partial_taxonomy(tmp_path, capsys):
    out = tmp_path / "sc.trees"
    code = main(["treeify", "--amr", toy_path("dev.amr"), "--out", str(out),
                 "--hierarchy", HIER, "--senses", SENSES, "--salient", SALIENT])
    assert code == 0
    assert "(person " in out.read_text()
    capsys.readouterr()
    code = main(["treeify", "--amr", toy_path("dev.amr"), "--out", str(out),
                 "--hierarchy", HIER])
    assert code == 2
    code = main(["lm", "train-amr", "--amr", toy_path("dev.amr"),
                 "--out", str(tmp_path / "m.lm"), "--senses", SENSES])
    assert code == 2


def test_semcat_apply_cli(tmp_path, capsys):
    trees = tmp_path / "t.trees"
    main(["treeify", "--amr", toy_path("dev.amr"), "--out", str(trees)])
    out = tmp_path / "sc.trees"
    code = main(["semcat", "apply", "--hierarchy", HIER, "--senses", SENSES,
                 "--salient", SALIENT, "--trees", str(trees), "--out", str(out)])
    assert code == 0
    text = out.read_text()
    assert "(person " in text or "(animal " in text


def test_treeify_extract_decode_smatch_cycle(tmp_path, capsys):
    trees = tmp_path / "t.trees"
    amrese = tmp_path / "t.amrese"
    leaf = tmp_path / "t.leaf"
    code = main(["treeify", "--amr", toy_path("train.amr"), "--align", toy_path("train.align"),
                 "--out", str(trees), "--amrese", str(amrese), "--leafalign", str(leaf)])
    assert code == 0
    assert len(trees.read_text().splitlines()) == 50

    grammar = tmp_path / "g.tsv"
    code = main(["extract", "--source", toy_path("train.en"), "--trees", str(trees),
                 "--leafalign", str(leaf), "--out", str(grammar)])
    assert code == 0

    ngram = tmp_path / "ng.lm"
    code = main(["lm", "train-ngram", "--input", str(amrese), "--out", str(ngram),
                 "--order", "5", "--arpa", str(tmp_path / "ng.arpa")])
    assert code == 0

    amrlm = tmp_path / "amr.lm"
    code = main(["lm", "train-amr", "--amr", toy_path("train.amr"), "--out", str(amrlm)])
    assert code == 0
    capsys.readouterr()

    out_penman = tmp_path / "out.amr"
    kbest = tmp_path / "out.kbest"
    old_stdin, old_stdout = sys.stdin, sys.stdout
    sys.stdin = io.StringIO("the soldier fears death .\nthe dog sleeps .\n")
    sys.stdout = io.StringIO()
    try:
        code = main(["decode", "--grammar", str(grammar), "--ngram", str(ngram),
                     "--amrlm", str(amrlm), "--beam", "50", "--kbest", "3",
                     "--kbest-out", str(kbest)])
        printed = sys.stdout.getvalue()
    finally:
        sys.stdin, sys.stdout = old_stdin, old_stdout
    assert code == 0
    out_penman.write_text(printed)
    assert printed.count("(") >= 2
    lines = kbest.read_text().splitlines()
    assert lines and all(" ||| " in l for l in lines)

    code = main(["smatch", "--gold", toy_path("train.amr"), "--test", toy_path("train.amr"),
                 "--restarts", "2"])
    assert code == 0
    out = capsys.readouterr().out.strip().split("\n")[-1]
    p, r, f = out.split()
    assert float(f) == 1.0


def test_smatch_cli_per_sent(capsys, tmp_path):
    code = main(["smatch", "--gold", toy_path("dev.amr"), "--test", toy_path("dev.amr"),
                 "--per-sent", "--exact"])
    assert code == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 11  # 10 sentences plus the corpus line
    assert lines[-1] == "1.0000 1.0000 1.0000"


def test_lm_score_cli(tmp_path, capsys):
    amrese = tmp_path / "c.txt"
    amrese.write_text("a b c\na b\n")
    model = tmp_path / "m.lm"
    assert main(["lm", "train-ngram", "--input", str(amrese), "--out", str(model)]) == 0
    capsys.readouterr()
    assert main(["lm", "score", "--model", str(model), "--text", str(amrese)]) == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert len(out) == 2
    assert all(float(line.split("\t")[1]) < 0 for line in out)


def _toy_config(tmp_path, **overrides):
    kwargs = dict(
        train_penman=toy_path("train.amr"), train_source=toy_path("train.en"),
        train_align=toy_path("train.align"),
        tune_penman=toy_path("dev.amr"), tune_source=toy_path("dev.en"),
        tune_align=toy_path("dev.align"),
        test_penman=toy_path("train.amr"), test_source=toy_path("train.en"),
        beam=50, kbest=3, rescore_k=50)
    kwargs.update(overrides)
    cfg = PipelineConfig(**kwargs)
    p = tmp_path / "toy.cfg"
    cfg.save(p)
    return p


def test_run_pipeline_cli(tmp_path, capsys):
    cfg = _toy_config(tmp_path)
    out = tmp_path / "run"
    code = main(["run", "--config", str(cfg), "--out", str(out)])
    assert code == 0
    printed = capsys.readouterr().out
    assert "decode-score" in printed
    manifest = json.loads((out / "manifest.json").read_text())
    assert all(s["status"] == "ok" for s in manifest["stages"])
    assert (out / "scores" / "smatch.tsv").exists()
    assert (out / "figures" / "smatch.png").exists()
    assert (out / "figures" / "crossings.png").exists()
    assert (out / "grammar" / "rules.tsv").exists()
    assert manifest["scores"]["test"]["f"] >= 0.9


def test_run_pipeline_empty_test_set(tmp_path, capsys):
    empty_src = tmp_path / "empty.en"
    empty_src.write_text("")
    empty_amr = tmp_path / "empty.amr"
    empty_amr.write_text("")
    cfg = _toy_config(tmp_path, test_penman=str(empty_amr), test_source=str(empty_src),
                      tune_penman="", tune_source="", tune_align="")
    out = tmp_path / "run"
    code = main(["run", "--config", str(cfg), "--out", str(out)])
    assert code == 0
    scores = (out / "scores" / "smatch.tsv").read_text()
    assert "n/a" in scores


def test_run_pipeline_semcat_config(tmp_path, capsys):
    cfg = _toy_config(tmp_path, semcat=True, taxonomy_hierarchy=HIER,
                      taxonomy_senses=SENSES, taxonomy_salient=SALIENT,
                      tune_penman="", tune_source="", tune_align="")
    out = tmp_path / "runsc"
    code = main(["run", "--config", str(cfg), "--out", str(out)])
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["scores"]["test"]["f"] >= 0.9


def test_run_pipeline_concatenated_alignments(tmp_path, capsys):
    cfg = _toy_config(tmp_path, train_align2=toy_path("train.align"),
                      tune_penman="", tune_source="", tune_align="")
    out = tmp_path / "run2"
    code = main(["run", "--config", str(cfg), "--out", str(out)])
    assert code == 0
    assert (out / "lm" / "amrese2.lm").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["scores"]["test"]["f"] >= 0.9


def test_tune_cli(tmp_path, capsys):
    # prepare grammar and models from the dev slice for speed
    trees = tmp_path / "t.trees"
    amrese = tmp_path / "t.amrese"
    leaf = tmp_path / "t.leaf"
    main(["treeify", "--amr", toy_path("dev.amr"), "--align", toy_path("dev.align"),
          "--out", str(trees), "--amrese", str(amrese), "--leafalign", str(leaf)])
    grammar = tmp_path / "g.tsv"
    main(["extract", "--source", toy_path("dev.en"), "--trees", str(trees),
          "--leafalign", str(leaf), "--out", str(grammar)])
    ngram = tmp_path / "ng.lm"
    main(["lm", "train-ngram", "--input", str(amrese), "--out", str(ngram), "--order", "3"])
    capsys.readouterr()
    weights = tmp_path / "w.txt"
    report = tmp_path / "rep"
    code = main(["tune", "--objective", "bleu",
                 "--dev", "%s,%s,%s" % (toy_path("dev.en"), toy_path("dev.amr"), toy_path("dev.align")),
                 "--grammar", str(grammar), "--ngram", str(ngram),
                 "--max-passes", "1", "--beam", "20", "--rescore-k", "20",
                 "--out", str(weights), "--report", str(report)])
    assert code == 0
    assert weights.exists()
    assert (report / "trace.tsv").exists()
    assert (report / "trace.png").exists()
    trace = (report / "trace.tsv").read_text().splitlines()
    assert trace[0].split("\t") == ["evaluation", "feature", "bleu_amrese", "smatch", "accepted"]
    assert len(trace) > 2
