import json
from pathlib import Path

import numpy as np
import pytest

from distilcal.cli import main

DATA = Path(__file__).parent / "data"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestEceCommand:
    def test_hand_fixture_golden(self, capsys, tmp_path):
        out = tmp_path / "rel.csv"
        code, stdout, _ = run(
            capsys, "ece", "--input", DATA / "predictions_hand4.jsonl",
            "--rank", "1", "--bins", "2", "--out", out,
        )
        assert code == 0
        assert stdout == "rank=1 bins=2 ece=0.425000 n=4\n"
        assert out.read_bytes() == (DATA / "expected_ece_hand4.csv").read_bytes()

    def test_perfectly_calibrated_fixture(self, capsys, tmp_path):
        fix = tmp_path / "perfect.jsonl"
        fix.write_text(
            "\n".join('{"logits": [900.0, 0.0], "label": 0}' for _ in range(6)) + "\n"
        )
        out = tmp_path / "rel.csv"
        code, stdout, _ = run(capsys, "ece", "--input", fix, "--out", out)
        assert code == 0
        assert "ece=0.000000" in stdout

    def test_default_bins_is_fifteen(self, capsys, tmp_path):
        out = tmp_path / "rel.csv"
        code, stdout, _ = run(
            capsys, "ece", "--input", DATA / "predictions_hand4.jsonl", "--out", out
        )
        assert code == 0
        assert stdout.startswith("rank=1 bins=15 ")

    def test_batch_grouping_matches_manual_aggregation(self, capsys, tmp_path):
        rng = np.random.default_rng(0)
        fix = tmp_path / "many.jsonl"
        lines = []
        for _ in range(20):
            logits = rng.normal(size=3)
            lines.append(json.dumps({"logits": logits.tolist(), "label": 1}))
        fix.write_text("\n".join(lines) + "\n")
        out_pooled = tmp_path / "pooled.csv"
        out_batch = tmp_path / "batch.csv"
        _, pooled_line, _ = run(capsys, "ece", "--input", fix, "--bins", "2",
                                "--out", out_pooled)
        code, batch_line, _ = run(capsys, "ece", "--input", fix, "--bins", "2",
                                  "--group", "batch:10", "--out", out_batch)
        assert code == 0
        # two batches of 10, two bins each -> 4 data rows
        assert len(out_batch.read_text().splitlines()) == 5
        assert batch_line.endswith("n=20\n")

    def test_malformed_line_reports_number(self, capsys, tmp_path):
        fix = tmp_path / "bad.jsonl"
        fix.write_text('{"logits": [0.0, 1.0], "label": 0}\n{"oops": 1}\n')
        code, _, err = run(capsys, "ece", "--input", fix, "--out", tmp_path / "o.csv")
        assert code == 2
        assert ":2:" in err

    def test_missing_file_is_input_error(self, capsys, tmp_path):
        code, _, err = run(capsys, "ece", "--input", tmp_path / "nope.jsonl",
                           "--out", tmp_path / "o.csv")
        assert code == 2
        assert err


class TestFitTempCommand:
    def _write_predictions(self, path, logits, labels):
        with open(path, "w") as fh:
            for row, label in zip(logits, labels):
                fh.write(json.dumps({"logits": list(map(float, row)),
                                     "label": int(label)}) + "\n")

    def test_nll_never_worse(self, capsys, tmp_path):
        rng = np.random.default_rng(1)
        logits = rng.normal(scale=4, size=(60, 5))
        labels = np.argmax(logits, axis=1)
        labels[::4] = (labels[::4] + 1) % 5
        fix = tmp_path / "val.jsonl"
        self._write_predictions(fix, logits, labels)
        code, stdout, _ = run(capsys, "fit-temp", "--val", fix)
        assert code == 0
        fields = dict(kv.split("=") for kv in stdout.split())
        assert float(fields["nll_after"]) <= float(fields["nll_before"]) + 1e-9

    def test_prescaled_fixture_halves_t_star(self, capsys, tmp_path):
        rng = np.random.default_rng(2)
        logits = rng.normal(scale=5, size=(100, 4))
        labels = np.argmax(logits, axis=1)
        labels[::3] = (labels[::3] + 2) % 4
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        self._write_predictions(a, logits, labels)
        self._write_predictions(b, logits / 2.0, labels)
        _, out_a, _ = run(capsys, "fit-temp", "--val", a)
        _, out_b, _ = run(capsys, "fit-temp", "--val", b)
        t_a = float(dict(kv.split("=") for kv in out_a.split())["t_star"])
        t_b = float(dict(kv.split("=") for kv in out_b.split())["t_star"])
        assert t_b == pytest.approx(t_a / 2.0, rel=0.02)

    def test_default_bounds_pin_confident_fixture_to_005(self, capsys, tmp_path):
        logits = 8.0 * np.eye(4)[np.arange(40) % 4]
        labels = np.argmax(logits, axis=1)
        fix = tmp_path / "sharp.jsonl"
        self._write_predictions(fix, logits, labels)
        code, stdout, _ = run(capsys, "fit-temp", "--val", fix)
        assert code == 0
        assert stdout.startswith("t_star=0.050000 ")


class TestCombineCommand:
    def test_unit_temperatures_golden(self, capsys):
        code, stdout, _ = run(capsys, "combine", "--hyps", DATA / "hyps_flip.jsonl")
        assert code == 0
        assert stdout.encode() == (DATA / "expected_combine_unit.txt").read_bytes()

    def test_winner_flip_golden(self, capsys):
        code, stdout, _ = run(
            capsys, "combine", "--hyps", DATA / "hyps_flip.jsonl", "--t2", "4"
        )
        assert code == 0
        assert stdout.encode() == (DATA / "expected_combine_flip.txt").read_bytes()

    def test_tie_order_deterministic(self, capsys, tmp_path):
        fix = tmp_path / "ties.jsonl"
        fix.write_text(
            '{"utt": "u", "id": "first", "am_logp": -5.0, "lm_logp": -5.0}\n'
            '{"utt": "u", "id": "second", "am_logp": -6.0, "lm_logp": -4.0}\n'
        )
        _, out1, _ = run(capsys, "combine", "--hyps", fix)
        _, out2, _ = run(capsys, "combine", "--hyps", fix)
        assert out1 == out2
        assert out1.splitlines()[0] == "u\tbest\tfirst"


class TestTargetsCommand:
    def test_identity_map_unit_runs_reproduce_posteriors(self, capsys, tmp_path):
        align = tmp_path / "align.tsv"
        align.write_text("u1\ta b c\n")
        post = tmp_path / "post.tsv"
        post.write_text("u1\t0\t0.9 0.1\nu1\t1\t0.2 0.8\nu1\t2\t0.6 0.4\n")
        out = tmp_path / "targets.tsv"
        code, _, _ = run(capsys, "targets", "--align", align,
                         "--posteriors", post, "--out", out)
        assert code == 0
        rows = [line.split("\t") for line in out.read_text().splitlines()]
        assert [r[3] for r in rows] == [
            "t0:0.900000,0.100000", "t0:0.200000,0.800000", "t0:0.600000,0.400000",
        ]

    def test_three_teacher_golden(self, capsys, tmp_path):
        out = tmp_path / "targets.tsv"
        code, _, _ = run(
            capsys, "targets", "--align", DATA / "align_three.tsv",
            "--map", "identity", "--map", DATA / "map_mid.tsv",
            "--map", DATA / "map_one.tsv",
            "--posteriors", DATA / "post_fine.tsv",
            "--posteriors", DATA / "post_mid.tsv",
            "--posteriors", DATA / "post_one.tsv",
            "--out", out,
        )
        assert code == 0
        assert out.read_bytes() == (DATA / "expected_targets_three.tsv").read_bytes()

    def test_posterior_count_mismatch_exits_2_with_lengths(self, capsys, tmp_path):
        align = tmp_path / "align.tsv"
        align.write_text("u1\ta a b\n")  # dedups to 2 tokens
        post = tmp_path / "post.tsv"
        post.write_text("u1\t0\t0.5 0.5\nu1\t1\t0.5 0.5\nu1\t2\t0.5 0.5\n")
        code, _, err = run(capsys, "targets", "--align", align,
                           "--posteriors", post, "--out", tmp_path / "t.tsv")
        assert code == 2
        assert "3" in err and "2" in err


def write_config(path, **kv):
    path.write_text("".join(f"{k}={v}\n" for k, v in kv.items()))


FAST_TOY = dict(
    num_classes=4, input_dim=3, coarse_classes=2, hidden_dim=8,
    n_train=120, n_test=120, epochs=3, teacher_epochs=1,
    teacher_data_multiplier=2, batch_size=16,
)


class TestTrainCommand:
    def test_deterministic_model_file(self, capsys, tmp_path):
        cfg = tmp_path / "train.cfg"
        model1 = tmp_path / "m1.json"
        model2 = tmp_path / "m2.json"
        write_config(cfg, method="baseline", seed=1, out=model1, **FAST_TOY)
        code, out1, _ = run(capsys, "train", "--config", cfg)
        assert code == 0
        write_config(cfg, method="baseline", seed=1, out=model2, **FAST_TOY)
        _, out2, _ = run(capsys, "train", "--config", cfg)
        assert out1 == out2
        assert model1.read_bytes() == model2.read_bytes()

    def test_lst_lambda_one_matches_baseline_accuracy(self, capsys, tmp_path):
        cfg = tmp_path / "train.cfg"
        write_config(cfg, method="baseline", seed=2, out=tmp_path / "b.json", **FAST_TOY)
        _, out_base, _ = run(capsys, "train", "--config", cfg)
        write_config(cfg, method="lst", **{"lambda": 1.0}, seed=2,
                     out=tmp_path / "l.json", **FAST_TOY)
        _, out_lst, _ = run(capsys, "train", "--config", cfg)
        acc_base = dict(kv.split("=") for kv in out_base.split())["acc"]
        acc_lst = dict(kv.split("=") for kv in out_lst.split())["acc"]
        assert acc_base == acc_lst

    def test_unknown_config_key_rejected(self, capsys, tmp_path):
        cfg = tmp_path / "train.cfg"
        write_config(cfg, method="baseline", out=tmp_path / "m.json",
                     typo_key=3, **FAST_TOY)
        code, _, err = run(capsys, "train", "--config", cfg)
        assert code == 2
        assert "typo_key" in err


class TestSweepCommand:
    def test_byte_identical_across_runs_and_lambda_echo(self, capsys, tmp_path):
        cfg = tmp_path / "sweep.cfg"
        out1, out2 = tmp_path / "s1.csv", tmp_path / "s2.csv"
        write_config(cfg, lambdas="0.2,0.8", methods="lst,multitask", seeds="0",
                     out=out1, **FAST_TOY)
        code, _, _ = run(capsys, "sweep", "--config", cfg)
        assert code == 0
        write_config(cfg, lambdas="0.2,0.8", methods="lst,multitask", seeds="0",
                     out=out2, **FAST_TOY)
        run(capsys, "sweep", "--config", cfg)
        assert out1.read_bytes() == out2.read_bytes()
        body = out1.read_text().splitlines()
        assert body[0] == "method,lambda,seed,acc,ece1,ece2,ece3"
        assert {line.split(",")[1] for line in body[1:]} == {"0.200000", "0.800000"}


class TestPlumbing:
    def test_version_flag(self, capsys):
        for argv in (["--version"], ["ece", "--version"], ["sweep", "--version"]):
            with pytest.raises(SystemExit) as exc:
                main(argv)
            assert exc.value.code == 0
        out = capsys.readouterr().out
        assert "distilcal" in out

    def test_help_on_every_subcommand(self, capsys):
        for sub in ("ece", "fit-temp", "combine", "targets", "train", "sweep"):
            with pytest.raises(SystemExit) as exc:
                main([sub, "--help"])
            assert exc.value.code == 0
