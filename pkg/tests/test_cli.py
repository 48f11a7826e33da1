import csv
import json


from hybridsim.cli import DEFAULTS, _resolve, build_parser, main

SMALL_GEN = ["gen-data", "--users", "60", "--posts", "80", "--communities", "3",
             "--p-in", "0.2", "--p-out", "0.01", "--seed", "3"]
SMALL_TRAIN = ["train", "--epochs", "2", "--dim", "8", "--heads", "2", "--max-len", "16", "--batch-size", "32"]


def run(tmp_path, *argv):
    return main(["--workdir", str(tmp_path), *argv])


def test_end_to_end(tmp_path, capsys):
    assert run(tmp_path, *SMALL_GEN) == 0
    assert run(tmp_path, "stats") == 0
    assert run(tmp_path, *SMALL_TRAIN) == 0
    assert (tmp_path / "model.csdm").exists()
    assert (tmp_path / "history.csv").read_text().startswith("epoch,train_loss,valid_loss")
    assert run(tmp_path, "simulate", "--agents", "mock", "--k", "10", "--k", "20", "--k", "50") == 0
    for name in ("predictions.jsonl", "skips.jsonl", "decisions.jsonl"):
        assert (tmp_path / name).exists()
    capsys.readouterr()
    assert run(tmp_path, "evaluate", "--k", "10", "--k", "20", "--k", "50") == 0
    out = capsys.readouterr().out
    assert "| Ours@10 |" in out and "| Ours@50 |" in out
    rows = list(csv.DictReader(open(tmp_path / "report.csv")))
    assert [r["k"] for r in rows] == ["10", "20", "50"]
    assert run(tmp_path, "pop", "--k", "10") == 0
    assert (tmp_path / "pop_report.csv").exists()
    assert run(tmp_path, "simulate", "--seed-source", "first-hour", "--k", "10") == 0


def test_stats_from_counts(tmp_path, capsys):
    assert run(tmp_path, "stats", "--counts", "273", "6247", "7550") == 0
    out = capsys.readouterr().out
    assert "Avg.Len 27.66" in out and "Spar 99.56%" in out


def test_unknown_subcommand_exits_two(tmp_path, capsys):
    assert run(tmp_path, "fly") == 2
    assert "usage" in capsys.readouterr().err


def test_unknown_flag_exits_two(tmp_path):
    assert run(tmp_path, "train", "--wings", "2") == 2


def test_missing_data_is_one_line_error(tmp_path, capsys):
    assert run(tmp_path, "train") == 1
    err = capsys.readouterr().err.strip()
    assert err.startswith("error:") and "\n" not in err


def test_evaluate_without_predictions(tmp_path, capsys):
    assert run(tmp_path, *SMALL_GEN) == 0
    assert run(tmp_path, "evaluate") == 1
    assert "run simulate first" in capsys.readouterr().err


def test_bad_config_file(tmp_path, capsys):
    (tmp_path / "config.json").write_text("{oops")
    assert run(tmp_path, "stats", "--counts", "1", "3", "3") == 1
    assert "bad config" in capsys.readouterr().err
    assert main(["--workdir", str(tmp_path), "--config", str(tmp_path / "nope.json"), "stats"]) == 1


def test_config_merge_order():
    args = build_parser().parse_args(["train", "--epochs", "7"])
    cfg = {"lr": 0.5, "dim": 16, "train": {"epochs": 3, "dim": 32}}
    out = _resolve(args, cfg)
    assert out["epochs"] == 7          # flag beats config
    assert out["dim"] == 32            # section beats top level
    assert out["lr"] == 0.5            # top level beats default
    assert out["batch_size"] == DEFAULTS["train"]["batch_size"]


def test_simulate_defaults():
    args = build_parser().parse_args(["simulate"])
    out = _resolve(args, {})
    assert out["core_users"] == 100
    assert out["agents"] == "mock"
    assert out["k"] == [10]


def test_config_file_is_read(tmp_path):
    assert run(tmp_path, *SMALL_GEN) == 0
    (tmp_path / "config.json").write_text(json.dumps({"train": {"epochs": 1, "dim": 8, "heads": 2,
                                                                "max_len": 16}}))
    assert run(tmp_path, "train") == 0
    rows = (tmp_path / "history.csv").read_text().strip().splitlines()
    assert len(rows) == 2
