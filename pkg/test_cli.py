import json

import pytest
from click.testing import CliRunner

from app.corpus import parse_conll
from conftest import conll_text, lexicon_corpus


def report_value(output, key):
    for line in output.splitlines():
        name, _, value = line.partition("\t")
        if name == key:
            return value
    raise AssertionError(f"{key!r} not in output:\n{output}")


def best_logged_f(log_path):
    rows = [line.split("\t") for line in log_path.read_text(encoding="utf-8").splitlines()[1:]]
    return max(rows, key=lambda r: float(r[2]))[2]


@pytest.fixture()
def trained(runner, toy_files):
    out = toy_files / "run"
    result = runner.invoke(args=[
        "train", "--config", str(toy_files / "toy.toml"),
        "--train", str(toy_files / "train.conll"),
        "--dev", str(toy_files / "dev.conll"),
        "--out", str(out),
    ])
    assert result.exit_code == 0, result.output
    return out


def test_train_writes_checkpoint_config_and_log(trained):
    assert (trained / "model.npz").is_file()
    assert (trained / "train.log").read_text(encoding="utf-8").startswith("epoch\tmean_nll\tdev_f\tlr\n")
    echo = json.loads((trained / "config.json").read_text(encoding="utf-8"))
    assert echo["model"]["composition"] == "sconcate"
    assert echo["train"]["max_epochs"] == 4


def test_train_then_predict_then_eval_reproduces_the_logged_f(runner, trained, toy_files):
    pred = toy_files / "dev.pred"
    result = runner.invoke(args=["predict", "--model", str(trained / "model.npz"),
                                 "--input", str(toy_files / "dev.conll"), "--output", str(pred)])
    assert result.exit_code == 0, result.output
    assert len(parse_conll(str(pred))) == 4

    result = runner.invoke(args=["eval", "--gold", str(toy_files / "dev.conll"), "--pred", str(pred)])
    assert result.exit_code == 0, result.output
    assert report_value(result.output, "F") == best_logged_f(trained / "train.log")


def test_rerun_with_the_same_seed_gives_the_same_log(runner, trained, toy_files):
    again = toy_files / "again"
    result = runner.invoke(args=[
        "train", "--config", str(toy_files / "toy.toml"),
        "--train", str(toy_files / "train.conll"),
        "--dev", str(toy_files / "dev.conll"),
        "--out", str(again),
    ])
    assert result.exit_code == 0, result.output
    assert (again / "train.log").read_bytes() == (trained / "train.log").read_bytes()


def test_train_without_dev_holds_out_the_tail(runner, toy_files):
    result = runner.invoke(args=["train", "--config", str(toy_files / "toy.toml"),
                                 "--train", str(toy_files / "train.conll"), "--out", str(toy_files / "nodev")])
    assert result.exit_code == 0, result.output
    assert (toy_files / "nodev" / "model.npz").is_file()


def test_missing_embedding_file_exits_with_config_error(runner, toy_files):
    config = toy_files / "missing.toml"
    config.write_text((toy_files / "toy.toml").read_text(encoding="utf-8")
                      + 'MODEL_UNIT_EMBEDDINGS = "nowhere.txt"\n', encoding="utf-8")
    result = runner.invoke(args=["train", "--config", str(config), "--train", str(toy_files / "train.conll"),
                                 "--out", str(toy_files / "x")])
    assert result.exit_code == 2
    assert "error: ConfigError:" in result.output


def test_missing_training_file_exits_with_data_error(runner, toy_files):
    result = runner.invoke(args=["train", "--config", str(toy_files / "toy.toml"),
                                 "--train", str(toy_files / "nope.conll"), "--out", str(toy_files / "x")])
    assert result.exit_code == 3
    assert "error: DataError:" in result.output


def test_malformed_training_file_exits_with_parse_error(runner, toy_files):
    bad = toy_files / "bad.conll"
    bad.write_text("a O\nb Q-PER\n", encoding="utf-8")
    result = runner.invoke(args=["train", "--config", str(toy_files / "toy.toml"),
                                 "--train", str(bad), "--out", str(toy_files / "x")])
    assert result.exit_code == 3
    assert "error: ParseError:" in result.output
    assert "bad.conll:2:" in result.output


def test_predict_empty_input(runner, trained, toy_files):
    empty = toy_files / "empty.conll"
    empty.write_text("", encoding="utf-8")
    out = toy_files / "empty.pred"
    result = runner.invoke(args=["predict", "--model", str(trained / "model.npz"),
                                 "--input", str(empty), "--output", str(out)])
    assert result.exit_code == 0, result.output
    assert out.read_text(encoding="utf-8") == ""


def test_predict_with_a_broken_checkpoint(runner, toy_files):
    junk = toy_files / "junk.npz"
    junk.write_bytes(b"\x00" * 16)
    result = runner.invoke(args=["predict", "--model", str(junk), "--input", str(toy_files / "dev.conll"),
                                 "--output", str(toy_files / "x.pred")])
    assert result.exit_code == 4
    assert "error: CheckpointError:" in result.output


def test_eval_examples(runner, tmp_path):
    gold = tmp_path / "gold.conll"
    gold.write_text("Michael B-PER\nJordan E-PER\nis O\n", encoding="utf-8")
    pred = tmp_path / "pred.conll"
    pred.write_text("Michael S-PER\nJordan S-PER\nis O\n", encoding="utf-8")

    result = runner.invoke(args=["eval", "--gold", str(gold), "--pred", str(gold)])
    assert result.exit_code == 0, result.output
    assert [report_value(result.output, k) for k in ("precision", "recall", "F")] == ["1.0000"] * 3

    result = runner.invoke(args=["eval", "--gold", str(gold), "--pred", str(pred)])
    assert result.exit_code == 0, result.output
    assert report_value(result.output, "F") == "0.0000"

    cws = tmp_path / "gold.txt"
    cws.write_text("浦东 开发\n与 法制 建设\n", encoding="utf-8")
    result = runner.invoke(args=["eval", "--gold", str(cws), "--pred", str(cws)])
    assert result.exit_code == 0, result.output
    assert report_value(result.output, "F") == "1.0000"


def test_eval_misaligned_files(runner, tmp_path):
    gold = tmp_path / "gold.txt"
    gold.write_text("浦东 开发\n", encoding="utf-8")
    pred = tmp_path / "pred.txt"
    pred.write_text("浦东 开\n", encoding="utf-8")
    result = runner.invoke(args=["eval", "--gold", str(gold), "--pred", str(pred), "--task", "wordseg"])
    assert result.exit_code == 3
    assert "error: ValidationError:" in result.output


def test_emit_segmented(runner, trained, toy_files):
    raw = toy_files / "raw.txt"
    raw.write_text("w0 w1 w2\n\nw3 w4\n", encoding="utf-8")
    out = toy_files / "segmented.txt"
    result = runner.invoke(args=["emit-segmented", "--model", str(trained / "model.npz"),
                                 "--raw", str(raw), "--out", str(out), "--separator", "+"])
    assert result.exit_code == 0, result.output
    lines = out.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 3
    assert lines[1] == ""
    assert lines[0].replace("+", " ").split() == ["w0", "w1", "w2"]


def test_oov(runner, tmp_path):
    train = tmp_path / "train.conll"
    train.write_text(conll_text(lexicon_corpus(5, seed=1)), encoding="utf-8")
    result = runner.invoke(args=["oov", "--train", str(train), "--dev", str(train)])
    assert result.exit_code == 0, result.output
    assert report_value(result.output, "oov_rate") == "0.0000"


def test_report(runner, trained, toy_files):
    pytest.importorskip("reportlab")
    pytest.importorskip("PIL")
    out = toy_files / "report.pdf"
    result = runner.invoke(args=["report", "--log", str(trained / "train.log"), "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert out.read_bytes().startswith(b"%PDF")
    assert not (toy_files / "report_curve.png").exists()


def test_report_rejects_foreign_files(runner, toy_files):
    log = toy_files / "other.log"
    log.write_text("some\tother\theader\n", encoding="utf-8")
    result = runner.invoke(args=["report", "--log", str(log), "--out", str(toy_files / "r.pdf")])
    assert result.exit_code in (2, 3)


def test_entry_point_lists_every_command():
    from main import cli

    result = CliRunner().invoke(cli, ["--help"])
    assert result.exit_code == 0
    for name in ("train", "predict", "eval", "emit-segmented", "oov", "report"):
        assert name in result.output
