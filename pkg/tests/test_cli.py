import argparse

import pytest

from cv2x_dcc.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, _seeds, main
from cv2x_dcc.schemas.run_config import dump_config


@pytest.fixture
def config_file(small, tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text(dump_config(small()), encoding="utf-8")
    return path


@pytest.mark.parametrize(
    "value, seeds",
    [("1-3", [1, 2, 3]), ("2,5", [2, 5]), ("7", [7])],
)
def test_seed_lists(value, seeds):
    assert _seeds(value) == seeds


def test_bad_seed_list():
    with pytest.raises(argparse.ArgumentTypeError):
        _seeds("a-b")


def test_list_presets(capsys):
    assert main(["--list-presets"]) == EXIT_OK
    assert "fig3" in capsys.readouterr().out


def test_bad_config_exits_with_config_error(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("scenario:\n  bogus: 1\n", encoding="utf-8")

    assert main(["--config", str(path), "--out", str(tmp_path / "out")]) == EXIT_CONFIG


def test_run_writes_outputs(config_file, tmp_path):
    out = tmp_path / "out"

    code = main(["--config", str(config_file), "--out", str(out), "--seeds", "5"])

    assert code == EXIT_OK
    assert (out / "summary.csv").is_file()
    assert (out / "nodcc" / "seed_5" / "pdr.csv").is_file()


def test_trace_flags(config_file, tmp_path):
    out = tmp_path / "out"

    code = main(
        [
            "--config",
            str(config_file),
            "--out",
            str(out),
            "--trace-grants",
            "--trace-channel",
        ]
    )

    assert code == EXIT_OK
    assert (out / "nodcc" / "seed_3" / "grant_trace.csv").is_file()
    assert (out / "nodcc" / "seed_3" / "controller.csv").is_file()


def test_unwritable_output_is_a_runtime_error(config_file, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("", encoding="utf-8")

    code = main(["--config", str(config_file), "--out", str(blocker / "out")])

    assert code == EXIT_RUNTIME


def test_unknown_preset_exits_with_config_error(config_file, tmp_path):
    code = main(
        ["--config", str(config_file), "--preset", "nope", "--out", str(tmp_path)]
    )

    assert code == EXIT_CONFIG
