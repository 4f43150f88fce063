import pandas as pd
import pytest

from cv2x_dcc.dal.run_outputs import RunOutputDAL, slugify
from cv2x_dcc.exceptions import ConfigurationError
from cv2x_dcc.schemas.run_config import parse_config
from cv2x_dcc.services.metrics import summarize
from cv2x_dcc.services.run_service import RunService

pytestmark = pytest.mark.slow

SEED_TABLES = {"pdr", "cbr", "ipg", "awareness", "grants", "counters"}
NUMERIC = [
    "mean_cbr",
    "pdr_0_100",
    "pdr_100_500",
    "pdr_200_500",
    "mean_ipg",
    "awareness_mean",
    "awareness_std",
    "gamma",
    "gamma_mt",
    "gamma_nf",
    "gamma_tsim",
]


def _files(root):
    return {
        p.relative_to(root).as_posix(): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


@pytest.fixture
def ran(small, tmp_path):
    config = small(seeds=[3, 4])
    dal = RunOutputDAL(tmp_path)
    summary = RunService(dal).run_many([config])
    return config, dal, summary


def test_slugify():
    assert slugify("DCC Reactive (GB)") == "dcc_reactive_gb"
    assert slugify("RRI CR Limit (3GPP)") == "rri_cr_limit_3gpp"
    assert slugify("***") == "run"


def test_outputs_are_laid_out_per_mechanism(ran, tmp_path):
    config, dal, summary = ran
    mechanism = tmp_path / "nodcc"

    assert (tmp_path / "summary.csv").is_file()
    assert (mechanism / "config.yaml").is_file()
    assert (mechanism / "summary.csv").is_file()
    for seed in (3, 4):
        names = {p.stem for p in (mechanism / f"seed_{seed}").glob("*.csv")}
        assert names == SEED_TABLES

    assert summary["mechanism"].tolist() == ["NoDcc"]
    assert summary.loc[0, "seeds"] == 2


def test_config_echo_reparses_to_same_config(ran, tmp_path):
    config, _, _ = ran

    echoed = parse_config((tmp_path / "nodcc" / "config.yaml").read_text())

    assert echoed == config


def test_summary_is_recomputable_from_seed_tables(ran, tmp_path):
    _, dal, _ = ran
    per_seed = pd.read_csv(tmp_path / "nodcc" / "summary.csv")

    for seed in (3, 4):
        grants = dal.read_table("NoDcc", seed, "grants")
        causes = grants["cause"].value_counts()
        gamma = {
            "gamma": len(grants),
            "gamma_mt": int(causes.get("MT", 0)),
            "gamma_nf": int(causes.get("NF", 0)),
            "gamma_tsim": int(causes.get("TSim", 0)),
        }
        expected = summarize(
            "NoDcc",
            seed,
            dal.read_table("NoDcc", seed, "cbr"),
            dal.read_table("NoDcc", seed, "pdr"),
            dal.read_table("NoDcc", seed, "ipg"),
            dal.read_table("NoDcc", seed, "awareness"),
            gamma,
        )
        row = per_seed[per_seed["seed"] == seed].iloc[0]
        for column in NUMERIC:
            assert row[column] == pytest.approx(expected[column], nan_ok=True)


def test_aggregate_is_the_mean_of_seed_rows(ran, tmp_path):
    per_seed = pd.read_csv(tmp_path / "nodcc" / "summary.csv")
    aggregated = pd.read_csv(tmp_path / "summary.csv").iloc[0]

    for column in NUMERIC:
        assert aggregated[column] == pytest.approx(
            per_seed[column].mean(), nan_ok=True
        )


def test_reruns_are_byte_identical(small, tmp_path):
    config = small()

    RunService(RunOutputDAL(tmp_path / "a")).run_many([config])
    RunService(RunOutputDAL(tmp_path / "b")).run_many([config])

    first = _files(tmp_path / "a")
    assert first
    assert first == _files(tmp_path / "b")


def test_trace_tables_are_opt_in(small, tmp_path):
    config = small(trace_grants=True, trace_channel=True)
    dal = RunOutputDAL(tmp_path)

    RunService(dal).run_many([config])

    trace = dal.read_table("NoDcc", 3, "grant_trace")
    assert {"create", "transmit"} <= set(trace["event"])
    assert (trace.loc[trace["event"] == "create", "tx_id"] == -1).all()
    assert (trace.loc[trace["event"] == "transmit", "tx_id"] >= 0).all()
    controller = dal.read_table("NoDcc", 3, "controller")
    assert {"time_ms", "vehicle", "cbr", "cr", "controller_rri", "grant_rri"} <= set(
        controller.columns
    )


def test_duplicate_labels_are_rejected(small, tmp_path):
    service = RunService(RunOutputDAL(tmp_path))

    with pytest.raises(ConfigurationError) as excinfo:
        service.run_many([small(), small()])
    assert excinfo.value.field == "mechanism"


def test_unknown_preset(tmp_path):
    service = RunService(RunOutputDAL(tmp_path))

    with pytest.raises(ConfigurationError) as excinfo:
        service.run_preset("fig9")
    assert excinfo.value.field == "preset"


@pytest.mark.parametrize("name, vehicles", [("fig3", 100), ("cbr60", 276)])
def test_desk_preset_vehicle_count(tmp_path, monkeypatch, name, vehicles):
    service = RunService(RunOutputDAL(tmp_path))
    seen = []
    monkeypatch.setattr(service, "run_many", lambda configs: seen.extend(configs))

    service.run_preset(name, desk=True)

    assert {c.scenario.vehicle_count for c in seen} == {vehicles}
    assert all(c.scenario.sim_duration == 20_000 for c in seen)
