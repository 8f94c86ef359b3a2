"""Config schema strictness, override grammar, and the CLI surface."""

import json
import sys

import pytest

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from nfslicer.cli import (
    EXIT_CONFIG,
    EXIT_OK,
    EXIT_SATURATED,
    main,
    parse_rate,
    parse_time,
)
from nfslicer.sim.config import (
    ConfigError,
    SimConfig,
    apply_overrides,
    dump_toml,
    from_dict,
    load_config,
)

QUICK = [
    "--set", "sim.duration_s=0.004",
    "--set", "streams.measuring.rate_pps=25e3",
]


def test_dump_then_load_round_trips():
    cfg = SimConfig()
    cfg.load.mix = [(64, 1.0), (1518, 3.5)]
    cfg.slicing.mode = "partial"
    cfg.slicing.bytes = 160
    cfg.nf.pipeline = ["firewall", "nat"]
    cfg.validate()
    text = dump_toml(cfg)
    again = from_dict(tomllib.loads(text))
    assert again.to_dict() == cfg.to_dict()
    assert dump_toml(again) == text


def test_dump_is_deterministic():
    assert dump_toml(SimConfig()) == dump_toml(SimConfig())


def test_unknown_names_are_rejected():
    with pytest.raises(ConfigError, match=r"unknown section \[pcie\]"):
        from_dict({"pcie": {}})
    with pytest.raises(ConfigError, match="unknown key sim.cycles"):
        from_dict({"sim": {"cycles": 3}})
    with pytest.raises(ConfigError, match=r"unknown stream \[streams.video\]"):
        from_dict({"streams": {"video": {}}})
    with pytest.raises(ConfigError, match="unknown key slicing.treshold"):
        from_dict({"slicing": {"treshold": 500}})


def test_value_types_are_strict():
    # TOML booleans are not integers.
    with pytest.raises(ConfigError, match="sim.seed must be int"):
        from_dict({"sim": {"seed": True}})
    with pytest.raises(ConfigError, match="slicing.mode must be str"):
        from_dict({"slicing": {"mode": 1}})
    with pytest.raises(ConfigError, match="must be an int"):
        from_dict({"nf": {"service_ns": {"l2fwd": 40.5}}})
    with pytest.raises(ConfigError, match="mix rows"):
        from_dict({"streams": {"load": {"mix": [[64]]}}})
    # Integer literals promote to float where a float is expected.
    cfg = from_dict({"streams": {"load": {"rate_pps": 4000000}}})
    assert cfg.load.rate_pps == 4e6
    assert isinstance(cfg.load.rate_pps, float)


@pytest.mark.parametrize("table,fragment", [
    ({"sim": {"duration_s": 0.0}}, "duration_s"),
    ({"sim": {"seed": -1}}, "seed"),
    ({"sim": {"cores": 0}}, "cores"),
    ({"sim": {"cores": 257}}, "cores"),
    ({"streams": {"load": {"rate_pps": -1.0}}}, "rate_pps"),
    ({"streams": {"load": {"size": 32}}}, "frame size"),
    ({"streams": {"load": {"size": 2000}}}, "frame size"),
    ({"streams": {"load": {"flows": 0}}}, "flows"),
    ({"streams": {"load": {"mix": [[64, -1.0]]}}}, "weights"),
    ({"streams": {"measuring": {"size": 4000}}}, "measuring.size"),
    ({"nf": {"pipeline": []}}, "at least one"),
    ({"nf": {"pipeline": ["tcpdump"]}}, "unknown nf"),
    ({"nf": {"service_ns": {"l2fwd": 0}}}, "must be positive"),
    ({"slicing": {"mode": "half"}}, "slicing.mode"),
    ({"slicing": {"fraction": 1.5}}, "fraction"),
    ({"slicing": {"bytes": -1}}, "bytes"),
    ({"slicing": {"threshold": 32}}, "threshold"),
    ({"slicing": {"n_entries": 100}}, "power of two"),
    ({"slicing": {"n_entries": 1}}, "power of two"),
    ({"slicing": {"ttl_init": 0}}, "ttl_init"),
    ({"links": {"pcie_gbps": 0.0}}, "pcie_gbps"),
    ({"links": {"wire_base_ns": -2}}, "wire_base_ns"),
    ({"links": {"pcie_batch_max": 0}}, "pcie_batch_max"),
])
def test_validation_rejects(table, fragment):
    with pytest.raises(ConfigError, match=fragment):
        from_dict(table)


def test_overrides_parse_as_toml():
    cfg = apply_overrides(SimConfig(), [
        "streams.load.rate_pps=7e6",
        "slicing.mode=full",               # bare string
        "links.ddio=false",
        "streams.load.mix=[[64, 1.0], [1518, 1.0]]",
        "nf.service_ns.l2fwd=55",
    ])
    assert cfg.load.rate_pps == 7e6
    assert cfg.slicing.mode == "full"
    assert cfg.links.ddio is False
    assert cfg.load.mix == [(64, 1.0), (1518, 1.0)]
    assert cfg.nf.service_ns["l2fwd"] == 55


def test_override_grammar_errors():
    with pytest.raises(ConfigError, match="section.key=value"):
        apply_overrides(SimConfig(), ["simduration"])
    with pytest.raises(ConfigError, match="unknown config table"):
        apply_overrides(SimConfig(), ["nope.x=1"])
    with pytest.raises(ConfigError, match="unknown config key"):
        apply_overrides(SimConfig(), ["sim.quantum=1"])
    with pytest.raises(ConfigError, match="mix override must be a list"):
        apply_overrides(SimConfig(), ["streams.load.mix=64"])
    with pytest.raises(ConfigError, match="bad override path"):
        apply_overrides(SimConfig(), ["sim..x=1"])
    # The override value must still pass validation.
    with pytest.raises(ConfigError, match="power of two"):
        apply_overrides(SimConfig(), ["slicing.n_entries=100"])


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(str(tmp_path / "missing.toml"))
    bad = tmp_path / "bad.toml"
    bad.write_text("sim = [unclosed\n")
    with pytest.raises(ConfigError, match="bad.toml"):
        load_config(str(bad))


def test_parse_rate_and_time_units():
    assert parse_rate("100G") == 100e9
    assert parse_rate("2.5m") == 2.5e6
    assert parse_rate("640k") == 640e3
    assert parse_rate("1T") == 1e12
    assert parse_rate("42") == 42.0
    assert parse_time("10us") == pytest.approx(1e-5)
    assert parse_time("250ns") == pytest.approx(2.5e-7)
    assert parse_time("1ms") == pytest.approx(1e-3)
    assert parse_time("2s") == 2.0
    assert parse_time("0.5") == 0.5


def test_cli_simulate_writes_artifacts(tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["simulate", *QUICK, "--backend", "python",
                 "--out", str(out)])
    assert code == EXIT_OK
    stdout = capsys.readouterr().out
    assert "measuring: n=" in stdout
    assert "pcie:" in stdout
    report = json.loads((out / "report.json").read_text())
    assert report["injected"]["total"] > 0
    assert report["config"]["sim"]["duration_s"] == 0.004
    csv_text = (out / "report.csv").read_text()
    assert csv_text.splitlines()[0].startswith("run_id,axis,axis_value,mean_ns")


def test_cli_simulate_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", *QUICK, "--out", str(a)]) == EXIT_OK
    assert main(["simulate", *QUICK, "--out", str(b)]) == EXIT_OK
    assert (a / "report.csv").read_bytes() == (b / "report.csv").read_bytes()
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()


def test_cli_seed_precedence(tmp_path, monkeypatch, capsys):
    def csv_for(argv, env=None):
        out = tmp_path / str(len(list(tmp_path.iterdir())))
        if env is None:
            monkeypatch.delenv("NFSLICER_SEED", raising=False)
        else:
            monkeypatch.setenv("NFSLICER_SEED", env)
        assert main(["simulate", *QUICK, "--out", str(out), *argv]) == EXIT_OK
        capsys.readouterr()
        return (out / "report.csv").read_text()

    base = csv_for([])                      # config seed 1
    env7 = csv_for([], env="7")
    env7_again = csv_for([], env="7")
    arg1 = csv_for(["--seed", "1"], env="7")   # flag beats env
    assert env7 == env7_again
    assert env7 != base
    assert arg1 == base

    monkeypatch.setenv("NFSLICER_SEED", "pi")
    assert main(["simulate", *QUICK, "--out", str(tmp_path / "z")]) == \
        EXIT_CONFIG


def test_cli_config_errors_exit_2(tmp_path, capsys):
    assert main(["simulate", "--set", "sim.nope=1",
                 "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "error:" in capsys.readouterr().err
    assert main(["simulate", "--config", str(tmp_path / "nope.toml"),
                 "--out", str(tmp_path)]) == EXIT_CONFIG
    assert main(["simulate", "--set", "slicing.mode=sideways",
                 "--out", str(tmp_path)]) == EXIT_CONFIG
    with pytest.raises(SystemExit):   # argparse rejects the choice itself
        main(["simulate", *QUICK, "--backend", "bogus", "--out", str(tmp_path)])
    capsys.readouterr()


def test_cli_saturated_run_exits_3(tmp_path, capsys):
    code = main(["simulate", *QUICK,
                 "--set", "streams.load.rate_pps=9e6",
                 "--out", str(tmp_path)])
    assert code == EXIT_SATURATED
    captured = capsys.readouterr()
    assert "saturated: yes" in captured.out
    assert "saturation detected" in captured.err


def test_cli_sweep(tmp_path, capsys):
    out = tmp_path / "sweep"
    code = main(["sweep", *QUICK, "--axis", "sliced_fraction",
                 "--values", "0,0.5,1.0", "--out", str(out)])
    assert code == EXIT_OK
    stdout = capsys.readouterr().out
    lines = (out / "sweep.csv").read_text().splitlines()
    assert len(lines) == 4
    assert stdout.startswith(lines[0])
    assert lines[1].split(",")[1:3] == ["sliced_fraction", "0.0"]

    assert main(["sweep", *QUICK, "--axis", "packet_size",
                 "--values", "x,y", "--out", str(out)]) == EXIT_CONFIG
    assert main(["sweep", *QUICK, "--axis", "packet_size",
                 "--values", " , ", "--out", str(out)]) == EXIT_CONFIG
    capsys.readouterr()


def test_cli_sweep_flags_saturated_points(tmp_path, capsys):
    code = main(["sweep", *QUICK, "--axis", "rate_pps",
                 "--values", "1e6,9e6", "--out", str(tmp_path)])
    assert code == EXIT_SATURATED
    assert "rate_pps = 9000000.0" in capsys.readouterr().err


def test_cli_size_defaults(capsys):
    assert main(["size"]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["entries"] == 250
    assert out["sram_bytes"] == 363500
    assert abs(out["sram_kib"] - 355.0) <= 1.0
    assert out["min_interarrival_ns"] == 40.0
    assert out["interface_gbps"] == 100.0
    assert "data_reduction" not in out


def test_cli_size_reduction_and_fits(capsys):
    assert main(["size", "--full-size", "1518"]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["data_reduction"] == pytest.approx(23.71875)

    assert main(["size", "--switch-points", "4:0.26,8:0.38"]) == EXIT_OK
    fit = json.loads(capsys.readouterr().out)["switch_fit"]
    assert fit["model"] == "with-intercept"
    assert fit["slope"] == pytest.approx(0.03)
    assert fit["intercept"] == pytest.approx(0.14)
    assert fit["max_servers"] == 28

    assert main(["size", "--switch-points", "4:0.26,8:0.38",
                 "--fit", "zero-intercept"]) == EXIT_OK
    fit = json.loads(capsys.readouterr().out)["switch_fit"]
    assert fit["slope"] == pytest.approx(0.0475)
    assert fit["max_servers"] == 21

    assert main(["size", "--switch-points", "4:0.26,8:0.38",
                 "--nic-scale", "2.5"]) == EXIT_OK
    fit = json.loads(capsys.readouterr().out)["switch_fit"]
    assert fit["max_servers"] == 8

    assert main(["size", "--switch-points", "garbage"]) == EXIT_CONFIG
    assert main(["size", "--line-rate", "fast"]) == EXIT_CONFIG
    capsys.readouterr()


def test_cli_analyze(tmp_path, capsys):
    hist = tmp_path / "sizes.csv"
    hist.write_text("64,3\n1518,1\n")
    assert main(["analyze", "--hist", str(hist)]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["threshold_bytes"] == 500
    assert out["packet_fraction"] == pytest.approx(0.25)
    assert out["byte_fraction"] == pytest.approx(1518 / (3 * 64 + 1518))

    assert main(["analyze", "--hist", str(tmp_path / "missing.csv")]) == \
        EXIT_CONFIG
    capsys.readouterr()


def test_cli_config_dump_round_trips(tmp_path, capsys):
    assert main(["config", "dump", "--set", "slicing.mode=full"]) == EXIT_OK
    text = capsys.readouterr().out
    cfg = from_dict(tomllib.loads(text))
    assert cfg.slicing.mode == "full"
    want = apply_overrides(SimConfig(), ["slicing.mode=full"])
    assert cfg.to_dict() == want.to_dict()

    # A dumped file is directly usable as --config.
    path = tmp_path / "dumped.toml"
    path.write_text(text)
    assert main(["config", "dump", "--config", str(path)]) == EXIT_OK
    assert capsys.readouterr().out == text
