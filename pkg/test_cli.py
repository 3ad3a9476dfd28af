"""
Experiment runner, CSV reports and the revlab command line
"""

import logging

import pytest

from app.core.config import settings
from app.core.errors import BudgetTooLarge, ConfigError
from app.core.logging import setup_logging
from app.main import build_parser, main
from app.services.experiment import (
    build_config,
    emit_report,
    load_config_file,
    plan_trials,
    run_experiment,
)
from app.services.oracle import load_rom, rom_result_bit
from app.services.pebble import bennett_schedule, parse_moves


def config(command, action, **values):
    return build_config({"command": command, "action": action, **values})


@pytest.mark.asyncio
async def test_pebble_bennett_row():
    rows = await run_experiment(config("pebble", "bennett", k=2, n=3))
    assert len(rows) == 1
    metrics = rows[0].metrics
    assert metrics["total_moves"] == 27
    assert metrics["max_pebbles"] == 4
    assert metrics["first_reach_time"] == 27


@pytest.mark.asyncio
async def test_pebble_search_row():
    rows = await run_experiment(config("pebble", "search", t=8))
    assert rows[0].metrics["min_pebbles"] == 4


@pytest.mark.asyncio
async def test_sim_bennett_row():
    rows = await run_experiment(config("sim", "bennett", k=3, n=2, seg_len=1, seed=7))
    assert rows[0].metrics["peak_checkpoints"] == 5
    assert rows[0].verdict == "MATCH"
    assert rows[0].seed == 7


@pytest.mark.asyncio
async def test_sim_audit_rows_in_seed_order():
    rows = await run_experiment(config("sim", "audit", k=2, n=2, seg_len=2, repetitions=6))
    assert [row.seed for row in rows] == [42, 43, 44, 45, 46, 47]
    assert [row.trial for row in rows] == list(range(6))
    assert all(row.verdict == "PASS" for row in rows)


@pytest.mark.asyncio
async def test_oracle_experiments():
    build = await run_experiment(config("oracle", "build", width=6, t=10, repetitions=2))
    assert all(row.verdict == "PASS" for row in build)
    separator = await run_experiment(config("oracle", "separator", width=6, t=10, repetitions=5))
    for row in separator:
        assert row.metrics["accepted"] == row.metrics["ground_truth"]
        assert row.metrics["agrees_with_rom"]


@pytest.mark.asyncio
async def test_analyze_experiments():
    pebbles = await run_experiment(config("analyze", "pebbles", k=2, n=2, width=6))
    assert pebbles[0].verdict == "PASS"
    decompress = await run_experiment(config("analyze", "decompress", k=2, n=2, width=6, samples=3))
    assert len(decompress) == 6
    assert all(row.verdict == "PASS" for row in decompress)


@pytest.mark.asyncio
async def test_compress_component_rows():
    rows = await run_experiment(
        config("analyze", "compress", k=2, n=2, width=6, tau="6,20", report_sizes=True)
    )
    assert [row.metrics["component"] for row in rows[:5]] == [
        "snapshot",
        "direction",
        "x_prime",
        "triples",
        "extras",
    ]
    assert len(rows) == 10


@pytest.mark.asyncio
async def test_incompressible_row():
    rows = await run_experiment(config("analyze", "incompressible", system="duplicate", width=3, length=6))
    assert rows[0].metrics["string"] == "000001"


@pytest.mark.asyncio
async def test_euler_experiments():
    rows = await run_experiment(config("euler", "run", depth=4))
    assert rows[0].verdict == "FOUND"
    assert rows[0].metrics["forward_steps"] == 26
    audit = await run_experiment(config("euler", "audit", width=6, repetitions=3))
    assert all(row.verdict == "PASS" for row in audit)


@pytest.mark.asyncio
async def test_report_sweep_rows():
    rows = await run_experiment(config("report", "sweep"))
    assert len(rows) == 15
    for row in rows:
        k, n = row.params["k"], row.params["n"]
        assert row.metrics["moves"] == (2 * k - 1) ** n
        assert row.verdict == "PASS"


@pytest.mark.asyncio
async def test_report_space_rows():
    rows = await run_experiment(config("report", "space", width=4))
    assert [row.params["t"] for row in rows] == [2, 4, 8, 16]
    assert all(row.verdict == "PASS" for row in rows)


@pytest.mark.asyncio
async def test_module_errors_pass_through():
    with pytest.raises(BudgetTooLarge):
        await run_experiment(config("pebble", "search", t=40))


@pytest.mark.asyncio
async def test_save_pebble_files(tmp_path):
    schedule_file = tmp_path / "bennett.moves"
    await run_experiment(config("pebble", "bennett", k=2, n=2, save=str(schedule_file)))
    assert tuple(parse_moves(schedule_file.read_text(encoding="utf-8"))) == bennett_schedule(2, 2).moves

    witness_file = tmp_path / "witness.moves"
    rows = await run_experiment(config("pebble", "search", t=6, save=str(witness_file)))
    witness = parse_moves(witness_file.read_text(encoding="utf-8"))
    assert len(witness) == rows[0].metrics["witness_moves"]


@pytest.mark.asyncio
async def test_save_rom_file(tmp_path):
    rom_file = tmp_path / "chain.rom"
    rows = await run_experiment(config("oracle", "rom", width=6, t=10, save=str(rom_file)))
    rom = load_rom(rom_file.read_text(encoding="utf-8"))
    assert rom_result_bit(rom, 10) == rows[0].metrics["result_bit"]


@pytest.mark.asyncio
async def test_description_file_round_trip(tmp_path):
    desc_file = tmp_path / "run.desc"
    await run_experiment(
        config("analyze", "compress", k=2, n=2, width=6, tau="20", direction="forward", save=str(desc_file))
    )
    back = await run_experiment(config("analyze", "decompress", k=2, n=2, width=6, description=str(desc_file)))
    assert len(back) == 1
    assert back[0].params["tau"] == 20
    assert back[0].params["direction"] == "forward"
    assert back[0].verdict == "PASS"

    other_seed = await run_experiment(
        config("analyze", "decompress", k=2, n=2, width=6, seed=43, description=str(desc_file))
    )
    assert other_seed[0].verdict == "FAIL"


@pytest.mark.asyncio
async def test_save_one_description_per_instant(tmp_path):
    prefix = tmp_path / "d"
    await run_experiment(config("analyze", "compress", k=2, n=2, width=6, tau="6,20", save=str(prefix)))
    names = sorted(p.name for p in tmp_path.glob("d.*"))
    assert len(names) == 2
    assert names[0].startswith("d.20.")
    assert names[1].startswith("d.6.")


@pytest.mark.asyncio
async def test_euler_family_rows():
    rows = await run_experiment(config("euler", "family", depths="2,3,4"))
    assert [row.params["depth"] for row in rows] == [2, 3, 4]
    assert [row.metrics["forward_steps"] for row in rows] == [4, 11, 26]
    assert [row.metrics["peak_storage_bits"] for row in rows] == [7, 10, 12]
    assert all(row.verdict == "PASS" for row in rows)


def test_seed_defaults_to_settings(monkeypatch):
    monkeypatch.setattr(settings, "DEFAULT_SEED", 5)
    assert config("sim", "bennett").seed == 5
    assert config("sim", "bennett", seed=9).seed == 9


def test_bare_report_name_lands_in_reports_dir(tmp_path, monkeypatch):
    monkeypatch.setattr(settings, "REPORTS_DIR", str(tmp_path / "reports"))
    emit_report([], "csv", "empty.csv")
    assert (tmp_path / "reports" / "empty.csv").read_text(encoding="utf-8") == "experiment,trial,seed,verdict\n"


def test_empty_report_is_header_only():
    assert emit_report([]) == "experiment,trial,seed,verdict\n"


def test_report_unknown_format():
    with pytest.raises(ConfigError):
        emit_report([], fmt="json")


@pytest.mark.asyncio
async def test_reports_are_deterministic(tmp_path):
    first = tmp_path / "first.csv"
    second = tmp_path / "second.csv"
    for path in (first, second):
        rows = await run_experiment(config("sim", "bennett", k=2, n=2, repetitions=3, seed=5))
        emit_report(rows, "csv", str(path))
    assert first.read_bytes() == second.read_bytes()
    assert b"\r\n" not in first.read_bytes()
    assert first.read_text(encoding="utf-8").splitlines()[0].startswith("experiment,trial,seed,k,n")


def test_config_error_names_field():
    with pytest.raises(ConfigError) as excinfo:
        config("pebble", "bennett", k=1)
    assert excinfo.value.field == "k"
    with pytest.raises(ConfigError) as excinfo:
        config("sim", "bennett", machine="quantum")
    assert excinfo.value.field == "machine"


def test_config_rejects_unknown_action():
    with pytest.raises(ConfigError):
        config("pebble", "jump")


def test_list_fields_accept_commas():
    cfg = config("report", "sweep", k_values="2, 3", n_values="1")
    assert cfg.k_values == [2, 3]
    assert cfg.n_values == [1]
    assert len(plan_trials(cfg)) == 2


def test_config_file(tmp_path):
    path = tmp_path / "exp.conf"
    path.write_text("# Bennett figure\nk = 3\nseg-len=2\n\n", encoding="utf-8")
    assert load_config_file(str(path)) == {"k": "3", "seg_len": "2"}

    path.write_text("k 3\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config_file(str(path))


def test_parser_knows_every_experiment():
    args = build_parser().parse_args(["analyze", "compress", "--tau", "3,5", "--report-sizes"])
    assert args.command == "analyze"
    assert args.action == "compress"
    assert args.report_sizes is True


def test_main_success(capsys):
    assert main(["pebble", "bennett", "--k", "2", "--n", "3"]) == 0
    out = capsys.readouterr().out
    lines = out.splitlines()
    assert lines[0] == "experiment,trial,seed,k,n,total_moves,max_pebbles,first_reach_move,first_reach_time,verdict"
    assert lines[1] == "pebble-bennett,0,,2,3,27,4,14,27,"


def test_main_not_found_exit_code(capsys):
    code = main(["euler", "run", "--width", "4", "--halt-fraction", "0"])
    assert code == 1
    assert "NOT_FOUND" in capsys.readouterr().out


def test_main_error_exit_code(capsys):
    assert main(["pebble", "search", "--t", "40"]) == 2
    assert "error" in capsys.readouterr().err


def test_main_config_file_and_output(tmp_path):
    conf = tmp_path / "sweep.conf"
    conf.write_text("k-values=2\nn-values=0,1,2\n", encoding="utf-8")
    out = tmp_path / "sweep.csv"
    assert main(["report", "sweep", "--config", str(conf), "--output", str(out)]) == 0
    assert len(out.read_text(encoding="utf-8").splitlines()) == 4


def test_main_flags_override_config_file(tmp_path):
    conf = tmp_path / "bennett.conf"
    conf.write_text("k=3\nn=2\n", encoding="utf-8")
    out = tmp_path / "bennett.csv"
    assert main(["pebble", "bennett", "--config", str(conf), "--k", "2", "--output", str(out)]) == 0
    assert out.read_text(encoding="utf-8").splitlines()[1].startswith("pebble-bennett,0,,2,2,9,")


def test_setup_logging_twice_keeps_one_handler_per_logger(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    setup_logging(to_file=True)
    setup_logging(to_file=True)
    try:
        for name in ("app.services.revsim", "app.services.analysis"):
            own = [h for h in logging.getLogger(name).handlers if getattr(h, "_revlab", False)]
            assert len(own) == 1
        root_own = [h for h in logging.getLogger().handlers if getattr(h, "_revlab", False)]
        assert len(root_own) == 2
    finally:
        setup_logging(to_file=False)
    assert not [
        h for h in logging.getLogger("app.services.revsim").handlers if getattr(h, "_revlab", False)
    ]
