"""
Experiment runner

Turns an ExperimentConfig into independent seeded trials, runs them on
worker threads and merges their report rows in config order.
"""

import asyncio
import csv
import io
import logging
import math
import os
from functools import partial
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import ValidationError

from app.core.config import settings
from app.core.errors import ConfigError, ReconstructionFailure
from app.models.analysis import Description, Direction
from app.models.oracle import Bounds, Chain
from app.models.vm import Machine, OracleMachine
from app.schemas.experiment import ExperimentConfig, ReportRow
from app.services import analysis, eulertour, oracle, pebble, revsim

logger = logging.getLogger(__name__)

Trial = Callable[[], List[ReportRow]]

COMPONENTS = ("snapshot", "direction", "x_prime", "triples", "extras")


def load_config_file(path: str) -> Dict[str, str]:
    """
    Read a key=value experiment file (keys are long flag names)

    Raises:
        ConfigError: a line is not key=value
    """
    values: Dict[str, str] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep or not key.strip():
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
            values[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return values


def build_config(values: Dict[str, Any]) -> ExperimentConfig:
    """
    Validate raw parameters

    Raises:
        ConfigError: naming the first offending field
    """
    try:
        return ExperimentConfig(**values)
    except ValidationError as e:
        error = e.errors()[0]
        field = ".".join(str(part) for part in error["loc"]) or None
        raise ConfigError(error["msg"], field=field) from e


def _row(config: ExperimentConfig, seed: Optional[int], params: Dict[str, Any], metrics: Dict[str, Any], verdict: Optional[str] = None) -> ReportRow:
    return ReportRow(
        experiment=config.experiment_id, seed=seed, params=params, metrics=metrics, verdict=verdict
    )


def _artifact_path(config: ExperimentConfig, seed: int) -> Optional[str]:
    if config.save is None:
        return None
    if config.repetitions == 1:
        return config.save
    return f"{config.save}.{seed}"


def _write_artifact(path: Optional[str], content: Union[str, bytes]) -> None:
    if path is None:
        return
    if isinstance(content, bytes):
        with open(path, "wb") as f:
            f.write(content)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(content)
    logger.debug(f"Wrote artifact {path}")


# Pebble game


def _pebble_bennett(config: ExperimentConfig, k: int, n: int) -> List[ReportRow]:
    schedule = pebble.bennett_schedule(k, n)
    _write_artifact(config.save, pebble.dump_moves(schedule.moves))
    metrics = pebble.schedule_metrics(schedule)
    return [_row(config, None, {"k": k, "n": n}, metrics.model_dump())]


def _pebble_search(config: ExperimentConfig, t: int) -> List[ReportRow]:
    result = pebble.search_strategy(t, config.budget)
    _write_artifact(config.save, "".join(f"{move}\n" for move in result.witness))
    return [
        _row(
            config,
            None,
            {"t": t},
            {
                "min_pebbles": result.min_pebbles,
                "states_explored": result.states_explored,
                "witness_moves": len(result.witness),
            },
        )
    ]


# Reversible simulation


def _seeded_init(width: int, seed: int) -> int:
    return oracle.draw_word(np.random.default_rng(seed), width)


def _bennett_run(config: ExperimentConfig, seed: int) -> Tuple[revsim.BennettRun, Optional[Chain]]:
    k, n, width = config.k, config.n, config.width
    if config.machine == "step-rule":
        machine: Machine = revsim.random_machine(width, seed)
        run = revsim.run_bennett(
            machine, _seeded_init(width, seed), k, n, config.seg_len, seed=seed
        )
        return run, None

    _, chain = oracle.build_chain_oracle(width, k**n, seed)
    if config.machine == "rom":
        tape_oracle: Any = oracle.rom_from_chain(chain)
    else:
        tape_oracle = oracle.chain_oracle(chain)
    run = revsim.run_bennett(OracleMachine(width), 0, k, n, 1, oracle=tape_oracle, seed=seed)
    return run, chain


def _sim_params(config: ExperimentConfig) -> Dict[str, Any]:
    return {
        "k": config.k,
        "n": config.n,
        "seg_len": config.seg_len,
        "width": config.width,
        "machine": config.machine,
    }


def _sim_bennett(config: ExperimentConfig, seed: int) -> List[ReportRow]:
    run, _ = _bennett_run(config, seed)
    report = run.report
    _write_artifact(_artifact_path(config, seed), revsim.dump_trace(run.trace))
    metrics = {
        "final_checkpoint": report.final_checkpoint,
        "direct_result": report.direct_result,
        "peak_checkpoints": report.peak_checkpoints,
        "peak_history_bits": report.peak_history_bits,
        "total_microops": report.total_microops,
    }
    verdict = "MATCH" if report.matches_direct else "MISMATCH"
    return [_row(config, seed, _sim_params(config), metrics, verdict)]


def _sim_audit(config: ExperimentConfig, seed: int) -> List[ReportRow]:
    run, _ = _bennett_run(config, seed)
    audit = revsim.audit_run(run)
    metrics = {
        "events": audit.events,
        "forward_ok": audit.forward_ok,
        "backward_ok": audit.backward_ok,
    }
    return [_row(config, seed, _sim_params(config), metrics, "PASS" if audit.ok else "FAIL")]


# Oracles


def _bounds(config: ExperimentConfig) -> Bounds:
    return Bounds(config.width, config.time_bound or config.t * config.width)


def _oracle_params(bounds: Bounds) -> Dict[str, Any]:
    return {"S": bounds.S, "T": bounds.T, "t": bounds.t}


def _oracle_build(config: ExperimentConfig, seed: int) -> List[ReportRow]:
    bounds = _bounds(config)
    graph, chain = oracle.build_chain_for_bounds(bounds, seed)
    rng = np.random.default_rng(seed)
    tapes = oracle.chain_tapes(chain) + oracle.random_tapes(
        rng, settings.ORACLE_SAMPLE_TAPES, 0, 2 * bounds.S + 1
    )
    failures = oracle.self_reversibility_failures(graph.query, tapes)
    _write_artifact(_artifact_path(config, seed), oracle.dump_chain(chain))
    metrics = {
        "tapes_checked": len(tapes),
        "failures": failures,
        "x_bits": len(chain.x),
        "last_node_first_bit": chain.bits(chain.t)[0] if chain.t else "0",
    }
    return [_row(config, seed, _oracle_params(bounds), metrics, "PASS" if failures == 0 else "FAIL")]


def _oracle_separator(config: ExperimentConfig, seed: int) -> List[ReportRow]:
    bounds = _bounds(config)
    graph, chain = oracle.build_chain_for_bounds(bounds, seed)
    result = oracle.separator_decide(graph, bounds)
    truth = chain.bits(chain.t).startswith("1") if chain.t else False
    metrics: Dict[str, Any] = {
        "accepted": result.accepted,
        "oracle_calls": result.oracle_calls,
        "ground_truth": truth,
    }
    if bounds.S <= revsim.TABLE_MAX_WIDTH:
        rom_bit = oracle.rom_result_bit(oracle.rom_from_chain(chain), bounds.t)
        metrics["rom_bit"] = rom_bit
        metrics["agrees_with_rom"] = rom_bit == int(result.accepted)
    return [_row(config, seed, _oracle_params(bounds), metrics, "ACCEPT" if result.accepted else "REJECT")]


def _oracle_rom(config: ExperimentConfig, seed: int) -> List[ReportRow]:
    bounds = _bounds(config)
    _, chain = oracle.build_chain_for_bounds(bounds, seed)
    rom = oracle.rom_from_chain(chain)
    _write_artifact(_artifact_path(config, seed), oracle.dump_rom(rom))
    bit = oracle.rom_result_bit(rom, bounds.t)
    size_ok = oracle.rom_get_size(rom, oracle.rom_get_size(rom, "")) == ""
    metrics = {"word_width": rom.word_width, "words": len(rom.words), "result_bit": bit, "get_size_ok": size_ok}
    return [_row(config, seed, _oracle_params(bounds), metrics, "ACCEPT" if bit else "REJECT")]


# Trace analysis


def _oracle_run(config: ExperimentConfig, seed: int) -> Tuple[revsim.BennettRun, Chain]:
    oracle_config = config if config.machine != "step-rule" else config.model_copy(update={"machine": "oracle"})
    run, chain = _bennett_run(oracle_config, seed)
    if chain is None:
        raise ConfigError("trace analysis needs an oracle run", field="machine")
    return run, chain


def _sample_taus(config: ExperimentConfig, run_length: int, seed: int) -> List[int]:
    if config.tau:
        return sorted(config.tau)
    rng = np.random.default_rng(seed)
    count = min(config.samples, run_length + 1)
    return sorted(int(v) for v in rng.choice(run_length + 1, size=count, replace=False))


def _directions(config: ExperimentConfig) -> List[Optional[Direction]]:
    if config.direction is None:
        return [None]
    return [Direction(config.direction)]


def _analyze_pebbles(config: ExperimentConfig, seed: int) -> List[ReportRow]:
    run, chain = _oracle_run(config, seed)
    events = analysis.query_events(run.trace)
    moves = analysis.trace_to_moves(events, chain)
    schedule = pebble.bennett_schedule(config.k, config.n)
    max_pebbled = pebble.schedule_metrics(schedule).max_pebbles
    matches = tuple(moves) == schedule.moves
    metrics = {"queries": len(events), "moves": len(moves), "max_pebbled": max_pebbled, "matches_schedule": matches}
    return [_row(config, seed, _sim_params(config), metrics, "PASS" if matches else "FAIL")]


def _analyze_compress(config: ExperimentConfig, seed: int) -> List[ReportRow]:
    run, chain = _oracle_run(config, seed)
    events = analysis.query_events(run.trace)
    rows: List[ReportRow] = []
    taus = _sample_taus(config, len(run.trace), seed)
    directions = _directions(config)
    single = len(taus) * len(directions) == 1
    for tau in taus:
        p = len(analysis.pebbled_at(events, chain, tau))
        for direction in directions:
            d = analysis.compress(run.trace, chain, tau, direction)
            _write_artifact(_description_path(config, seed, d, single), analysis.encode_description(d))
            sizes = analysis.description_sizes(d, p, len(run.program))
            params = {**_sim_params(config), "tau": tau, "direction": d.direction.value}
            if config.report_sizes:
                bits = (sizes.snapshot_bits, sizes.direction_bits, sizes.x_prime_bits, sizes.triple_bits, sizes.extra_bits)
                for component, value in zip(COMPONENTS, bits):
                    rows.append(_row(config, seed, params, {"component": component, "bits": value}))
            else:
                metrics = sizes.model_dump(exclude={"tau", "direction"})
                metrics["total_bits"] = sizes.total_bits
                rows.append(_row(config, seed, params, metrics))
    return rows


def _description_path(config: ExperimentConfig, seed: int, d: Description, single: bool) -> Optional[str]:
    base = _artifact_path(config, seed)
    if base is None or single:
        return base
    return f"{base}.{d.tau}.{d.direction.value}"


def _decompress_file(config: ExperimentConfig, seed: int, path: str) -> List[ReportRow]:
    run, chain = _oracle_run(config, seed)
    with open(path, "rb") as f:
        d = analysis.decode_description(f.read())
    try:
        ok = analysis.decompress(d, run.program) == chain.x
    except ReconstructionFailure as e:
        logger.warning(f"{path} does not expand against seed {seed}: {e}")
        ok = False
    params = {**_sim_params(config), "tau": d.tau, "direction": d.direction.value}
    return [_row(config, seed, params, {"h": d.h, "round_trip": ok}, "PASS" if ok else "FAIL")]


def _analyze_decompress(config: ExperimentConfig, seed: int) -> List[ReportRow]:
    if config.description is not None:
        return _decompress_file(config, seed, config.description)
    run, chain = _oracle_run(config, seed)
    rows: List[ReportRow] = []
    directions = _directions(config) if config.direction else [Direction.FORWARD, Direction.BACKWARD]
    for tau in _sample_taus(config, len(run.trace), seed):
        for direction in directions:
            d = analysis.compress(run.trace, chain, tau, direction)
            ok = analysis.decompress(d, run.program) == chain.x
            params = {**_sim_params(config), "tau": tau, "direction": d.direction.value}
            rows.append(_row(config, seed, params, {"h": d.h, "round_trip": ok}, "PASS" if ok else "FAIL"))
    return rows


def _description_system(config: ExperimentConfig) -> analysis.DescriptionSystem:
    if config.system == "duplicate":
        return analysis.DuplicateSplice(config.width)
    if config.system == "zero":
        return analysis.ZeroCollision(config.width)
    if config.system == "identity":
        return analysis.FunctionSystem(lambda d: d, name="identity")
    return analysis.CombinedSystem(config.width)


def _analyze_incompressible(config: ExperimentConfig) -> List[ReportRow]:
    system = _description_system(config)
    found = analysis.find_incompressible(system, config.length)
    params = {"system": system.name, "S": config.width, "length": config.length}
    return [_row(config, None, params, {"string": found})]


# Euler tour


def _euler_machine(config: ExperimentConfig, seed: int):
    if config.depth is not None:
        return eulertour.binary_tree_machine(config.depth)
    return eulertour.random_machine(config.width, seed, config.halt_fraction)


def _euler_run(config: ExperimentConfig, seed: int) -> List[ReportRow]:
    machine = _euler_machine(config, seed)
    width_cap = config.width_cap or machine.width
    result = eulertour.euler_tour(machine, width_cap, config.step_cap)
    direct = eulertour.direct_run(machine, width_cap, config.step_cap)
    _write_artifact(_artifact_path(config, seed), eulertour.dump_machine(machine))
    params = {"width": machine.width, "width_cap": width_cap, "depth": config.depth}
    metrics = {
        "final": result.final,
        "direct": direct,
        "agrees_with_direct": result.final == direct,
        "forward_steps": result.forward_steps,
        "total_steps": result.total_steps,
        "peak_storage_bits": result.peak_storage_bits,
    }
    return [_row(config, seed, params, metrics, "FOUND" if result.found else "NOT_FOUND")]


def _euler_audit(config: ExperimentConfig, seed: int) -> List[ReportRow]:
    machine = _euler_machine(config, seed)
    width_cap = config.width_cap or machine.width
    audit = eulertour.tour_audit(machine, width_cap, config.step_cap)
    params = {"width": machine.width, "width_cap": width_cap, "depth": config.depth}
    metrics = {"states": audit.states, "violations": audit.violations, "peak_storage_bits": audit.peak_storage_bits}
    return [_row(config, seed, params, metrics, "PASS" if audit.ok else "FAIL")]


def _euler_family(config: ExperimentConfig, depth: int) -> List[ReportRow]:
    machine = eulertour.binary_tree_machine(depth)
    width_cap = config.width_cap or eulertour.TREE_WIDTH
    result = eulertour.euler_tour(machine, width_cap, config.step_cap)
    expected = 2 ** (depth + 1) - depth - 2
    ok = result.found and result.final == 1 and result.forward_steps == expected
    metrics = {
        "forward_steps": result.forward_steps,
        "expected_forward_steps": expected,
        "total_steps": result.total_steps,
        "peak_storage_bits": result.peak_storage_bits,
    }
    return [_row(config, None, {"depth": depth, "width_cap": width_cap}, metrics, "PASS" if ok else "FAIL")]


# Reports


def _report_sweep(config: ExperimentConfig, k: int, n: int) -> List[ReportRow]:
    metrics = pebble.schedule_metrics(pebble.bennett_schedule(k, n))
    formula = (2 * k - 1) ** n
    bound = n * (k - 1) + 1
    ok = metrics.total_moves == formula and metrics.max_pebbles <= bound
    values = {
        "moves": metrics.total_moves,
        "formula_moves": formula,
        "max_pebbles": metrics.max_pebbles,
        "pebble_bound": bound,
        "first_reach_time": metrics.first_reach_time,
    }
    return [_row(config, None, {"k": k, "n": n}, values, "PASS" if ok else "FAIL")]


def _report_space(config: ExperimentConfig, t: int) -> List[ReportRow]:
    p = pebble.min_pebbles(t, config.budget)
    space = p * config.width
    bound = config.width * (int(math.floor(math.log2(t))) + 1)
    metrics = {"min_pebbles": p, "space_bits": space, "lower_bound_bits": bound}
    return [_row(config, None, {"t": t, "S": config.width}, metrics, "PASS" if space >= bound else "FAIL")]


def plan_trials(config: ExperimentConfig) -> List[Trial]:
    """Independent work items of an experiment, in report order"""
    seeded = {
        ("sim", "bennett"): _sim_bennett,
        ("sim", "audit"): _sim_audit,
        ("oracle", "build"): _oracle_build,
        ("oracle", "separator"): _oracle_separator,
        ("oracle", "rom"): _oracle_rom,
        ("analyze", "pebbles"): _analyze_pebbles,
        ("analyze", "compress"): _analyze_compress,
        ("analyze", "decompress"): _analyze_decompress,
        ("euler", "run"): _euler_run,
        ("euler", "audit"): _euler_audit,
    }
    key = (config.command, config.action)
    if key in seeded:
        return [partial(seeded[key], config, seed) for seed in config.seeds]
    if key == ("pebble", "bennett"):
        return [partial(_pebble_bennett, config, config.k, config.n)]
    if key == ("pebble", "search"):
        return [partial(_pebble_search, config, config.t)]
    if key == ("analyze", "incompressible"):
        return [partial(_analyze_incompressible, config)]
    if key == ("euler", "family"):
        return [partial(_euler_family, config, depth) for depth in config.depths]
    if key == ("report", "sweep"):
        return [partial(_report_sweep, config, k, n) for k in config.k_values for n in config.n_values]
    if key == ("report", "space"):
        return [partial(_report_space, config, t) for t in config.t_values]
    raise ConfigError(f"no runner for {config.experiment_id}", field="action")


async def run_experiment(config: ExperimentConfig) -> List[ReportRow]:
    """
    Run every trial of an experiment

    Trials execute on worker threads (at most settings.EXPERIMENT_WORKERS at
    a time); rows come back in config order whatever the completion order.

    Raises:
        ConfigError: invalid configuration or timeout
        RevLabError: module errors are passed through unchanged
    """
    trials = plan_trials(config)
    semaphore = asyncio.Semaphore(settings.EXPERIMENT_WORKERS)

    async def run_trial(trial: Trial) -> List[ReportRow]:
        async with semaphore:
            return await asyncio.to_thread(trial)

    logger.info(f"Running {config.experiment_id}: {len(trials)} trials")
    try:
        results = await asyncio.wait_for(
            asyncio.gather(*(run_trial(trial) for trial in trials)),
            timeout=settings.EXPERIMENT_TIMEOUT_SECONDS,
        )
    except asyncio.TimeoutError as e:
        raise ConfigError(
            f"experiment did not finish within {settings.EXPERIMENT_TIMEOUT_SECONDS}s",
            field="EXPERIMENT_TIMEOUT_SECONDS",
        ) from e

    rows = [row for result in results for row in result]
    for index, row in enumerate(rows):
        row.trial = index
    negative = sum(1 for row in rows if row.negative)
    logger.info(f"{config.experiment_id}: {len(rows)} rows, {negative} negative verdicts")
    return rows


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def report_path(path: str) -> str:
    if os.path.dirname(path):
        return path
    return os.path.join(settings.REPORTS_DIR, path)


def emit_report(rows: List[ReportRow], fmt: str = "csv", path: Optional[str] = None) -> str:
    """
    Render rows as CSV (header plus one line per row, LF endings)

    Columns appear in first-seen order across rows. The text is also written
    to `path` when given; a bare file name lands in settings.REPORTS_DIR.

    Raises:
        ConfigError: unsupported format
        OSError: the file cannot be written
    """
    if fmt != "csv":
        raise ConfigError(f"unsupported report format {fmt!r}", field="format")
    if path is not None:
        path = report_path(path)

    flat = [row.flat() for row in rows]
    columns: List[str] = ["experiment", "trial", "seed"]
    for record in flat:
        for key in record:
            if key not in columns and key != "verdict":
                columns.append(key)
    columns.append("verdict")

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for record in flat:
        writer.writerow([_cell(record.get(column)) for column in columns])
    text = buffer.getvalue()

    if path is not None:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        logger.info(f"Wrote {len(rows)} rows to {path}")
    return text
