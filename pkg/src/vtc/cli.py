"""Config-driven experiment runner.

Usage::

    vtc run-vtc configs/m3_exact.ini --out results/
    vtc layer-scan configs/m8_layer_scan.ini
    vtc trotter-baseline configs/baseline_m3.ini
    vtc resources configs/resources_m5.ini
    vtc dump-circuit configs/m3_exact.ini --circuit contour

Configs are INI files with ``#`` comments.  Unknown sections or keys are
rejected.  The environment variable ``VTC_SEED`` overrides ``[run] seed``.
Exit codes: 0 success, 2 invalid configuration, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import os
import platform
import sys
from dataclasses import dataclass, fields, is_dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from .circuits import (
    AnsatzParams,
    build_ansatz_circuit,
    build_double_contour_circuit,
    build_swap_test_circuit,
    build_trotter_circuit,
    count_two_qubit_gates,
    decompose,
    dump_circuit,
    swap_test_block,
    trotter_params,
)
from .mitigation import MitigationConfig
from .model import Boundary, SpinChainModel, Variant
from .noise import NoiseModel
from .optimize import OptimizerConfig, OptimizerKind
from .statevector import GateKind
from .vtc import (
    CostMode,
    LayerRequirementRow,
    OverlapCircuit,
    VtcAborted,
    VtcConfig,
    VtcRecord,
    direct_trotter_fidelity,
    layer_requirement,
    run_vtc,
)

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3

VTC_COLUMNS = [
    "step", "time_J", "converged_cost", "fidelity_exact", "best_compression_fidelity",
    "trotter_baseline_fidelity", "evaluations", "converged", "wall_seconds",
]
LAYER_SCAN_COLUMNS = ["M", "t_J", "epsilon", "ell_min", "achieved_infidelity"]
BASELINE_COLUMNS = ["t_J", "fidelity"]


class ConfigError(ValueError):
    pass


# -- config schema ------------------------------------------------------------------

def _bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _int_tuple(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.split(",") if part.strip())


def _optional_int(text: str) -> int | None:
    return None if text.strip().lower() in ("", "none") else int(text)


def _grid(text: str) -> tuple[float, ...]:
    """``start:stop:step`` (stop inclusive) or a comma-separated list."""
    text = text.strip()
    if ":" in text:
        start, stop, step = (float(p) for p in text.split(":"))
        if step <= 0 or stop < start:
            raise ValueError(f"bad grid {text!r}")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return tuple(float(round(start + k * step, 12)) for k in range(count))
    return tuple(float(p) for p in text.split(",") if p.strip())


SCHEMA: dict[str, dict[str, Callable[[str], Any]]] = {
    "run": {"seed": int, "out": str, "record_wall_time": _bool},
    "model": {"num_sites": int, "coupling": float, "boundary": Boundary, "variant": Variant},
    "vtc": {
        "num_layers": int, "trotter_steps": int, "tau": float, "t_final": float,
        "tolerance": float, "cost_mode": CostMode, "shots": int,
        "overlap_circuit": OverlapCircuit, "depth_budget": _optional_int,
        "baseline_steps": _optional_int, "mitigate_every_evaluation": _bool,
        "reevaluation_factor": int,
    },
    "optimizer": {
        "kind": OptimizerKind, "max_evaluations": int, "population": int,
        "initial_step": float, "fd_step": float,
    },
    "noise": {
        "p1": float, "p2": float, "readout_01": float, "readout_10": float, "trajectories": int,
    },
    "mitigation": {
        "zne_scales": _int_tuple, "twirl": _bool, "postselect_sz": _bool,
        "readout_calibration": _bool, "calib_shots": int,
    },
    "layer_scan": {"times": _grid, "epsilon": float, "ell_max": int, "restarts": int},
    "baseline": {"num_steps": int, "times": _grid},
    "resources": {"num_layers": int, "trotter_steps": int, "tau": float},
}


@dataclass
class ExperimentConfig:
    """Typed view of a parsed config file; ``sections`` holds only keys given in the file."""

    sections: dict[str, dict[str, Any]]
    seed: int
    source: str

    def section(self, name: str) -> dict[str, Any]:
        return self.sections.get(name, {})

    def require(self, name: str, *keys: str) -> dict[str, Any]:
        sec = self.section(name)
        missing = [k for k in keys if k not in sec]
        if missing:
            raise ConfigError(f"[{name}] is missing required key(s): {', '.join(missing)}")
        return sec

    def echo(self) -> dict[str, Any]:
        """JSON-ready copy of the parsed values plus the effective seed."""
        def plain(v):
            if isinstance(v, tuple):
                return [plain(x) for x in v]
            return v.value if hasattr(v, "value") else v
        out = {name: {k: plain(v) for k, v in sorted(sec.items())} for name, sec in sorted(self.sections.items())}
        out.setdefault("run", {})["seed"] = self.seed
        return out


def parse_config(text: str, source: str = "<string>", env: dict[str, str] | None = None) -> ExperimentConfig:
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#",), comment_prefixes=("#",)
    )
    parser.optionxform = str  # keys are case-sensitive
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    sections: dict[str, dict[str, Any]] = {}
    for name in parser.sections():
        if name not in SCHEMA:
            raise ConfigError(f"unknown section [{name}]")
        keys = SCHEMA[name]
        sections[name] = {}
        for key, raw in parser.items(name):
            if key not in keys:
                raise ConfigError(f"unknown key {key!r} in [{name}]")
            try:
                sections[name][key] = keys[key](raw)
            except ValueError as exc:
                raise ConfigError(f"[{name}] {key} = {raw!r}: {exc}") from exc
    env = os.environ if env is None else env
    seed = sections.get("run", {}).get("seed", 0)
    if env.get("VTC_SEED", "").strip():
        try:
            seed = int(env["VTC_SEED"])
        except ValueError as exc:
            raise ConfigError(f"VTC_SEED must be an integer, got {env['VTC_SEED']!r}") from exc
    return ExperimentConfig(sections, seed, source)


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, str(path))


# -- building library objects ----------------------------------------------------------

def _build(cls, values: dict[str, Any], what: str):
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {what}: {exc}") from exc


def build_model(cfg: ExperimentConfig) -> SpinChainModel:
    return _build(SpinChainModel, cfg.require("model", "num_sites"), "[model]")


def build_optimizer(cfg: ExperimentConfig, **overrides) -> OptimizerConfig:
    values = {**cfg.section("optimizer"), "seed": cfg.seed, **overrides}
    return _build(OptimizerConfig, values, "[optimizer]")


def build_vtc_config(cfg: ExperimentConfig) -> VtcConfig:
    vtc = cfg.require("vtc", "num_layers", "trotter_steps", "tau", "t_final")
    return _build(
        VtcConfig,
        {
            **vtc,
            "model": build_model(cfg),
            "noise": _build(NoiseModel, cfg.section("noise"), "[noise]"),
            "mitigation": _build(MitigationConfig, cfg.section("mitigation"), "[mitigation]"),
            "optimizer": build_optimizer(cfg),
        },
        "[vtc]",
    )


# -- writers ------------------------------------------------------------------------

def _num(value: float) -> str:
    return repr(float(value))


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def vtc_record_row(r: VtcRecord) -> list[str]:
    return [
        str(r.step), _num(r.time), _num(r.converged_cost), _num(r.fidelity_exact),
        _num(r.best_compression_fidelity), _num(r.trotter_baseline_fidelity),
        str(r.evaluations), "1" if r.converged else "0", _num(r.wall_seconds),
    ]


def write_vtc_records(path: Path, records: Sequence[VtcRecord]) -> None:
    _write_csv(path, VTC_COLUMNS, [vtc_record_row(r) for r in records])


def write_layer_scan(path: Path, rows: Sequence[LayerRequirementRow]) -> None:
    _write_csv(path, LAYER_SCAN_COLUMNS, [
        [str(r.M), _num(r.t), _num(r.epsilon), "NA" if r.ell_min is None else str(r.ell_min),
         _num(r.achieved_infidelity)]
        for r in rows
    ])


def write_baseline(path: Path, series: Sequence[tuple[float, float]]) -> None:
    _write_csv(path, BASELINE_COLUMNS, [[_num(t), _num(f)] for t, f in series])


def _jsonable(value: Any) -> Any:
    if is_dataclass(value):
        return {f.name: _jsonable(getattr(value, f.name)) for f in fields(value)}
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    return value


def _versions() -> dict[str, str]:
    from . import __version__

    return {"vtc": __version__, "numpy": np.__version__, "python": platform.python_version()}


def _metadata(cfg: ExperimentConfig, command: str) -> dict[str, Any]:
    return {"command": command, "config": cfg.echo(), "seed": cfg.seed, "versions": _versions()}


def _progress(kind: str, **fields) -> None:
    parts = [kind] + [f"{k}={v}" for k, v in fields.items()]
    print(" ".join(parts), file=sys.stderr, flush=True)


# -- commands -------------------------------------------------------------------------

def cmd_run_vtc(cfg: ExperimentConfig, out: Path, jobs: int = 1, dump_dir: Path | None = None) -> int:
    config = build_vtc_config(cfg)
    record_wall = bool(cfg.section("run").get("record_wall_time", False))

    def report(r: VtcRecord) -> None:
        _progress(
            "vtc_step", step=r.step, time_J=_num(r.time), cost=f"{r.converged_cost:.6f}",
            fidelity=f"{r.fidelity_exact:.6f}", evaluations=r.evaluations, converged=int(r.converged),
        )

    hook = None
    if dump_dir is not None:
        dump_dir.mkdir(parents=True, exist_ok=True)

        def hook(step: int, prev: AnsatzParams, new: AnsatzParams) -> None:
            circuit = build_double_contour_circuit(prev, config.model, config.tau, config.trotter_steps, new)
            (dump_dir / f"contour_step{step:03d}.txt").write_text(dump_circuit(circuit), encoding="utf-8")

    records = run_vtc(config, progress=report, step_hook=hook, jobs=jobs, record_wall_time=record_wall)
    write_vtc_records(out / "vtc_records.csv", records)
    summary = _metadata(cfg, "run-vtc")
    summary.update(
        resolved=_jsonable(config),
        num_steps=len(records),
        converged_steps=sum(r.converged for r in records),
        final_time_J=records[-1].time if records else None,
        final_fidelity=records[-1].fidelity_exact if records else None,
        mean_converged_cost=float(np.mean([r.converged_cost for r in records])) if records else None,
        final_params=[float(x) for x in records[-1].params] if records else None,
    )
    _write_json(out / "summary.json", summary)
    return EXIT_OK


def cmd_layer_scan(cfg: ExperimentConfig, out: Path, jobs: int = 1) -> int:
    model = build_model(cfg)
    scan = cfg.require("layer_scan", "times", "epsilon", "ell_max")
    if scan["ell_max"] < 1:
        raise ConfigError("[layer_scan] ell_max must be >= 1")
    if scan["epsilon"] <= 0:
        raise ConfigError("[layer_scan] epsilon must be > 0")
    overrides = {"tolerance": scan["epsilon"]}
    if "kind" not in cfg.section("optimizer"):
        overrides["kind"] = OptimizerKind.QUASI_NEWTON
    if "max_evaluations" not in cfg.section("optimizer"):
        overrides["max_evaluations"] = 4000
    optimizer = build_optimizer(cfg, **overrides)

    def report(r: LayerRequirementRow) -> None:
        _progress("layer_scan", M=r.M, t_J=_num(r.t), ell_min="NA" if r.ell_min is None else r.ell_min,
                  infidelity=f"{r.achieved_infidelity:.3e}")

    meta = _metadata(cfg, "layer-scan")
    meta["resolved"] = {"model": _jsonable(model), "optimizer": _jsonable(optimizer),
                        "restarts": scan.get("restarts", 3)}
    rows = layer_requirement(
        model, scan["times"], scan["epsilon"], scan["ell_max"], optimizer,
        restarts=scan.get("restarts", 3), seed=cfg.seed, progress=report,
    )
    write_layer_scan(out / "layer_scan.csv", rows)
    _write_json(out / "layer_scan.json", meta)
    return EXIT_OK


def _baseline_settings(cfg: ExperimentConfig) -> tuple[int, tuple[float, ...]]:
    base, vtc = cfg.section("baseline"), cfg.section("vtc")
    steps = base.get("num_steps")
    if steps is None and {"num_layers", "trotter_steps"} <= vtc.keys():
        steps = vtc.get("baseline_steps") or 2 * vtc["num_layers"] + vtc["trotter_steps"]
    if steps is None:
        raise ConfigError("[baseline] num_steps is required without a [vtc] section")
    times = base.get("times")
    if times is None:
        if not {"tau", "t_final"} <= vtc.keys():
            raise ConfigError("[baseline] times is required without [vtc] tau and t_final")
        dt = vtc["tau"] / 10
        times = _grid(f"0:{vtc['t_final']!r}:{dt!r}")
    if steps < 1:
        raise ConfigError("[baseline] num_steps must be >= 1")
    return steps, times


def cmd_trotter_baseline(cfg: ExperimentConfig, out: Path, jobs: int = 1) -> int:
    model = build_model(cfg)
    steps, times = _baseline_settings(cfg)
    series = direct_trotter_fidelity(model, steps, times)
    write_baseline(out / "baseline.csv", series)
    _progress("baseline", steps=steps, points=len(series))
    meta = _metadata(cfg, "trotter-baseline")
    meta["resolved"] = {"model": _jsonable(model), "num_steps": steps, "times": list(times)}
    _write_json(out / "baseline.json", meta)
    return EXIT_OK


def _resource_settings(cfg: ExperimentConfig) -> tuple[int, int, float]:
    res, vtc = cfg.section("resources"), cfg.section("vtc")
    ell = res.get("num_layers", vtc.get("num_layers"))
    n = res.get("trotter_steps", vtc.get("trotter_steps"))
    tau = res.get("tau", vtc.get("tau", 1.0))
    if ell is None or n is None:
        raise ConfigError("[resources] needs num_layers and trotter_steps (or a [vtc] section)")
    if ell < 0 or n < 0:
        raise ConfigError("[resources] num_layers and trotter_steps must be >= 0")
    return ell, n, tau


def resource_report(model: SpinChainModel, num_layers: int, trotter_steps: int, tau: float) -> dict[str, Any]:
    zeros = AnsatzParams.zeros(model, num_layers)
    contour = build_double_contour_circuit(zeros, model, tau, trotter_steps, zeros)
    phi = build_ansatz_circuit(zeros)
    if trotter_steps > 0:
        phi = phi + build_trotter_circuit(model, tau, trotter_steps)
    swap = build_swap_test_circuit(phi, build_ansatz_circuit(zeros))
    gates = {
        kind.value: sum(op.kind is kind for op in contour.ops) for kind in (GateKind.HEIS, GateKind.ZZ)
    }

    def counts(circuit):
        rc = count_two_qubit_gates(circuit)
        return {"two_qubit_gates": rc.two_qubit_gates, "single_qubit_gates": rc.single_qubit_gates,
                "depth": rc.depth, "qubits": circuit.num_qubits}

    return {
        "double_contour": {**counts(contour), "native_gates": gates},
        "swap_test": {
            **counts(swap),
            "swap_block_two_qubit_gates": count_two_qubit_gates(swap_test_block(model.num_sites)).two_qubit_gates,
        },
        "num_layers": num_layers,
        "trotter_steps": trotter_steps,
    }


def cmd_resources(cfg: ExperimentConfig, out: Path, jobs: int = 1) -> int:
    model = build_model(cfg)
    ell, n, tau = _resource_settings(cfg)
    payload = _metadata(cfg, "resources")
    payload["resolved"] = {"model": _jsonable(model), "tau": tau}
    payload.update(resource_report(model, ell, n, tau))
    _write_json(out / "resources.json", payload)
    _progress("resources", contour_cnots=payload["double_contour"]["two_qubit_gates"],
              swap_test_cnots=payload["swap_test"]["two_qubit_gates"])
    return EXIT_OK


CIRCUIT_KINDS = ("ansatz", "trotter", "contour", "swap_test")


def build_named_circuit(cfg: ExperimentConfig, kind: str):
    """Representative circuit of the configured size; ansatz angles are set to Trotter angles."""
    model = build_model(cfg)
    vtc = cfg.require("vtc", "num_layers", "trotter_steps", "tau")
    ell, n, tau = vtc["num_layers"], vtc["trotter_steps"], vtc["tau"]
    params = trotter_params(model, tau, ell) if ell > 0 else AnsatzParams.zeros(model, 0)
    if kind == "ansatz":
        return build_ansatz_circuit(params)
    if kind == "trotter":
        return build_trotter_circuit(model, tau, n)
    if kind == "contour":
        return build_double_contour_circuit(params, model, tau, n, params)
    if kind == "swap_test":
        phi = build_ansatz_circuit(params) + build_trotter_circuit(model, tau, n)
        return build_swap_test_circuit(phi, build_ansatz_circuit(params))
    raise ConfigError(f"unknown circuit kind {kind!r}")


def cmd_dump_circuit(cfg: ExperimentConfig, out: Path | None, kind: str, lowered: bool) -> int:
    circuit = build_named_circuit(cfg, kind)
    if lowered:
        circuit = decompose(circuit)
    text = dump_circuit(circuit)
    if out is None:
        sys.stdout.write(text)
    else:
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{kind}.txt").write_text(text, encoding="utf-8")
    return EXIT_OK


# -- entry point --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vtc", description="Variational Trotter compression experiments.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log library warnings")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="INI experiment config")
        p.add_argument("--out", help="output directory (default: [run] out, else .)")
        p.add_argument("--jobs", type=int, default=1, help="concurrent objective evaluations")
        return p

    run = add("run-vtc", "propagate-and-compress trajectory")
    run.add_argument("--dump-circuit", metavar="DIR", help="write each step's contour circuit to DIR")
    add("layer-scan", "minimal layer count versus time")
    add("trotter-baseline", "fixed-step Trotter fidelity curve")
    add("resources", "gate counts of the overlap circuits")
    dump = add("dump-circuit", "print a circuit in the text format")
    dump.add_argument("--circuit", choices=CIRCUIT_KINDS, default="contour")
    dump.add_argument("--lowered", action="store_true", help="lower to CNOT and single-qubit gates")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        out_text = args.out or cfg.section("run").get("out")
        if args.command == "dump-circuit":
            return cmd_dump_circuit(cfg, Path(out_text) if args.out else None, args.circuit, args.lowered)
        out = Path(out_text or ".")
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "run-vtc":
            dump_dir = Path(args.dump_circuit) if args.dump_circuit else None
            return cmd_run_vtc(cfg, out, args.jobs, dump_dir)
        handler = {
            "layer-scan": cmd_layer_scan,
            "trotter-baseline": cmd_trotter_baseline,
            "resources": cmd_resources,
        }[args.command]
        return handler(cfg, out, args.jobs)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (VtcAborted, OSError, ArithmeticError, RuntimeError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
