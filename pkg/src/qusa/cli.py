"""Command-line experiment runner.

    qusa <command> --config <path> [--seed N] [--out DIR] [--set section.key=value ...]

Commands: solve, anneal, simulate, ensemble, sweep, run (dispatch on
``run.kind``).  Configs are INI files (or a ``manifest.json`` written by a
previous run).  Every run writes ``manifest.json`` with the fully resolved
configuration; feeding it back reproduces the outputs byte for byte.

Exit codes: 0 success / satisfiable, 1 unsatisfiable (solve), 2 usage or
parse error, 3 cap refusal.
"""
from __future__ import annotations

import argparse
import configparser
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, dynamics, hamiltonian, network
from .classical import AnnealParams, AnnealSchedule, classical_anneal
from .network import CapExceeded, Model, NetworkError

log = logging.getLogger("qusa")

EXIT_OK, EXIT_UNSAT, EXIT_USAGE, EXIT_CAP = 0, 1, 2, 3

RUN_KINDS = (
    "solve",
    "anneal-classical",
    "simulate-comparison",
    "simulate-projected",
    "simulate-symmetrized",
    "ensemble",
    "zeno-sweep",
    "leak-sweep",
)

# section -> key -> (type, default)
SCHEMA: dict[str, dict[str, tuple[str, object]]] = {
    "run": {
        "kind": ("str", "simulate-projected"),
        "network": ("path", ""),
        "exact_cover": ("str", ""),
        "model": ("str", "EQU"),
        "seed": ("int", 0),
        "n": ("int", 200),
        "ensemble_kind": ("str", "projected"),
        "out": ("str", "qusa-out"),
        "cap": ("int", dynamics.DEFAULT_CAP),
        "snapshots": ("floats", ""),
        "dump_fields": ("bool", False),
    },
    "hamiltonian": {
        "g": ("float", 2.0),
        "g_prime": ("float", 0.0),
        "trap_free": ("bool", False),
        "gamma": ("float", 0.0),
    },
    "noise": {
        "b0": ("float", 0.035),
        "tau_c": ("float", 8.0),
        "schedule": ("str", "exponential"),
        "decay_time": ("float", 400.0),
        "floor": ("float", 0.05),
        "polarization": ("str", "ISOTROPIC"),
        "paired": ("bool", False),
    },
    "schedule": {
        "dt": ("float", 0.25),
        "projection_interval": ("float", 2.0),
        "total_time": ("float", 60.0),
        "renormalize": ("bool", True),
        "stepper": ("str", "EXPM"),
        "record_interval": ("float?", None),
    },
    "anneal": {
        "steps": ("int", 1000),
        "t0": ("float", 1.0),
        "t1": ("float", 0.01),
        "profile": ("str", "exponential"),
    },
    "sweep": {
        "intervals": ("floats", "0.5,1,2,4"),
        "divisions": ("floats", "8,16,32,64,128"),
        "norm_time": ("float", 5.0),
        "field_scale": ("float", 0.2),
        "field_seed": ("int", 5),
        "n": ("int", 20),
    },
}


class UsageError(Exception):
    pass


def _convert(kind: str, raw, where: str):
    if raw is None:
        return None
    if kind == "float?":
        if isinstance(raw, str) and raw.strip().lower() in ("", "none"):
            return None
        return _convert("float", raw, where)
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            if isinstance(raw, bool):
                return raw
            v = str(raw).strip().lower()
            if v in ("1", "true", "yes", "on"):
                return True
            if v in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind == "floats":
            if isinstance(raw, (list, tuple)):
                return [float(x) for x in raw]
            return [float(x) for x in str(raw).replace(" ", "").split(",") if x]
        return str(raw)
    except (TypeError, ValueError):
        raise UsageError(f"{where}: cannot read {raw!r} as {kind}") from None


@dataclass
class RunConfig:
    values: dict[str, dict[str, object]]
    base_dir: Path = field(default_factory=Path.cwd)

    def __getitem__(self, key: str):
        section, name = key.split(".")
        return self.values[section][name]

    def set(self, key: str, raw) -> None:
        if "." not in key:
            raise UsageError(f"override {key!r} must look like section.key")
        section, name = key.split(".", 1)
        if section not in SCHEMA or name not in SCHEMA[section]:
            raise UsageError(f"unknown config key {key!r}")
        self.values[section][name] = _convert(SCHEMA[section][name][0], raw, key)

    def resolved(self) -> dict:
        return json.loads(json.dumps(self.values))

    # builders -------------------------------------------------------------

    def network(self) -> network.TriodeNetwork:
        path, inline = self["run.network"], self["run.exact_cover"]
        if path and inline:
            raise UsageError("give either run.network or run.exact_cover, not both")
        if inline:
            text = "\n".join(part.strip() for part in inline.split(";"))
            return network.encode_exact_cover(network.parse_exact_cover(text))[0]
        if not path:
            return network.toy_network()
        p = Path(path)
        if not p.is_absolute():
            p = self.base_dir / p
        return network.load_network(p.read_text(encoding="utf-8"))

    def hamiltonian(self) -> hamiltonian.HamiltonianParams:
        h = self.values["hamiltonian"]
        return hamiltonian.HamiltonianParams(h["g"], h["g_prime"], h["trap_free"], h["gamma"])

    def noise(self) -> hamiltonian.NoiseParams:
        n = self.values["noise"]
        return hamiltonian.NoiseParams(
            b0=n["b0"],
            tau_c=n["tau_c"],
            schedule=n["schedule"],
            decay_time=n["decay_time"],
            floor=n["floor"],
            polarization=hamiltonian.Polarization(n["polarization"].upper()),
            paired=n["paired"],
        )

    def schedule(self) -> dynamics.ScheduleParams:
        s = self.values["schedule"]
        return dynamics.ScheduleParams(
            dt=s["dt"],
            projection_interval=s["projection_interval"],
            total_time=s["total_time"],
            renormalize=s["renormalize"],
            stepper=dynamics.Stepper(s["stepper"].upper()),
            record_interval=s["record_interval"],
        )


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise UsageError(f"config file {path} does not exist")
    values = {sec: {k: _convert(t, d, f"{sec}.{k}") for k, (t, d) in keys.items()} for sec, keys in SCHEMA.items()}
    cfg = RunConfig(values, base_dir=path.parent)
    if path.suffix == ".json":
        data = json.loads(path.read_text(encoding="utf-8"))
        data = data.get("config", data)
        items = [(f"{sec}.{k}", v) for sec, kv in data.items() for k, v in kv.items()]
    else:
        parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
        parser.optionxform = str
        try:
            parser.read_string(path.read_text(encoding="utf-8"), source=str(path))
        except configparser.Error as exc:
            raise UsageError(f"{path}: {exc}") from None
        for sec in parser.sections():
            if sec not in SCHEMA:
                raise UsageError(f"{path}: unknown section [{sec}]")
        items = [(f"{sec}.{k}", v) for sec in parser.sections() for k, v in parser[sec].items()]
    for key, raw in items:
        cfg.set(key, raw)
    if cfg["run.kind"] not in RUN_KINDS:
        raise UsageError(f"run.kind must be one of {', '.join(RUN_KINDS)}")
    net = cfg["run.network"]
    if net:
        p = Path(net) if Path(net).is_absolute() else cfg.base_dir / net
        if not p.exists():
            raise UsageError(f"network file {p} does not exist")
    return cfg


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    log.info("wrote %s", path)


def _manifest(cfg: RunConfig, out: Path, command: str, extra: dict | None = None) -> None:
    doc = {"command": command, "config": cfg.resolved()}
    net = cfg["run.network"]
    if net:
        p = Path(net) if Path(net).is_absolute() else cfg.base_dir / net
        doc["config"]["run"]["network"] = str(p.resolve())
    if extra:
        doc.update(extra)
    _write(out / "manifest.json", json.dumps(doc, indent=2, sort_keys=True) + "\n")


# --- commands ---------------------------------------------------------------

def cmd_solve(cfg: RunConfig, out: Path) -> int:
    net = cfg.network()
    model = Model.parse(cfg["run.model"])
    sols = network.enumerate_solutions(net, model)
    _write(out / "solutions.txt", "".join(f"{s}\n" for s in sols))
    _write(out / "solutions.json", json.dumps({"model": model.value, "count": len(sols)}, indent=2) + "\n")
    _manifest(cfg, out, "solve")
    print(f"count {len(sols)}")
    return EXIT_OK if sols else EXIT_UNSAT


def cmd_anneal(cfg: RunConfig, out: Path) -> int:
    net = cfg.network()
    h = cfg.values["hamiltonian"]
    a = cfg.values["anneal"]
    traj = classical_anneal(
        net,
        Model.parse(cfg["run.model"]),
        AnnealParams(h["g"], h["g_prime"], h["trap_free"]),
        AnnealSchedule(a["steps"], a["t0"], a["t1"], a["profile"]),
        cfg["run.seed"],
    )
    lines = ["step,energy"] + [f"{i},{float(e)!r}" for i, e in enumerate(traj.energies)]
    _write(out / "anneal.csv", "\n".join(lines) + "\n")
    summary = {"first_hit": traj.first_hit, "final": str(traj.final), "accepted": traj.accepted}
    _write(out / "anneal.json", json.dumps(summary, indent=2) + "\n")
    _manifest(cfg, out, "anneal")
    return EXIT_OK


_SIM_KINDS = {
    "simulate-comparison": dynamics.RunKind.COMPARISON,
    "simulate-projected": dynamics.RunKind.PROJECTED,
    "simulate-symmetrized": dynamics.RunKind.SYMMETRIZED,
}


def cmd_simulate(cfg: RunConfig, out: Path) -> int:
    from .statespace import format_state

    kind = _SIM_KINDS.get(cfg["run.kind"], dynamics.RunKind.PROJECTED)
    net = cfg.network()
    traj = dynamics.run_trajectory(
        kind,
        net,
        cfg.hamiltonian(),
        cfg.noise(),
        cfg.schedule(),
        cfg["run.seed"],
        cap=cfg["run.cap"],
        snapshot_times=cfg["run.snapshots"],
    )
    _write(out / "trajectory.csv", traj.to_csv())
    if traj.events:
        led = analysis.amplification_ledger(traj)
        _write(out / "ledger.json", json.dumps(led.__dict__, indent=2) + "\n")
    if cfg["run.dump_fields"]:
        path = dynamics.field_path(net.triode_count, cfg.noise(), cfg.schedule(), cfg["run.seed"])
        _write(out / "fields.csv", dynamics.fields_csv(path))
    for t, state in sorted(traj.snapshots.items()):
        _write(out / f"state_t{t:g}.txt", format_state(state))
    _manifest(cfg, out, "simulate", {"run_kind": kind.value})
    return EXIT_OK


def cmd_ensemble(cfg: RunConfig, out: Path) -> int:
    kind = dynamics.RunKind(cfg["run.ensemble_kind"])
    ens = dynamics.run_ensemble(
        kind,
        cfg["run.n"],
        cfg["run.seed"],
        cfg.network(),
        cfg.hamiltonian(),
        cfg.noise(),
        cfg.schedule(),
        cap=cfg["run.cap"],
    )
    _write(out / "ensemble.csv", ens.to_csv())
    extra = {"seeds": ens.seeds}
    if kind is dynamics.RunKind.PROJECTED:
        try:
            fit = analysis.estimate_takeoff(ens)
            _write(out / "takeoff.json", json.dumps(fit.to_dict(), indent=2) + "\n")
        except ValueError as exc:
            log.warning("take-off fit skipped: %s", exc)
    _manifest(cfg, out, "ensemble", extra)
    return EXIT_OK


def frozen_generator(cfg: RunConfig, net: network.TriodeNetwork) -> hamiltonian.OperatorHandle:
    """Hermitian comparison generator from one seeded field draw."""
    sw = cfg.values["sweep"]
    rng = np.random.default_rng(sw["field_seed"])
    sample = hamiltonian.FieldSample(sw["field_scale"] * rng.standard_normal((net.triode_count, 2, 3)))
    hp = cfg.hamiltonian()
    hp_h = hamiltonian.HamiltonianParams(hp.g, hp.g_prime, hp.trap_free, 0.0)
    return hamiltonian.effective_generator(
        hamiltonian.wire_hamiltonian(net, hp_h), hamiltonian.comparison_coupling(sample, hp.g), hp_h
    )


def cmd_sweep(cfg: RunConfig, out: Path) -> int:
    from .statespace import initial_state

    net = cfg.network()
    sw = cfg.values["sweep"]
    kind = cfg["run.kind"]
    if kind == "zeno-sweep":
        divs = sw["divisions"]
        if len(divs) < 3:
            raise UsageError("zeno-sweep needs at least 3 divisions")
        gen = frozen_generator(cfg, net)
        gnorm = np.linalg.norm(hamiltonian.dense(gen), 2)
        total = sw["norm_time"] / gnorm
        study = dynamics.zeno_convergence_study(
            gen, [total / d for d in divs], total, initial_state(net, seed=cfg["run.seed"])
        )
        fit = analysis.convergence_order(study)
        lines = ["dt,error"] + [f"{a!r},{b!r}" for a, b in study]
        _write(out / "zeno_points.csv", "\n".join(lines) + "\n")
        report = {"sweep": "zeno", "total_time": total, "generator_norm": gnorm, **fit.to_dict()}
    else:
        intervals = sw["intervals"]
        if len(intervals) < 3:
            raise UsageError("leak-sweep needs at least 3 intervals")
        fit = analysis.leak_scaling(
            net, cfg.hamiltonian(), cfg.noise(), cfg.schedule(), intervals, n=sw["n"], base_seed=cfg["run.seed"]
        )
        for ens, iv in zip(fit.extra["ensembles"], fit.x):
            _write(out / f"leak_dt_{iv:g}.csv", ens.to_csv())
        report = {"sweep": "leak", **fit.to_dict()}
    _write(out / "sweep.json", json.dumps(report, indent=2) + "\n")
    _manifest(cfg, out, "sweep")
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "anneal": cmd_anneal,
    "simulate": cmd_simulate,
    "ensemble": cmd_ensemble,
    "sweep": cmd_sweep,
}

_KIND_TO_COMMAND = {
    "solve": "solve",
    "anneal-classical": "anneal",
    "simulate-comparison": "simulate",
    "simulate-projected": "simulate",
    "simulate-symmetrized": "simulate",
    "ensemble": "ensemble",
    "zeno-sweep": "sweep",
    "leak-sweep": "sweep",
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qusa", description="state-vector annealing of triode/EQU Boolean networks")
    p.add_argument("command", choices=sorted(COMMANDS) + ["run"])
    p.add_argument("--config", required=True, help="INI config or manifest.json")
    p.add_argument("--seed", type=int, help="override run.seed")
    p.add_argument("--out", help="output directory (overrides run.out)")
    p.add_argument("--kind", help="override run.kind")
    p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE")
    p.add_argument("-q", "--quiet", action="store_true")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        for item in args.set:
            key, _, val = item.partition("=")
            cfg.set(key.strip(), val.strip())
        if args.seed is not None:
            cfg.set("run.seed", args.seed)
        if args.kind:
            cfg.set("run.kind", args.kind)
        if args.out:
            cfg.set("run.out", args.out)
        command = args.command
        if command == "run":
            command = _KIND_TO_COMMAND[cfg["run.kind"]]
        elif command == "simulate" and cfg["run.kind"] not in _SIM_KINDS:
            cfg.set("run.kind", "simulate-projected")
        elif command == "sweep" and cfg["run.kind"] not in ("zeno-sweep", "leak-sweep"):
            raise UsageError("sweep needs run.kind = zeno-sweep or leak-sweep")
        elif command in ("solve", "anneal", "ensemble"):
            cfg.set("run.kind", {"solve": "solve", "anneal": "anneal-classical", "ensemble": "ensemble"}[command])
        out = Path(cfg["run.out"])
        log.info("command %s kind %s seed %s", command, cfg["run.kind"], cfg["run.seed"])
        return COMMANDS[command](cfg, out)
    except CapExceeded as exc:
        log.error("%s", exc)
        return EXIT_CAP
    except (UsageError, NetworkError, ValueError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
