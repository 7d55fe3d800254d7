"""Command-line entry point: ``oqnet <mode> --config run.json``.

Exit codes: 0 success, 1 failed acceptance criteria (``verify``),
2 invalid configuration, 3 numerical failure, 4 I/O failure. Failures
print a JSON object with ``error``, ``message`` and ``exit_code`` to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import io as oio
from .analysis import decompose_steady_state, ensemble_agreement, similarity
from .config import MODES, RunConfig, load_config
from .errors import DegenerateInputError, NonPhysicalStateError, UnsupportedSizeError, ValidationError
from .master import build_single_liouvillian, build_two_liouvillian, integrate, steady_state
from .network import PRESETS
from .records import EvolutionRecord
from .trajectory import run_ensemble

__all__ = ["main", "run"]

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3, 4


class _Output:
    def __init__(self, directory, formats):
        self.dir = Path(directory)
        self.formats = set(formats)
        self.files = []
        self.dir.mkdir(parents=True, exist_ok=True)

    def path(self, name):
        self.files.append(name)
        path = self.dir / name
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def record(self, record: EvolutionRecord, prefix=""):
        if "json" in self.formats:
            oio.write_record_json(self.path(prefix + "density.json"), record)
        if "csv" in self.formats:
            oio.write_populations_csv(self.path(prefix + "populations.csv"), record)
            if record.order == "two":
                oio.write_g2_csv(self.path(prefix + "g2.csv"), record)

    def json(self, name, payload):
        oio.write_json(self.path(name), payload)


def _master(cfg: RunConfig, spec=None) -> EvolutionRecord:
    spec = spec or cfg.network_spec()
    L = build_single_liouvillian(spec) if cfg.single_particle else build_two_liouvillian(spec)
    rec = integrate(L, cfg.initial_matrix(), cfg.grid(), statistics=cfg.statistics())
    rec.meta = {"route": "master", "network": spec.name}
    return rec


def _ensemble(cfg: RunConfig, threads: int) -> EvolutionRecord:
    spec = cfg.network_spec()
    est = run_ensemble(spec, cfg.initial_matrix(), cfg.grid(), cfg.ensemble_size, cfg.seed,
                       mode=cfg.noise_mode, step=cfg.step, scheme=cfg.scheme, threads=threads)
    meta = {"route": "trajectories", "network": spec.name, "seed": cfg.seed,
            "ensemble_size": cfg.ensemble_size, "noise_mode": cfg.noise_mode,
            "step": cfg.step, "scheme": cfg.scheme}
    return est.to_record(spec.num_sites, cfg.statistics(), meta)


def _sector(cfg: RunConfig) -> str:
    if cfg.single_particle:
        return "single"
    return cfg.sector or cfg.statistics() or "boson"


def _steady(cfg: RunConfig, spec=None):
    spec = spec or cfg.network_spec()
    sector = _sector(cfg)
    L = build_single_liouvillian(spec) if sector == "single" else build_two_liouvillian(spec)
    rho0 = cfg.initial_matrix() if cfg.initial_state is not None else None
    return steady_state(L, sector, rho0), spec


def _steady_payload(ss, spec):
    decomp = None if ss.sector == "single" else decompose_steady_state(ss.rho, spec.num_sites)
    return oio.steady_state_to_dict(ss, spec.num_sites, decomp)


def _sweep(cfg: RunConfig, out: _Output) -> dict:
    base = cfg.network_spec()
    z = cfg.grid()
    ref = cfg.grid_end() if cfg.reference_z is None else float(cfg.reference_z)
    z = np.union1d(z, [ref])
    grid_cfg = RunConfig(**{**cfg.to_dict(), "z_grid": z.tolist()})
    reference_ss, _ = _steady(cfg, base)
    entries = []
    for i, factor in enumerate(cfg.sweep_factors):
        spec = base.scaled(factor)
        rec = _master(grid_cfg, spec)
        ss, _ = _steady(cfg, spec)
        dist = np.linalg.norm(rec.states - ss.rho, axis=(1, 2))
        k = int(np.argmin(np.abs(z - ref)))
        entries.append({
            "factor": factor,
            "gamma": spec.gamma.tolist(),
            "distance_at_reference": float(dist[k]),
            "distances": dist.tolist(),
            "steady_state_shift": float(np.linalg.norm(ss.rho - reference_ss.rho)),
            "null_space_dimension": ss.null_dimension,
        })
        out.record(rec, prefix=f"factor_{i + 1}/")
    order = sorted(range(len(entries)), key=lambda i: entries[i]["distance_at_reference"])
    return {
        "reference_z": ref,
        "z": z.tolist(),
        "factors": entries,
        "order_by_distance": [entries[i]["factor"] for i in order],
    }


def _compare(cfg: RunConfig, threads: int) -> tuple:
    master = _master(cfg)
    ens = _ensemble(cfg, threads)
    rows = []
    for k, zk in enumerate(master.z):
        within, score = ensemble_agreement(ens.states[k], ens.stderr[k], master.states[k])
        row = {"z": float(zk),
               "max_standard_score": score,
               "within_four_standard_errors": within,
               "max_abs_difference": float(np.abs(ens.states[k] - master.states[k]).max())}
        if master.order == "two":
            row["similarity"] = similarity(np.clip(ens.g2()[k], 0, None), master.g2()[k])
        else:
            row["similarity"] = similarity(np.clip(ens.populations()[k], 0, None),
                                           master.populations()[k])
        rows.append(row)
    report = {"seed": cfg.seed, "ensemble_size": cfg.ensemble_size, "rows": rows,
              "min_similarity": min(r["similarity"] for r in rows)}
    return master, ens, report


def run(cfg: RunConfig, threads: int = 1) -> dict:
    """Execute a validated configuration and write its outputs; returns the manifest."""
    start = time.perf_counter()
    out = _Output(cfg.output_dir, cfg.formats)
    mode = cfg.mode
    if mode in ("single_master", "two_master"):
        if (mode == "single_master") != cfg.single_particle:
            raise ValidationError(f"{mode} does not match the initial_state particle number")
        out.record(_master(cfg))
    elif mode == "trajectories":
        out.record(_ensemble(cfg, threads))
    elif mode == "steady_state":
        ss, spec = _steady(cfg)
        out.json("steady_state.json", _steady_payload(ss, spec))
    elif mode == "dephasing_sweep":
        out.json("sweep_report.json", _sweep(cfg, out))
    elif mode == "compare":
        master, ens, report = _compare(cfg, threads)
        out.record(master, prefix="master_")
        out.record(ens, prefix="trajectories_")
        out.json("compare_report.json", report)
    manifest = {
        "mode": mode,
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "version": __version__,
        "files": sorted(out.files),
        "wall_time_s": time.perf_counter() - start,
    }
    oio.write_json(out.dir / "manifest.json", manifest)
    return manifest


def _error(exc, code) -> int:
    payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    if isinstance(exc, ValidationError) and exc.violations:
        payload["violations"] = exc.violations
    print(json.dumps(payload), file=sys.stderr)
    return code


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oqnet", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run",) + MODES:
        p = sub.add_parser(name, help="run a config file" if name == "run" else f"run in {name} mode")
        p.add_argument("--config", required=True, help="JSON run file")
        p.add_argument("--output", help="output directory (overrides the config)")
        p.add_argument("--seed", type=int, help="master seed (overrides the config)")
        p.add_argument("--threads", type=int, default=1, help="worker threads; never changes results")
        p.add_argument("--format", choices=("json", "csv", "both"), help="output formats")
    v = sub.add_parser("verify", help="run the acceptance checks and print a pass/fail table")
    v.add_argument("--threads", type=int, default=1)
    v.add_argument("--only", type=int, nargs="*", help="criterion numbers to run")
    d = sub.add_parser("dump-preset", help="print a built-in network as JSON")
    d.add_argument("name", choices=sorted(PRESETS))
    return parser


def _load(args) -> RunConfig:
    cfg = load_config(args.config)
    data = cfg.to_dict()
    if args.command != "run":
        data["mode"] = args.command
    if args.output:
        data["output_dir"] = args.output
    if args.seed is not None:
        data["seed"] = args.seed
    if args.format:
        data["formats"] = ["json", "csv"] if args.format == "both" else [args.format]
    return RunConfig.from_dict(data)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "dump-preset":
        print(json.dumps(PRESETS[args.name]().to_dict(), indent=1))
        return EXIT_OK
    if args.command == "verify":
        from .acceptance import format_table, run_all

        results = run_all(only=args.only, threads=args.threads)
        print(format_table(results))
        return EXIT_OK if all(r.passed for r in results) else EXIT_FAILED
    try:
        cfg = _load(args)
        manifest = run(cfg, threads=max(1, args.threads))
    except (ValidationError, TypeError) as exc:
        return _error(exc, EXIT_CONFIG)
    except (NonPhysicalStateError, DegenerateInputError, UnsupportedSizeError,
            np.linalg.LinAlgError, FloatingPointError) as exc:
        return _error(exc, EXIT_NUMERIC)
    except OSError as exc:
        return _error(exc, EXIT_IO)
    print(json.dumps({"output_dir": str(cfg.output_dir), "files": manifest["files"]}))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
