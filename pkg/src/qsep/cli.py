"""Command line interface: config loading, orchestration and stable output files.

Subcommands
-----------
* ``simulate``: Monte Carlo sweep -> ``points.csv`` + ``manifest.json``.
* ``asymptote``: closed-form high-SNR curve -> ``asymptote.csv``.
* ``validate``: statistical battery -> ``validation.json``, nonzero exit on
  any failed check.

All SNRs in config files are in dB. CSV files are byte-stable: fixed column
order, 17 significant digits, ``.`` decimal separator and ``\\n`` line
endings.
"""

from __future__ import annotations

import argparse
import configparser
import datetime
import json
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path

from . import __version__
from .analytic import asymptote_curve, gains_for_config
from .backend import active_backend
from .channel import CorrelationSpec, load_covariance_file
from .errors import ConfigError, QsepError
from .montecarlo import (
    DETECTOR_ORDER,
    SimConfig,
    default_workers,
    run_sweep,
    top_decade_window,
)
from .validation import run_validation

_SIM_KEYS = {
    "N_r",
    "M",
    "n",
    "rho_grid_db",
    "seed",
    "max_trials",
    "target_errors",
    "chunk_size",
    "detectors",
}


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def parse_config(path) -> SimConfig:
    """Parse the flat key-value config with [sim] and [correlation] sections."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    parser.optionxform = str  # keys are case-sensitive (N_r vs n)
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if "sim" not in parser:
        raise ConfigError(f"{path}: missing [sim] section")
    sim = parser["sim"]
    unknown = set(sim.keys()) - _SIM_KEYS
    if unknown:
        raise ConfigError(f"{path}: unknown [sim] keys {sorted(unknown)}")

    def need(key: str) -> str:
        if key not in sim:
            raise ConfigError(f"{path}: missing [sim] key {key!r}")
        return sim[key]

    def get_int(key: str, default: int | None = None) -> int:
        raw = sim.get(key)
        if raw is None:
            if default is None:
                raise ConfigError(f"{path}: missing [sim] key {key!r}")
            return default
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"{path}: [sim] {key} must be an integer, got {raw!r}") from exc

    m = get_int("M")
    if m < 2 or (m & (m - 1)) != 0:
        raise ConfigError(f"{path}: M must be a power of two, got {m}")
    try:
        grid = tuple(float(tok) for tok in need("rho_grid_db").replace(",", " ").split())
    except ValueError as exc:
        raise ConfigError(f"{path}: rho_grid_db must be a list of dB values") from exc
    detectors = tuple(
        tok.strip() for tok in sim.get("detectors", "mrc, amrc").replace(",", " ").split()
    )

    corr_section = parser["correlation"] if "correlation" in parser else {}
    unknown_corr = set(corr_section.keys()) - {"kind", "alpha", "phi", "matrix_file"}
    if unknown_corr:
        raise ConfigError(f"{path}: unknown [correlation] keys {sorted(unknown_corr)}")
    kind = corr_section.get("kind", "identity").strip()
    matrix = None
    if kind == "explicit":
        mfile = corr_section.get("matrix_file")
        if not mfile:
            raise ConfigError(f"{path}: explicit correlation requires matrix_file")
        mpath = Path(mfile)
        if not mpath.is_absolute():
            mpath = path.parent / mpath
        matrix = load_covariance_file(mpath)

    def corr_float(key: str) -> float:
        raw = corr_section.get(key, "0")
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"{path}: [correlation] {key} must be a number") from exc

    config = SimConfig(
        N_r=get_int("N_r"),
        M=m,
        n=get_int("n"),
        rho_grid_db=grid,
        correlation=CorrelationSpec(
            kind=kind, alpha=corr_float("alpha"), phi=corr_float("phi"), matrix=matrix
        ),
        seed=get_int("seed"),
        max_trials=get_int("max_trials", SimConfig.max_trials),
        target_errors=get_int("target_errors", SimConfig.target_errors),
        chunk_size=get_int("chunk_size", SimConfig.chunk_size),
        detectors=detectors,
    )
    try:
        config.validate()
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config


@dataclass(frozen=True)
class RunManifest:
    """Reproduction record written next to every simulate output."""

    config: dict
    tool_version: str
    started_at: str
    backend: str
    workers: int
    analytic: dict
    outputs: dict

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        return cls(**json.loads(text))


def _analytic_summary(config: SimConfig) -> dict:
    from .channel import build_covariance

    det_k = build_covariance(config.correlation, config.N_r).det_k
    gain = gains_for_config(config.M, config.n, config.N_r, det_k, k=2.0)
    window = top_decade_window(config)
    return {
        "regime": gain.regime,
        "det_K": det_k,
        "G_d": gain.diversity,
        "G_c_k1": gains_for_config(config.M, config.n, config.N_r, det_k, k=1.0).coding,
        "G_c_k2": gain.coding,
        "k_default": 2.0,
        "asymptote_window_db": list(window),
    }


def cmd_simulate(config_path, out_dir, workers: int | None = None, seed: int | None = None) -> dict:
    """Run the sweep and emit points.csv plus manifest.json; returns the paths."""
    config = parse_config(config_path)
    if seed is not None:
        config = replace(config, seed=seed)
    workers = workers or default_workers()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")

    points = run_sweep(config, workers=workers)

    csv_path = out / "points.csv"
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("rho_db,detector,errors,trials,sep,ci_low,ci_high,mean_qbound\n")
        for pt in points:
            for det in DETECTOR_ORDER:
                st = pt.detectors.get(det)
                if st is None:
                    continue
                fh.write(
                    f"{_fmt(pt.rho_db)},{det},{st.errors},{st.trials},"
                    f"{_fmt(st.sep)},{_fmt(st.ci_low)},{_fmt(st.ci_high)},"
                    f"{_fmt(pt.mean_qbound)}\n"
                )

    manifest_path = out / "manifest.json"
    manifest = RunManifest(
        config=config.to_dict(),
        tool_version=__version__,
        started_at=started,
        backend=active_backend(),
        workers=workers,
        analytic=_analytic_summary(config),
        outputs={"points_csv": csv_path.name, "manifest_json": manifest_path.name},
    )
    with open(manifest_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(manifest.to_json())
    return {"points_csv": csv_path, "manifest_json": manifest_path}


def cmd_asymptote(config_path, out_dir, k: float = 2.0) -> dict:
    """Emit the closed-form curve over the config grid as asymptote.csv."""
    config = parse_config(config_path)
    if not 1.0 <= k <= 2.0:
        raise ConfigError(f"k must lie in [1, 2], got {k}")
    from .channel import build_covariance
    import numpy as np

    det_k = build_covariance(config.correlation, config.N_r).det_k
    gain = gains_for_config(config.M, config.n, config.N_r, det_k, k=k)
    rho = np.array([10.0 ** (db / 10.0) for db in config.rho_grid_db])
    curve = asymptote_curve(gain, rho)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "asymptote.csv"
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("rho_db,sep_asymptote,regime,k,G_d,G_c\n")
        for db, sep, clamped in zip(config.rho_grid_db, curve.sep, curve.clamped):
            regime = gain.regime + ("+out_of_regime" if clamped else "")
            fh.write(
                f"{_fmt(db)},{_fmt(float(sep))},{regime},{_fmt(k)},"
                f"{_fmt(gain.diversity)},{_fmt(gain.coding)}\n"
            )
    return {"asymptote_csv": csv_path}


def cmd_validate(config_path, out_dir, workers: int | None = None, seed: int | None = None) -> int:
    """Run the validation battery; write the report; 0 iff every check passed."""
    config = parse_config(config_path)
    if seed is not None:
        config = replace(config, seed=seed)
    report = run_validation(config, workers=workers or default_workers())
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "validation.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for check in report["checks"]:
        print(f"[{'PASS' if check['passed'] else 'FAIL'}] {check['name']}")
    return 0 if report["passed"] else 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qsep",
        description="Symbol error probability simulation and high-SNR analytics "
        "for phase-quantized SIMO receivers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_k=False):
        p.add_argument("--config", required=True, help="path to the run configuration")
        p.add_argument("--out-dir", required=True, help="directory for output files")
        if with_k:
            p.add_argument("--k", type=float, default=2.0, help="scaling factor in [1, 2]")
        else:
            p.add_argument(
                "--workers",
                type=int,
                default=None,
                help="worker threads (default: QSEP_WORKERS or CPU count)",
            )
            p.add_argument("--seed", type=int, default=None, help="override the config seed")

    common(sub.add_parser("simulate", help="run a Monte Carlo sweep"))
    common(sub.add_parser("asymptote", help="emit the closed-form curve"), with_k=True)
    common(sub.add_parser("validate", help="run the statistical validation battery"))
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    workers = getattr(args, "workers", None)
    if workers is None and "QSEP_WORKERS" in os.environ:
        workers = default_workers()
    try:
        if args.command == "simulate":
            paths = cmd_simulate(args.config, args.out_dir, workers=workers, seed=args.seed)
            print(f"wrote {paths['points_csv']}")
            return 0
        if args.command == "asymptote":
            paths = cmd_asymptote(args.config, args.out_dir, k=args.k)
            print(f"wrote {paths['asymptote_csv']}")
            return 0
        if args.command == "validate":
            return cmd_validate(args.config, args.out_dir, workers=workers, seed=args.seed)
    except QsepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2
    raise AssertionError("unreachable command")


if __name__ == "__main__":
    raise SystemExit(main())
