"""Command line front end.

Three subcommands: `run` executes a benchmark matrix and writes report
files, `list` prints the detector catalog, and `generate-synth` renders a
synthetic series spec to CSV.  Real datasets are looked up under the
directory given by --data-dir or the TSAD_DATA_DIR environment variable.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from .bench import RunConfig, emit_reports, run_benchmark
from .data import SynthSpec, generate_synthetic, write_series_csv
from .detectors import catalog_lines
from .errors import TsadError
from .preprocessing import SplitSpec

__all__ = ["main", "parse_kv_file", "config_from_sources"]

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def parse_kv_file(path: Path) -> dict:
    """Parse a flat key=value file; # starts a comment, blank lines skipped."""
    values: dict = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def _parse_bool(key: str, raw: str) -> bool:
    lowered = raw.lower()
    if lowered in _TRUE:
        return True
    if lowered in _FALSE:
        return False
    raise ValueError(f"{key}: expected a boolean, got {raw!r}")


def _split_list(raw: str) -> list[str]:
    return [item.strip() for item in raw.split(",") if item.strip()]


def config_from_sources(args: argparse.Namespace) -> RunConfig:
    """Merge the config file (if any) with CLI flags; flags win."""
    file_values: dict = {}
    if args.config is not None:
        file_values = parse_kv_file(Path(args.config))

    datasets = list(args.dataset or [])
    if not datasets and "datasets" in file_values:
        datasets = _split_list(file_values["datasets"])
    if not datasets:
        datasets = ["SYNTH"]

    detectors = list(args.detector or [])
    if not detectors and "detectors" in file_values:
        detectors = _split_list(file_values["detectors"])
    if not detectors:
        detectors = ["ar", "kmeans", "iforest"]

    standardize = True
    if "standardize" in file_values:
        standardize = _parse_bool("standardize", file_values["standardize"])
    if args.no_standardize:
        standardize = False

    detrend = args.detrend or _parse_bool("detrend", file_values.get("detrend", "false"))

    period: Optional[int] = None
    deseasonalize = False
    if "deseasonalize" in file_values:
        deseasonalize = _parse_bool("deseasonalize", file_values["deseasonalize"])
    if "period" in file_values:
        period = int(file_values["period"])
    if args.deseasonalize is not None:
        deseasonalize = True
        period = args.deseasonalize

    seed = args.seed if args.seed is not None else int(file_values.get("seed", "0"))
    out = args.out or file_values.get("output_dir", "bench-out")
    repeat = int(file_values.get("repeat", "1"))

    data_dir = args.data_dir or file_values.get("data_dir") or os.environ.get("TSAD_DATA_DIR")

    split_kwargs = {}
    if "train_ratio" in file_values:
        ratio = float(file_values["train_ratio"])
        split_kwargs["train_ratio"] = ratio
        split_kwargs["test_ratio"] = 1.0 - ratio
    if "validation_of_train" in file_values:
        split_kwargs["validation_of_train"] = float(file_values["validation_of_train"])

    return RunConfig(
        datasets=tuple(datasets),
        detectors=tuple(detectors),
        standardize=standardize,
        detrend=detrend,
        deseasonalize=deseasonalize,
        period=period,
        split=SplitSpec(**split_kwargs),
        seed=seed,
        output_dir=Path(out),
        repeat=repeat,
        data_dir=Path(data_dir) if data_dir else None,
    )


def _cmd_run(args: argparse.Namespace) -> int:
    config = config_from_sources(args)
    rows, summary, curves = run_benchmark(config)
    emit_reports(rows, config.output_dir, summary, curves)
    n_ok = sum(1 for row in rows if row.status == "ok")
    print(f"{len(rows)} rows ({n_ok} ok) -> {config.output_dir}")
    return 0 if n_ok > 0 else 1


def _cmd_list(_args: argparse.Namespace) -> int:
    for line in catalog_lines():
        print(line)
    return 0


def _cmd_generate_synth(args: argparse.Namespace) -> int:
    values = parse_kv_file(Path(args.spec))
    kwargs: dict = {}
    if "length" in values:
        kwargs["length"] = int(values["length"])
    if "base" in values:
        kwargs["base"] = values["base"]
    if "anomaly_rate" in values:
        kwargs["anomaly_rate"] = float(values["anomaly_rate"])
    if "anomaly_kind" in values:
        kwargs["anomaly_kind"] = values["anomaly_kind"]
    if "seed" in values:
        kwargs["seed"] = int(values["seed"])
    if "ar_coeffs" in values:
        kwargs["ar_coeffs"] = tuple(float(v) for v in _split_list(values["ar_coeffs"]))
    if "season_period" in values:
        kwargs["season_period"] = int(values["season_period"])
    series = generate_synthetic(SynthSpec(**kwargs))
    out = Path(args.out) if args.out else Path(f"{series.series_id}.csv")
    write_series_csv(series, out)
    print(f"{series.values.size} points ({series.anomaly_count} anomalous) -> {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tsadkit", description="Univariate time-series anomaly detection benchmark."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a benchmark matrix and write reports")
    run_p.add_argument("--config", help="flat key=value config file")
    run_p.add_argument("--dataset", action="append", help="dataset id or manifest path (repeatable)")
    run_p.add_argument("--detector", action="append", help="detector name (repeatable)")
    run_p.add_argument("--seed", type=int, help="base seed for the run")
    run_p.add_argument("--out", help="output directory for report files")
    run_p.add_argument("--data-dir", help="root directory holding real datasets")
    run_p.add_argument(
        "--no-standardize", action="store_true", help="skip train-fitted standardization"
    )
    run_p.add_argument("--detrend", action="store_true", help="first-difference each segment")
    run_p.add_argument(
        "--deseasonalize", type=int, metavar="PERIOD", help="seasonally difference at PERIOD"
    )
    run_p.set_defaults(func=_cmd_run)

    list_p = sub.add_parser("list", help="print the detector catalog")
    list_p.set_defaults(func=_cmd_list)

    synth_p = sub.add_parser("generate-synth", help="render a synthetic series spec to CSV")
    synth_p.add_argument("--spec", required=True, help="flat key=value spec file")
    synth_p.add_argument("--out", help="output CSV path")
    synth_p.set_defaults(func=_cmd_generate_synth)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TsadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
