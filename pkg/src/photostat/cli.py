"""Batch command-line front end.

Subcommands: ``infer`` runs one inference from a JSON config, ``reproduce``
regenerates the reference tables/figures, ``bench`` times the three
normalization-integral methods on a fixed benchmark, and ``bound`` prints
the cheap dark-rate upper bound.

Exit codes: 0 success, 1 malformed input, 2 domain error, 3 numeric error.
Stderr carries the human-readable detail; the exit code is the only
machine-readable error channel.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cw_inference import CwExperiment, cw_posterior, povm_scale_factors, truncation_negligible
from .detector_model import DetectorParams
from .errors import DomainError, NumericError
from .nuisance import dark_rate_bound
from .pulsed_inference import (
    CountRecord,
    PosteriorMoments,
    effective_dark_rate,
    equal_two_detector_posterior,
    k_outcome_posterior,
    single_detector_posterior,
    unequal_two_detector_posterior,
)
from .truncated_dirichlet import TruncatedDirichlet, moments

EXPERIMENTS = ("pulsed-1det", "pulsed-2det", "pulsed-2det-unequal", "pulsed-k", "cw")
METHOD_CHOICES = ("saddle-quad", "saddle-taylor", "beta-product")


class InputError(Exception):
    """Malformed run configuration; maps to exit code 1."""


@dataclass
class RunConfig:
    """Validated contents of an inference config file."""

    experiment: str
    detectors: list[DetectorParams]
    counts: list[int]
    runs: int | None = None
    method: str | None = None
    edgeworth_order: int = 4
    b: float = 1.0
    eigen_range: tuple[float, float] | None = None

    def resolved_method(self) -> str:
        if self.method is not None:
            return self.method
        k = len(self.counts)
        if k <= 4:
            return "saddle-quad"
        if k > 8:
            return "beta-product"
        return "saddle-taylor"


def _require(cfg: dict, key: str):
    if key not in cfg:
        raise InputError(f"missing required field '{key}'")
    return cfg[key]


def _load_counts_csv(path: str) -> list[int]:
    # one row per POVM setting, count in the first column
    try:
        with open(path, newline="") as fh:
            rows = [row for row in csv.reader(fh) if row]
    except OSError as exc:
        raise InputError(f"cannot read counts file '{path}': {exc}")
    try:
        return [int(float(row[0])) for row in rows]
    except ValueError as exc:
        raise InputError(f"counts file '{path}' holds a non-numeric entry: {exc}")


def parse_config(cfg: dict, counts_csv: str | None = None) -> RunConfig:
    experiment = _require(cfg, "experiment")
    if experiment not in EXPERIMENTS:
        raise InputError(f"field 'experiment' must be one of {EXPERIMENTS}, got {experiment!r}")
    raw_detectors = _require(cfg, "detectors")
    if not isinstance(raw_detectors, list) or not raw_detectors:
        raise InputError("field 'detectors' must be a non-empty list")
    detectors = []
    for i, d in enumerate(raw_detectors):
        try:
            detectors.append(DetectorParams(alpha=float(d["alpha"]), eta=float(d["eta"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"field 'detectors[{i}]' needs numeric 'alpha' and 'eta': {exc}")
        except DomainError as exc:
            raise InputError(f"field 'detectors[{i}]' is invalid: {exc}")
    if counts_csv is not None:
        counts = _load_counts_csv(counts_csv)
    else:
        raw_counts = _require(cfg, "counts")
        if not isinstance(raw_counts, list) or not raw_counts:
            raise InputError("field 'counts' must be a non-empty list")
        try:
            counts = [int(c) for c in raw_counts]
        except (TypeError, ValueError):
            raise InputError("field 'counts' must hold integers")
    runs = cfg.get("runs")
    if runs is not None:
        try:
            runs = int(runs)
        except (TypeError, ValueError):
            raise InputError("field 'runs' must be an integer")
    method = cfg.get("method")
    if method is not None and method not in METHOD_CHOICES:
        raise InputError(f"field 'method' must be one of {METHOD_CHOICES}, got {method!r}")
    order = cfg.get("edgeworth_order", 4)
    if order not in (3, 4):
        raise InputError(f"field 'edgeworth_order' must be 3 or 4, got {order!r}")
    b = cfg.get("b", 1.0)
    try:
        b = float(b)
    except (TypeError, ValueError):
        raise InputError("field 'b' must be a number")
    eigen_range = cfg.get("eigen_range")
    if eigen_range is not None:
        if (
            not isinstance(eigen_range, (list, tuple))
            or len(eigen_range) != 2
        ):
            raise InputError("field 'eigen_range' must be a [min, max] pair")
        eigen_range = (float(eigen_range[0]), float(eigen_range[1]))
    return RunConfig(
        experiment=experiment,
        detectors=detectors,
        counts=counts,
        runs=runs,
        method=method,
        edgeworth_order=order,
        b=b,
        eigen_range=eigen_range,
    )


def run_inference(config: RunConfig) -> PosteriorMoments:
    det = config.detectors
    counts = config.counts
    kind = config.experiment
    if kind == "pulsed-1det":
        if len(counts) != 1:
            raise InputError("field 'counts' must hold exactly one count for pulsed-1det")
        if config.runs is None:
            raise InputError("field 'runs' is required for pulsed-1det")
        return single_detector_posterior(counts[0], config.runs, det[0])
    if kind == "pulsed-2det":
        if len(counts) != 2:
            raise InputError("field 'counts' must hold two counts for pulsed-2det")
        a_eff = effective_dark_rate(det[0], det[-1])
        post = equal_two_detector_posterior(counts[0], counts[1], a_eff)
        post.diagnostics["effective_dark_rate"] = a_eff
        return post
    if kind == "pulsed-2det-unequal":
        if len(counts) != 2:
            raise InputError("field 'counts' must hold two counts for pulsed-2det-unequal")
        if len(det) < 2:
            raise InputError("field 'detectors' must hold two detectors for pulsed-2det-unequal")
        g0 = None if config.runs is None else config.runs - counts[0] - counts[1]
        return unequal_two_detector_posterior(counts[0], counts[1], det[0], det[1], g0=g0)
    if kind == "pulsed-k":
        k = len(counts)
        a_eff = effective_dark_rate(det[0], det[-1], k)
        if a_eff >= 1.0 / k:
            raise DomainError(f"truncation level exceeds 1/K: a={a_eff}, K={k}")
        rec = CountRecord(tuple(counts), runs=config.runs)
        post = k_outcome_posterior(rec, a_eff, method=config.resolved_method(), with_diagnostics=True)
        post.diagnostics["effective_dark_rate"] = a_eff
        return post
    # cw
    alpha = det[0].alpha
    exp = CwExperiment(tuple(counts), alpha=alpha, b=config.b)
    if not truncation_negligible(exp.n_total, exp.k_outcomes, alpha):
        raise DomainError(
            "total count too small for the CW approximation: "
            f"need N >= 1 + K*alpha + 3*sqrt(K*alpha), got N={exp.n_total}"
        )
    method = config.method or "auto"
    post = cw_posterior(exp, m=config.edgeworth_order, method=method)
    if config.eigen_range is not None:
        m_min, m_max = config.eigen_range
        phi1, phi2 = povm_scale_factors(m_min, m_max, exp.k_outcomes)
        # non-scalar operator sum: means scale by M phi1, second moments by M phi2
        post = PosteriorMoments(
            mean=post.mean / exp.b * (m_max * phi1),
            second_origin=post.second_origin / exp.b**2 * (m_max * phi2),
            diagnostics={**post.diagnostics, "phi1": phi1, "phi2": phi2},
        )
    return post


# ---------------------------------------------------------------------------
# Output serialization (floats at 17 significant digits)
# ---------------------------------------------------------------------------

def _fmt(value, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [
            f'{pad}  "{k}": {_fmt(v, indent + 1)}' for k, v in value.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(value, (list, tuple)):
        inner = ", ".join(_fmt(v, indent) for v in value)
        return f"[{inner}]"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value) or math.isinf(value):
            return f'"{value}"'
        return f"{value:.17g}"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None:
        return "null"
    return json.dumps(str(value))


def format_result(post: PosteriorMoments) -> str:
    payload = {
        "mean": [float(x) for x in post.mean],
        "second_origin": [[float(x) for x in row] for row in post.second_origin],
        "cov": [[float(x) for x in row] for row in post.cov],
        "std": [float(x) for x in post.std],
        "diagnostics": _jsonable(post.diagnostics),
    }
    return _fmt(payload) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _cmd_infer(args) -> int:
    try:
        text = Path(args.input).read_text()
    except OSError as exc:
        raise InputError(f"cannot read input file '{args.input}': {exc}")
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"input file is not valid JSON: {exc}")
    if not isinstance(cfg, dict):
        raise InputError("input file must hold a JSON object")
    config = parse_config(cfg, counts_csv=args.counts_csv)
    if args.method is not None:
        config.method = args.method
    if args.edgeworth_order is not None:
        config.edgeworth_order = args.edgeworth_order
    post = run_inference(config)
    out = format_result(post)
    if args.output:
        Path(args.output).write_text(out)
    else:
        sys.stdout.write(out)
    return 0


def _cmd_reproduce(args) -> int:
    from .reports import reproduce

    result = reproduce(args.target, args.out_dir)
    sys.stdout.write(f"wrote {result['csv']} and {result['png']}\n")
    return 0


def _cmd_bench(args) -> int:
    td = TruncatedDirichlet((10.0, 10.0, 50.0), 0.1)
    methods = ("beta-product", "saddle-taylor", "saddle-quad")
    times: dict[str, float] = {}
    results: dict[str, tuple] = {}
    for method in methods:
        best = math.inf
        for _ in range(max(1, args.repeats)):
            t0 = time.perf_counter()
            results[method] = moments(td, method)
            best = min(best, time.perf_counter() - t0)
        times[method] = best
    ref_mean, ref_second = results["saddle-quad"]
    sys.stdout.write("benchmark: K=3 moments, Dirichlet parameters (10, 10, 50), truncation 0.1\n")
    for method in methods:
        mean, second = results[method]
        dev = max(
            float(np.max(np.abs(mean - ref_mean))),
            float(np.max(np.abs(second - ref_second))),
        )
        sys.stdout.write(
            f"{method:>13}: {times[method] * 1e3:9.3f} ms   max moment deviation vs saddle-quad: {dev:.3e}\n"
        )
    ordered = times["beta-product"] < times["saddle-taylor"] < times["saddle-quad"]
    if not ordered:
        sys.stderr.write("error: method runtime ordering violated\n")
        return 3
    sys.stdout.write("runtime ordering: beta-product < saddle-taylor < saddle-quad (as expected)\n")
    return 0


def _cmd_bound(args) -> int:
    value = dark_rate_bound(args.g, args.n)
    sys.stdout.write(_fmt({"g": args.g, "n": args.n, "bound": value}) + "\n")
    return 0


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage by default; 2 is reserved for domain errors
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="photostat", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_infer = sub.add_parser("infer", help="run one inference from a JSON config")
    p_infer.add_argument("--input", required=True, help="JSON run configuration")
    p_infer.add_argument("--output", help="write the JSON result here instead of stdout")
    p_infer.add_argument("--counts-csv", help="read counts from a CSV file (one row per POVM setting)")
    p_infer.add_argument("--method", choices=METHOD_CHOICES, help="override the J-integral method")
    p_infer.add_argument("--edgeworth-order", type=int, choices=(3, 4), help="override the marginalization order")
    p_infer.set_defaults(func=_cmd_infer)

    p_rep = sub.add_parser("reproduce", help="regenerate a reference table or figure")
    p_rep.add_argument("--target", required=True, help="table1|table2|fig1|fig2|fig3|fig4|figtrunc")
    p_rep.add_argument("--out-dir", default=".", help="directory for the CSV and PNG outputs")
    p_rep.set_defaults(func=_cmd_reproduce)

    p_bench = sub.add_parser("bench", help="time the three J-integral methods")
    p_bench.add_argument("--repeats", type=int, default=3, help="timing repetitions (best is kept)")
    p_bench.set_defaults(func=_cmd_bench)

    p_bound = sub.add_parser("bound", help="upper bound on the dark rate from a low count")
    p_bound.add_argument("--g", type=int, required=True, help="observed click count")
    p_bound.add_argument("--n", type=int, required=True, help="number of runs")
    p_bound.set_defaults(func=_cmd_bound)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        sys.stderr.write(f"input error: {exc}\n")
        return 1
    except DomainError as exc:
        sys.stderr.write(f"domain error: {exc}\n")
        return 2
    except NumericError as exc:
        sys.stderr.write(f"numeric error: {exc}\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
