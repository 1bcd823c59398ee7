"""Reproduction targets: sweep data as CSV plus rendered figures.

Each target computes a small parameter sweep with the library, writes
the numbers as a delimited file, and renders the matching figure next to
it.  Sweep points are independent and may be evaluated by a worker pool
(capped by the PHOTOSTAT_THREADS environment variable, 0 or unset means
auto); outputs are assembled in sweep order, so results are
deterministic regardless of the pool size.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .detector_model import DetectorParams
from .errors import DomainError
from .pulsed_inference import (
    effective_dark_rate,
    equal_two_detector_posterior,
    expected_posterior_sigma,
    single_detector_posterior,
)
from .truncated_dirichlet import TruncatedDirichlet, normalization

TARGETS = ("table1", "table2", "fig1", "fig2", "fig3", "fig4", "figtrunc")

# the reference detector of the table/figure sweeps
_ALPHA = 0.1
_BETA = 0.2
_N_TABLE = 100
_SWEEP_NS = (10, 100, 1000, 10000)


def worker_count() -> int:
    raw = os.environ.get("PHOTOSTAT_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        raise DomainError(f"PHOTOSTAT_THREADS must be an integer, got {raw!r}")
    if n < 0:
        raise DomainError(f"PHOTOSTAT_THREADS must be >= 0, got {n}")
    if n == 0:
        return min(8, os.cpu_count() or 1)
    return n


def parallel_map(fn, items):
    """Order-preserving map over independent sweep points."""
    items = list(items)
    workers = worker_count()
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in row])


def _ref_params() -> DetectorParams:
    return DetectorParams.from_alpha_beta(_ALPHA, _BETA)


def _g_grid(n: int, max_points: int = 1000):
    if n <= max_points:
        return list(range(n + 1))
    step = n / max_points
    grid = sorted({int(round(i * step)) for i in range(max_points + 1)})
    return grid


# ---------------------------------------------------------------------------
# Target computations
# ---------------------------------------------------------------------------

def _table_rows(constrained: bool):
    params = _ref_params()
    two_kind = "two-detector-constrained" if constrained else "two-detector"

    def cell(args):
        p, setup = args
        return expected_posterior_sigma(p, _N_TABLE, params, setup)

    ps = (0.0, 0.5, 1.0)
    jobs = [(p, "one-detector") for p in ps] + [(p, two_kind) for p in ps]
    vals = parallel_map(cell, jobs)
    return [[p, vals[i], vals[i + 3]] for i, p in enumerate(ps)]


def _single_detector_mu_sigma(n: int):
    params = _ref_params()

    def point(g):
        post = single_detector_posterior(g, n, params)
        return float(post.mean[0]), float(post.std[0])

    grid = _g_grid(n)
    vals = parallel_map(point, grid)
    return grid, vals


def _two_detector_mu_sigma(n: int):
    params = _ref_params()
    a_eff = effective_dark_rate(params, params)

    def point(g):
        post = equal_two_detector_posterior(g, n - g, a_eff)
        return float(post.mean[0]), float(post.std[0])

    grid = _g_grid(n)
    vals = parallel_map(point, grid)
    return grid, vals


def _mu_sweep_rows(two_detector: bool):
    rows = []
    for n in _SWEEP_NS:
        grid, vals = (_two_detector_mu_sigma if two_detector else _single_detector_mu_sigma)(n)
        rows.extend([n, g, g / n, mu] for g, (mu, _) in zip(grid, vals))
    return rows


def _mu_band_rows(two_detector: bool):
    n = _N_TABLE
    grid, vals = (_two_detector_mu_sigma if two_detector else _single_detector_mu_sigma)(n)
    return [
        [g / n, mu, mu - sd, mu + sd]
        for g, (mu, sd) in zip(grid, vals)
    ]


def _figtrunc_rows(alpha0: float = 50.0, a: float = 0.1):
    def point(a1):
        td = TruncatedDirichlet((float(a1), alpha0 - a1), a)
        j_taylor = normalization(td, "saddle-taylor")
        j_exact = normalization(td, "exact")
        err = abs(j_taylor - j_exact)
        return [float(a1), j_taylor, j_exact, err, err / j_exact]

    return parallel_map(point, range(1, int(alpha0)))


# ---------------------------------------------------------------------------
# Figure rendering
# ---------------------------------------------------------------------------

def _render_table(rows, label_two: str, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(5, 3.2))
    x = range(len(rows))
    width = 0.36
    ax.bar([i - width / 2 for i in x], [r[1] for r in rows], width, label="1 detector")
    ax.bar([i + width / 2 for i in x], [r[2] for r in rows], width, label=label_two)
    ax.set_xticks(list(x), [f"p = {r[0]:g}" for r in rows])
    ax.set_ylabel("average posterior sigma")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _render_mu_sweep(rows, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(5.5, 3.6))
    for n in _SWEEP_NS:
        pts = [(r[2], r[3]) for r in rows if r[0] == n]
        ax.plot([p[0] for p in pts], [p[1] for p in pts], label=f"N = {n}")
    ax.set_xlabel("relative click frequency g/N")
    ax.set_ylabel("posterior mean")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _render_mu_band(rows, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(5.5, 3.6))
    x = [r[0] for r in rows]
    ax.plot(x, [r[1] for r in rows], color="black", label="mean")
    ax.plot(x, [r[2] for r in rows], color="grey", lw=0.9, label="mean +/- sigma")
    ax.plot(x, [r[3] for r in rows], color="grey", lw=0.9)
    ax.set_xlabel("relative click frequency g/N")
    ax.set_ylabel("posterior mean")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _render_figtrunc(rows, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(5.5, 3.6))
    x = [r[0] for r in rows]
    ax.plot(x, [r[1] for r in rows], color="tab:blue", label="second-order saddle point")
    ax.set_xlabel("first Dirichlet parameter (sum fixed at 50)")
    ax.set_ylabel("retained-mass integral J")
    ax2 = ax.twinx()
    ax2.plot(x, [r[3] * 1e4 for r in rows], "r--", label="absolute error")
    ax2.set_ylabel("absolute error / 1e-4")
    ax.legend(frameon=False, loc="upper left")
    ax2.legend(frameon=False, loc="upper right")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


_HEADERS = {
    "table1": ["p", "sigma_1det", "sigma_2det"],
    "table2": ["p", "sigma_1det", "sigma_2det_constrained"],
    "fig1": ["N", "g", "g_over_N", "mu"],
    "fig2": ["g_over_N", "mu", "mu_minus_sigma", "mu_plus_sigma"],
    "fig3": ["N", "g", "g_over_N", "mu"],
    "fig4": ["g_over_N", "mu", "mu_minus_sigma", "mu_plus_sigma"],
    "figtrunc": ["alpha1", "J_saddle_taylor", "J_exact", "abs_error", "rel_error"],
}


def reproduce(target: str, out_dir: str | Path) -> dict:
    """Compute a reproduction target; write <target>.csv and <target>.png.

    Returns the rows plus the written file paths.
    """
    if target not in TARGETS:
        raise DomainError(f"unknown target {target!r}; choose from {TARGETS}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{target}.csv"
    png_path = out / f"{target}.png"

    if target == "table1":
        rows = _table_rows(constrained=False)
        _render_table(rows, "2 detectors", png_path)
    elif target == "table2":
        rows = _table_rows(constrained=True)
        _render_table(rows, "2 detectors (g1+g2 = N)", png_path)
    elif target == "fig1":
        rows = _mu_sweep_rows(two_detector=False)
        _render_mu_sweep(rows, png_path)
    elif target == "fig3":
        rows = _mu_sweep_rows(two_detector=True)
        _render_mu_sweep(rows, png_path)
    elif target == "fig2":
        rows = _mu_band_rows(two_detector=False)
        _render_mu_band(rows, png_path)
    elif target == "fig4":
        rows = _mu_band_rows(two_detector=True)
        _render_mu_band(rows, png_path)
    else:
        rows = _figtrunc_rows()
        _render_figtrunc(rows, png_path)

    _write_csv(csv_path, _HEADERS[target], rows)
    return {"target": target, "rows": rows, "csv": str(csv_path), "png": str(png_path)}
