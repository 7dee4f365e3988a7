"""Command-line front end: dataset ingestion, estimation runs, result emission.

Input datasets are CSV files with header ``x,row,col``; row/col may be
coded 1/2 or 0/1 (0/1 is auto-mapped so that code 1 becomes level 1 and
code 0 becomes level 2, matching the case/exposure-first table
orientation; the mapping is echoed in the output metadata).

All outputs carry a ``#``-prefixed metadata header (version, seed, kernel,
bandwidths, ...) sufficient to replay every emitted number. CSV is the
canonical format; JSON mirrors it field-for-field.

Exit codes: 0 success, 2 parse/config error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import __version__
from .bandwidth import CV, DPI, FIXED, plan_bandwidth
from .baselines import (
    Table2x2,
    fit_interaction_logit,
    glm_local_log_or,
    global_or,
    haldane_or,
    pearson_chi2,
    wald_ci_or,
)
from .data import CELL_CODE, CELL_ORDER, Sample
from .errors import (
    DataFormatError,
    EmptyFileError,
    LocalOddsError,
    NumericalError,
    ParseError,
)
from .estimators import AMENDED, CORRECTED, PLUGIN, EstimatorConfig, estimate_curve
from .inference import (
    CI_METHODS,
    DELTA_AMENDED,
    DELTA_PLUGIN,
    M1_BOOTSTRAP,
    BootstrapConfig,
    bootstrap_curve,
    delta_ci_amended,
    delta_ci_plugin,
)
from .kernels import get_kernel
from .simulation import GLM, coverage_study, get_model, integrated_metrics

_ESTIMATOR_FLAGS = {
    "1": PLUGIN, "I": PLUGIN,
    "2": AMENDED, "II": AMENDED,
    "3": CORRECTED, "III": CORRECTED,
}
_METHOD_FLAGS = {
    "delta1": DELTA_PLUGIN,
    "delta2": DELTA_AMENDED,
    "boot": M1_BOOTSTRAP,
}


# ---------------------------------------------------------------------------
# Dataset ingestion and emission
# ---------------------------------------------------------------------------

def _map_codes(values: list[int], lines: list[int], column: str) -> tuple[list[int], str]:
    """Map raw 1/2 or 0/1 level codes to 1/2; returns (levels, coding label)."""
    present = set(values)
    if not present <= {0, 1, 2}:
        bad = next((v, ln) for v, ln in zip(values, lines) if v not in (0, 1, 2))
        raise ParseError(f"column {column!r} has level {bad[0]} outside 0/1/2", bad[1])
    if 0 in present and 2 in present:
        raise ParseError(f"column {column!r} mixes 0/1 and 1/2 coding")
    if 0 in present:
        # 0/1 coding: 1 -> level 1, 0 -> level 2 (case/exposure level first).
        return [1 if v == 1 else 2 for v in values], "0/1->1/2"
    return values, "1/2"


def ingest(path: str, delimiter: str = ",") -> Sample:
    """Read a dataset file into a Sample.

    The returned sample's ``meta`` echoes the row count, the pooled 2x2
    cell totals and the level coding applied to each column.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyFileError(f"{path}: file is empty")
        names = [c.strip().lower() for c in header]
        if sorted(names) != ["col", "row", "x"]:
            raise ParseError(f"expected header columns x,row,col; got {header!r}", 1)
        ix, irow, icol = names.index("x"), names.index("row"), names.index("col")

        xs: list[float] = []
        rows: list[int] = []
        cols: list[int] = []
        lines: list[int] = []
        for record in reader:
            line = reader.line_num
            if not record or all(not c.strip() for c in record):
                continue
            if len(record) != len(names):
                raise ParseError(f"expected {len(names)} fields, got {len(record)}", line)
            try:
                xs.append(float(record[ix]))
                rows.append(int(record[irow]))
                cols.append(int(record[icol]))
            except ValueError as exc:
                raise ParseError(str(exc), line)
            lines.append(line)

    if not xs:
        raise EmptyFileError(f"{path}: no observation rows")
    rows, row_coding = _map_codes(rows, lines, "row")
    cols, col_coding = _map_codes(cols, lines, "col")
    cells = np.array([CELL_CODE[(i, j)] for i, j in zip(rows, cols)], dtype=np.int8)
    sample = Sample(np.array(xs), cells)
    counts = sample.cell_counts()
    sample.meta = {
        "source": path,
        "n": sample.n,
        "coding_row": row_coding,
        "coding_col": col_coding,
        "cell_counts_11_12_21_22": ",".join(str(int(c)) for c in counts),
    }
    return sample


def emit_sample(sample: Sample, path: str, delimiter: str = ",") -> None:
    """Write a sample back to the input schema at full float precision."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, delimiter=delimiter)
        writer.writerow(["x", "row", "col"])
        for x, code in zip(sample.xs, sample.cells):
            i, j = CELL_ORDER[int(code)]
            writer.writerow([repr(float(x)), i, j])


# ---------------------------------------------------------------------------
# Output formatting
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _native(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return None if v != v else v  # NaN has no JSON representation
    if isinstance(value, (int, np.integer)):
        return int(value)
    return value


def write_table(stream, metadata: dict, columns: list[str], rows, fmt: str) -> None:
    """Emit one result table with its metadata header."""
    if fmt == "json":
        payload = {
            "metadata": {k: _native(v) for k, v in metadata.items()},
            "columns": columns,
            "rows": [[_native(v) for v in row] for row in rows],
        }
        json.dump(payload, stream, indent=2)
        stream.write("\n")
        return
    for key, value in metadata.items():
        stream.write(f"# {key}: {_fmt(value)}\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])


def _open_output(args):
    if args.output:
        return open(args.output, "w", encoding="utf-8", newline="")
    return io.TextIOWrapper(sys.stdout.buffer, encoding="utf-8", newline="", write_through=True)


def _base_metadata(args, command: str) -> dict:
    return {"version": __version__, "command": command}


# ---------------------------------------------------------------------------
# Shared argument plumbing
# ---------------------------------------------------------------------------

def _parse_grid_spec(spec: str) -> np.ndarray:
    parts = spec.split(":")
    if len(parts) != 3:
        raise ValueError("grid must look like lo:hi:step")
    lo, hi, step = (float(p) for p in parts)
    if step <= 0:
        raise ValueError("grid step must be positive")
    if hi < lo:
        raise ValueError("grid hi must be at least lo")
    count = int(round((hi - lo) / step))
    grid = lo + step * np.arange(count + 1)
    return grid[grid <= hi + 1e-12 * max(1.0, abs(hi))]


def _resolve_plan(args, sample, spec):
    mode = args.bandwidth
    if mode == "auto-dpi":
        return plan_bandwidth(sample, spec, DPI, undersmoothed=args.undersmooth), "auto-dpi"
    if mode == "auto-cv":
        return plan_bandwidth(sample, spec, CV, undersmoothed=args.undersmooth), "auto-cv"
    try:
        value = float(mode)
    except ValueError:
        raise DataFormatError(
            f"--bandwidth must be auto-dpi, auto-cv or a positive number; got {mode!r}"
        )
    if value <= 0:
        raise DataFormatError("--bandwidth value must be positive")
    return (
        plan_bandwidth(sample, spec, FIXED, undersmoothed=args.undersmooth, fixed_h=value),
        "fixed",
    )


def _resolve_grid(args, sample, h) -> np.ndarray:
    if args.grid:
        return _parse_grid_spec(args.grid)
    lo = sample.support_lo + h
    hi = sample.support_hi - h
    if hi <= lo:  # bandwidth wider than the support: fall back to full range
        lo, hi = sample.support_lo, sample.support_hi
    return np.linspace(lo, hi, 101)


def _add_io_options(parser):
    parser.add_argument("--input", required=True, help="dataset CSV (header x,row,col)")
    parser.add_argument("--delimiter", default=",", help="input field delimiter")
    parser.add_argument("--output", default=None, help="output file (default stdout)")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")


def _add_smoothing_options(parser):
    parser.add_argument("--estimator", choices=sorted(_ESTIMATOR_FLAGS), default="2",
                        help="pointwise estimator: 1/I plug-in, 2/II amended, 3/III corrected")
    parser.add_argument("--kernel", choices=("gaussian", "epanechnikov"),
                        default="gaussian")
    parser.add_argument("--bandwidth", default="auto-dpi",
                        help="auto-dpi, auto-cv, or a fixed positive value")
    parser.add_argument("--undersmooth", action="store_true",
                        help="multiply the selected bandwidth by n^(-1/20)")
    parser.add_argument("--grid", default=None, help="evaluation grid lo:hi:step")
    parser.add_argument("--B", type=int, default=500, dest="B",
                        help="bootstrap resamples (estimator III bias terms / boot CI)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=1)


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------

def _cmd_estimate(args) -> int:
    sample = ingest(args.input, args.delimiter)
    spec = get_kernel(args.kernel)
    plan, mode = _resolve_plan(args, sample, spec)
    grid = _resolve_grid(args, sample, plan.h)
    tag = _ESTIMATOR_FLAGS[args.estimator]
    config = EstimatorConfig(bandwidths=plan, estimator=tag, kernel=spec,
                             bias_resamples=args.B, seed=args.seed)
    curve = estimate_curve(sample, grid, config)

    metadata = _base_metadata(args, "estimate")
    metadata.update(sample.meta)
    metadata.update(
        estimator=tag, kernel=spec.kind, bandwidth_mode=mode,
        undersmooth=args.undersmooth, h=plan.h, g=plan.g,
        seed=args.seed, B=args.B,
    )
    columns = ["x", "log_or", "valid", "epsilon", "h", "g", "boundary"]
    rows = [
        [curve.x[i], curve.log_or[i], bool(curve.valid[i]), curve.epsilon[i],
         plan.h, plan.g, bool(curve.boundary[i])]
        for i in range(len(curve))
    ]
    with _open_output(args) as out:
        write_table(out, metadata, columns, rows, args.format)
    return 0


def _cmd_ci(args) -> int:
    sample = ingest(args.input, args.delimiter)
    spec = get_kernel(args.kernel)
    plan, mode = _resolve_plan(args, sample, spec)
    grid = _resolve_grid(args, sample, plan.h)
    method = _METHOD_FLAGS[args.method]

    center_tag = PLUGIN if method == DELTA_PLUGIN else AMENDED
    config = EstimatorConfig(bandwidths=plan, estimator=center_tag, kernel=spec,
                             bias_resamples=args.B, seed=args.seed)
    curve = estimate_curve(sample, grid, config)

    lo = np.full(grid.size, np.nan)
    hi = np.full(grid.size, np.nan)
    if method == M1_BOOTSTRAP:
        boot = BootstrapConfig(B=args.B, alpha=args.alpha, seed=args.seed,
                               pilot_g=plan.g)
        for i, ci in enumerate(bootstrap_curve(sample, grid, plan.h, boot, spec)):
            lo[i], hi[i] = ci.lo, ci.hi
    else:
        ci_fn = delta_ci_plugin if method == DELTA_PLUGIN else delta_ci_amended
        for i, x in enumerate(grid):
            try:
                ci = ci_fn(sample, float(x), plan.h, spec, args.alpha)
            except LocalOddsError:
                continue
            lo[i], hi[i] = ci.lo, ci.hi

    metadata = _base_metadata(args, "ci")
    metadata.update(sample.meta)
    metadata.update(
        estimator=center_tag, kernel=spec.kind, bandwidth_mode=mode,
        undersmooth=args.undersmooth, h=plan.h, g=plan.g,
        method=method, alpha=args.alpha, B=args.B, seed=args.seed,
    )
    columns = ["x", "log_or", "valid", "epsilon", "h", "g", "boundary",
               "ci_lo", "ci_hi", "method", "alpha", "B", "seed"]
    rows = [
        [curve.x[i], curve.log_or[i], bool(curve.valid[i]), curve.epsilon[i],
         plan.h, plan.g, bool(curve.boundary[i]), lo[i], hi[i],
         method, args.alpha, args.B, args.seed]
        for i in range(len(curve))
    ]
    with _open_output(args) as out:
        write_table(out, metadata, columns, rows, args.format)
    return 0


def _cmd_baseline(args) -> int:
    sample = ingest(args.input, args.delimiter)
    table = Table2x2.from_sample(sample)
    wald_lo, wald_hi = wald_ci_or(table, args.alpha)
    chi2, chi2_p = pearson_chi2(table)
    fit = fit_interaction_logit(sample)
    grid = (_parse_grid_spec(args.grid) if args.grid
            else np.linspace(sample.support_lo, sample.support_hi, 101))
    curve = glm_local_log_or(sample, grid)

    metadata = _base_metadata(args, "baseline")
    metadata.update(sample.meta)
    metadata.update(
        alpha=args.alpha,
        global_or=global_or(table),
        haldane_or=haldane_or(table),
        wald_ci_lo=wald_lo,
        wald_ci_hi=wald_hi,
        chi2_statistic=chi2,
        chi2_p_value=chi2_p,
        glm_beta0=fit.beta0, glm_beta1=fit.beta1,
        glm_beta2=fit.beta2, glm_beta3=fit.beta3,
        glm_se0=float(fit.standard_errors[0]),
        glm_se1=float(fit.standard_errors[1]),
        glm_se2=float(fit.standard_errors[2]),
        glm_se3=float(fit.standard_errors[3]),
        glm_converged=fit.converged,
        glm_iterations=fit.iterations,
    )
    columns = ["x", "glm_log_or", "glm_se"]
    rows = [[curve.x[i], curve.log_or[i], curve.se[i]] for i in range(len(curve))]
    with _open_output(args) as out:
        write_table(out, metadata, columns, rows, args.format)
    return 0


def _cmd_simulate(args) -> int:
    model = get_model(args.model)
    tag = GLM if args.estimator.lower() == "glm" else _ESTIMATOR_FLAGS[args.estimator]
    spec = get_kernel(args.kernel)
    report = integrated_metrics(model, tag, args.n, args.reps, args.seed,
                                B=args.B, spec=spec, threads=args.threads)
    metadata = _base_metadata(args, "simulate")
    metadata.update(model=model.name, n=args.n, estimator=tag, reps=args.reps,
                    seed=args.seed, B=args.B, kernel=spec.kind)
    columns = ["model", "n", "estimator", "integrated_abs_bias", "integrated_mse",
               "replicates", "invalid_count"]
    rows = [[report.model, report.n, report.estimator, report.integrated_abs_bias,
             report.integrated_mse, report.replicates, report.invalid_count]]
    with _open_output(args) as out:
        write_table(out, metadata, columns, rows, args.format)
    return 0


def _cmd_coverage(args) -> int:
    model = get_model(args.model)
    method = _METHOD_FLAGS[args.method]
    spec = get_kernel(args.kernel)
    reports = coverage_study(model, args.n, args.reps, args.x, method,
                             B=args.B, seed=args.seed, alpha=args.alpha,
                             spec=spec, threads=args.threads)
    metadata = _base_metadata(args, "coverage")
    metadata.update(model=model.name, n=args.n, method=method, reps=args.reps,
                    alpha=args.alpha, B=args.B, seed=args.seed, kernel=spec.kind)
    columns = ["model", "n", "x", "method", "ecp", "mean_width", "replicates"]
    rows = [[r.model, r.n, r.x, r.method, r.ecp, r.mean_width, r.replicates]
            for r in reports]
    with _open_output(args) as out:
        write_table(out, metadata, columns, rows, args.format)
    return 0


# ---------------------------------------------------------------------------
# Parser and entry point
# ---------------------------------------------------------------------------

def _alpha_option(parser):
    parser.add_argument("--alpha", type=float, default=0.05,
                        help="two-sided miscoverage level in (0, 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="localodds",
        description="Pointwise odds-ratio estimation for 2x2 tables with a covariate",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_est = sub.add_parser("estimate", help="log odds-ratio curve over a grid")
    _add_io_options(p_est)
    _add_smoothing_options(p_est)
    p_est.set_defaults(handler=_cmd_estimate)

    p_ci = sub.add_parser("ci", help="curve with pointwise confidence intervals")
    _add_io_options(p_ci)
    _add_smoothing_options(p_ci)
    _alpha_option(p_ci)
    p_ci.add_argument("--method", choices=sorted(_METHOD_FLAGS), default="delta2")
    p_ci.set_defaults(handler=_cmd_ci)

    p_base = sub.add_parser("baseline", help="global and model-based comparators")
    _add_io_options(p_base)
    _alpha_option(p_base)
    p_base.add_argument("--grid", default=None, help="GLM curve grid lo:hi:step")
    p_base.set_defaults(handler=_cmd_baseline)

    p_sim = sub.add_parser("simulate", help="integrated bias/MSE study")
    p_sim.add_argument("--model", choices=("A", "B", "C"), required=True)
    p_sim.add_argument("--n", type=int, required=True)
    p_sim.add_argument("--estimator", default="2",
                       choices=sorted(_ESTIMATOR_FLAGS) + ["glm"])
    p_sim.add_argument("--reps", type=int, default=500)
    p_sim.add_argument("--B", type=int, default=500, dest="B")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--kernel", choices=("gaussian", "epanechnikov"),
                       default="gaussian")
    p_sim.add_argument("--threads", type=int, default=1)
    p_sim.add_argument("--output", default=None)
    p_sim.add_argument("--format", choices=("csv", "json"), default="csv")
    p_sim.set_defaults(handler=_cmd_simulate)

    p_cov = sub.add_parser("coverage", help="confidence-interval coverage study")
    p_cov.add_argument("--model", choices=("A", "B", "C"), required=True)
    p_cov.add_argument("--n", type=int, required=True)
    p_cov.add_argument("--x", type=float, nargs="+", required=True)
    p_cov.add_argument("--method", choices=sorted(_METHOD_FLAGS), default="delta2")
    p_cov.add_argument("--reps", type=int, default=500)
    p_cov.add_argument("--B", type=int, default=500, dest="B")
    _alpha_option(p_cov)
    p_cov.add_argument("--seed", type=int, default=0)
    p_cov.add_argument("--kernel", choices=("gaussian", "epanechnikov"),
                       default="gaussian")
    p_cov.add_argument("--threads", type=int, default=1)
    p_cov.add_argument("--output", default=None)
    p_cov.add_argument("--format", choices=("csv", "json"), default="csv")
    p_cov.set_defaults(handler=_cmd_coverage)
    return parser


def _emit_error(exc: Exception) -> None:
    payload = {"error": type(exc).__name__, "message": str(exc)}
    print(json.dumps(payload), file=sys.stderr)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    alpha = getattr(args, "alpha", None)
    if alpha is not None and not (0.0 < alpha < 1.0):
        parser.error(f"--alpha must lie strictly between 0 and 1, got {alpha}")
    try:
        return args.handler(args)
    except DataFormatError as exc:
        _emit_error(exc)
        return 2
    except ValueError as exc:
        _emit_error(exc)
        return 2
    except (NumericalError, np.linalg.LinAlgError) as exc:
        _emit_error(exc)
        return 3


if __name__ == "__main__":
    sys.exit(main())
