"""Configuration ingestion, experiment orchestration, and result persistence.

Configs are flat ``key = value`` documents, one pair per line, ``#`` comments,
strict about unknown keys. Every run writes ``results.csv`` (fixed, versioned
column order; fully determined by the config and master seed) and
``summary.json`` (the resolved config, digests, and wall time); the
logarithmic-average experiment additionally writes ``plot.csv`` with one row
per checkpoint rectangle.

Subcommands: simulate | asclt | calibrate | diagnose | limit.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from dataclasses import dataclass, field as dataclass_field
from pathlib import Path
from typing import Optional

from . import __version__
from .covgrid import CovarianceModel, GridShape, berman_check
from .diagnostics import (
    ConditionReport,
    comparison_bound,
    dprime_sum,
    dstar_bound,
    make_partition,
)
from .errors import (
    FieldmaxError,
    InvalidValue,
    IoError,
    ParseError,
    UnknownKey,
)
from .estimators import (
    JointConfig,
    asclt_trace,
    level_grids,
    mc_joint_probability,
    weight_normalizer,
)
from .fieldgen import TrendSpec
from .levels import TailFunction, gumbel_joint_limit, limit_value, make_plan, tail
from .missing import LambdaModel
from .streams import derive_stream  # re-exported: streams are part of the CLI contract

__all__ = [
    "ExperimentConfig",
    "ResultRecord",
    "parse_config",
    "derive_stream",
    "run_experiment",
    "main",
]

EXPERIMENTS = ("simulate", "asclt", "calibrate", "diagnose", "limit")

# key -> (value parser, default); None default means "no default, maybe required"
_SCHEMA = {
    "experiment": (str, None),
    "family": (str, "independent"),
    "field": (str, "gaussian"),
    "lambda": (str, "point(1.0)"),
    "trend": (str, "zero"),
    "shape": (str, None),
    "shapes": (str, None),
    "tau": (float, None),
    "kappa": (float, None),
    "x": (float, None),
    "y": (float, None),
    "replications": (int, 10000),
    "seed": (int, 0),
    "ratio_bound": (float, 4.0),
    "epsilon": (float, 0.1),
    "dense_threshold": (int, 4096),
    "threads": (int, 1),
    "out": (str, "."),
}

_DIGEST_EXCLUDED = ("seed", "out", "threads")


def _parse_tag(text: str):
    """'name(a,b,...)' -> (name, [floats]); bare 'name' -> (name, [])."""
    text = text.strip()
    if "(" not in text:
        return text, []
    if not text.endswith(")"):
        raise InvalidValue(f"malformed tag {text!r}")
    name, _, body = text[:-1].partition("(")
    args = [a for a in (s.strip() for s in body.split(",")) if a]
    try:
        return name.strip(), [float(a) for a in args]
    except ValueError as exc:
        raise InvalidValue(f"non-numeric parameter in tag {text!r}") from exc


def model_from_tag(tag: str) -> CovarianceModel:
    name, args = _parse_tag(tag)
    try:
        if name == "independent" and not args:
            return CovarianceModel.independent()
        if name == "geometric" and len(args) == 1:
            return CovarianceModel.geometric(args[0])
        if name == "polynomial" and len(args) == 2:
            return CovarianceModel.polynomial(args[0], args[1])
    except ValueError as exc:
        raise InvalidValue(f"family: {exc}") from exc
    raise InvalidValue(f"family tag {tag!r} not one of independent | geometric(theta) | polynomial(c,alpha)")


def lambda_from_tag(tag: str) -> LambdaModel:
    name, args = _parse_tag(tag)
    try:
        if name == "point" and len(args) == 1:
            return LambdaModel.point(args[0])
        if name == "twopoint" and len(args) == 3:
            return LambdaModel.twopoint(args[0], args[1], args[2])
        if name == "beta" and len(args) == 2:
            return LambdaModel.beta(args[0], args[1])
    except (ValueError, FieldmaxError) as exc:
        raise InvalidValue(f"lambda: {exc}") from exc
    raise InvalidValue(f"lambda tag {tag!r} not one of point(p) | twopoint(p1,p2,w) | beta(a,b)")


def trend_from_tag(tag: str) -> Optional[TrendSpec]:
    name, args = _parse_tag(tag)
    if name == "zero" and not args:
        return None
    if name == "constant" and len(args) == 1:
        return TrendSpec.constant(args[0])
    if name == "linear" and len(args) == 2:
        return TrendSpec.linear(args[0], args[1])
    if name == "sinusoid" and 1 <= len(args) <= 3:
        return TrendSpec.sinusoid(*args)
    raise InvalidValue(
        f"trend tag {tag!r} not one of zero | constant(c) | linear(c1,c2) | sinusoid(c,p1,p2)"
    )


def field_from_tag(tag: str):
    name, args = _parse_tag(tag)
    if name == "gaussian" and not args:
        return "gaussian", 1, 1
    if name == "chi" and len(args) == 1 and args[0] == int(args[0]):
        return "chi", int(args[0]), 1
    if name == "orderstat" and len(args) == 2 and all(a == int(a) for a in args):
        return "orderstat", int(args[0]), int(args[1])
    raise InvalidValue(f"field tag {tag!r} not one of gaussian | chi(d) | orderstat(d,r)")


def shape_from_text(text: str) -> GridShape:
    for sep in ("x", "X", ","):
        if sep in text:
            a, _, b = text.partition(sep)
            try:
                return GridShape(int(a), int(b))
            except (ValueError, FieldmaxError) as exc:
                raise InvalidValue(f"bad shape {text!r}: {exc}") from exc
    raise InvalidValue(f"shape must look like '32x32', got {text!r}")


@dataclass
class ExperimentConfig:
    """Resolved experiment configuration with documented defaults.

    ``raw`` holds the resolved string form of every key (defaults included);
    ``defaulted`` lists the keys the user did not set. The config digest is a
    stable hash of the canonicalized semantic keys, excluding the master seed
    and the execution-only keys (out, threads).
    """

    experiment: str
    model: CovarianceModel
    field: str
    d: int
    r: int
    lam: LambdaModel
    trend: Optional[TrendSpec]
    shape: Optional[GridShape]
    shapes: tuple
    tau: Optional[float]
    kappa: Optional[float]
    x: Optional[float]
    y: Optional[float]
    replications: int
    seed: int
    ratio_bound: float
    epsilon: float
    dense_threshold: int
    threads: int
    out: str
    raw: dict = dataclass_field(repr=False)
    defaulted: tuple = ()

    def digest(self) -> str:
        lines = [
            f"{k}={self.raw[k]}"
            for k in sorted(self.raw)
            if k not in _DIGEST_EXCLUDED
        ]
        return hashlib.sha256("\n".join(lines).encode()).hexdigest()[:16]

    def joint_config(self) -> JointConfig:
        return JointConfig(
            model=self.model,
            shape=self.shape,
            lam=self.lam,
            field=self.field,
            d=self.d,
            r=self.r,
            tau=self.tau,
            kappa=self.kappa,
            x=self.x,
            y=self.y,
            trend=self.trend,
            replications=self.replications,
            seed=self.seed,
            ratio_bound=self.ratio_bound,
            dense_threshold=self.dense_threshold,
        )


def parse_config(text: str, experiment: Optional[str] = None) -> ExperimentConfig:
    """Strict parse of a flat key = value configuration document.

    Unknown keys, duplicate keys, malformed lines, and out-of-domain values
    are all hard errors carrying the offending line or key. ``experiment``
    may come from the CLI subcommand instead of the document; when both are
    present they must agree.
    """
    seen: dict = {}
    for lineno, rawline in enumerate(text.splitlines(), start=1):
        line = rawline.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {rawline!r}", line=lineno)
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _SCHEMA:
            raise UnknownKey(f"unknown key {key!r}", line=lineno)
        if key in seen:
            raise ParseError(f"duplicate key {key!r}", line=lineno)
        if not value:
            raise InvalidValue(f"empty value for key {key!r}", line=lineno)
        caster, _ = _SCHEMA[key]
        try:
            seen[key] = caster(value)
        except ValueError as exc:
            raise InvalidValue(f"key {key!r}: {exc}", line=lineno) from exc

    if experiment is not None:
        if "experiment" in seen and seen["experiment"] != experiment:
            raise InvalidValue(
                f"config says experiment = {seen['experiment']!r} but the "
                f"{experiment!r} subcommand was invoked"
            )
        seen.setdefault("experiment", experiment)
    if "experiment" not in seen:
        raise InvalidValue("missing required key 'experiment'")
    if seen["experiment"] not in EXPERIMENTS:
        raise InvalidValue(
            f"experiment must be one of {' | '.join(EXPERIMENTS)}, got {seen['experiment']!r}"
        )

    defaulted = tuple(k for k in _SCHEMA if k not in seen and _SCHEMA[k][1] is not None)
    resolved = dict(seen)
    for key, (_, default) in _SCHEMA.items():
        if key not in resolved and default is not None:
            resolved[key] = default

    exp = resolved["experiment"]
    model = model_from_tag(resolved["family"])
    fieldkind, d, r = field_from_tag(resolved["field"])
    lam = lambda_from_tag(resolved["lambda"])
    trend = trend_from_tag(resolved["trend"])
    shape = shape_from_text(resolved["shape"]) if "shape" in resolved else None
    shapes = (
        tuple(shape_from_text(s) for s in resolved["shapes"].split(";") if s.strip())
        if "shapes" in resolved
        else ()
    )

    tau, kappa = resolved.get("tau"), resolved.get("kappa")
    x, y = resolved.get("x"), resolved.get("y")
    has_targets = tau is not None or kappa is not None
    has_coords = x is not None or y is not None
    if has_coords:
        if x is None or y is None:
            raise InvalidValue("x and y must be given together")
        if x > y:
            raise InvalidValue(f"need x <= y, got x={x}, y={y}")
    if exp == "diagnose":
        # the dependence sums need only the lower-level target
        if not shapes:
            raise InvalidValue("diagnose requires a shapes ladder, e.g. shapes = 16x16;32x32")
        if kappa is None:
            raise InvalidValue("diagnose requires kappa (the lower-level target)")
        if tau is not None and not 0.0 < tau <= kappa:
            raise InvalidValue(f"need kappa >= tau > 0, got tau={tau}, kappa={kappa}")
    elif has_targets:
        if tau is None or kappa is None:
            raise InvalidValue("tau and kappa must be given together")
        if not 0.0 < tau <= kappa:
            raise InvalidValue(f"need kappa >= tau > 0, got tau={tau}, kappa={kappa}")
    if exp in ("simulate", "asclt", "limit"):
        if has_targets == has_coords:
            raise InvalidValue("give exactly one of (tau, kappa) or (x, y)")
    if exp in ("simulate", "asclt", "calibrate"):
        if shape is None:
            raise InvalidValue(f"experiment {exp!r} requires a shape")
    if exp == "calibrate" and (tau is None or kappa is None):
        raise InvalidValue("calibrate requires tau and kappa")
    if exp == "simulate" and resolved["replications"] < 100:
        raise InvalidValue(f"simulate needs replications >= 100, got {resolved['replications']}")
    if trend is not None and not has_coords:
        raise InvalidValue("trend experiments use coordinates (x, y), not targets")

    raw = {k: repr(v) if isinstance(v, float) else str(v) for k, v in resolved.items()}
    return ExperimentConfig(
        experiment=exp,
        model=model,
        field=fieldkind,
        d=d,
        r=r,
        lam=lam,
        trend=trend,
        shape=shape,
        shapes=shapes,
        tau=tau,
        kappa=kappa,
        x=x,
        y=y,
        replications=resolved["replications"],
        seed=resolved["seed"],
        ratio_bound=resolved["ratio_bound"],
        epsilon=resolved["epsilon"],
        dense_threshold=resolved["dense_threshold"],
        threads=resolved["threads"],
        out=resolved["out"],
        raw=raw,
        defaulted=defaulted,
    )


@dataclass(frozen=True)
class ResultRecord:
    """One flat results.csv row: ordered column names and stringified values."""

    columns: tuple
    values: tuple

    def as_dict(self) -> dict:
        return dict(zip(self.columns, self.values))


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _record(columns, mapping) -> ResultRecord:
    return ResultRecord(columns=tuple(columns), values=tuple(_fmt(mapping.get(c)) for c in columns))


SIMULATE_COLUMNS = (
    "experiment", "shape", "family", "field", "lambda", "trend", "tau", "kappa",
    "x", "y", "u", "v", "estimate", "std_error", "target", "abs_error",
    "replications", "seed", "config_digest",
)

ASCLT_COLUMNS = (
    "experiment", "shape", "family", "field", "lambda", "trend", "tau", "kappa",
    "x", "y", "estimate", "target", "weight_sum", "log_product",
    "vacuous_scales", "seed", "config_digest",
)

CALIBRATE_COLUMNS = (
    "experiment", "shape", "field", "tau", "kappa", "u", "v",
    "achieved_tau", "achieved_kappa", "config_digest",
)

LIMIT_COLUMNS = (
    "experiment", "lambda", "tau", "kappa", "x", "y", "target", "config_digest",
)

DIAGNOSE_COLUMNS = (
    "experiment", "shape", "family", "kappa", "epsilon",
    "q_row", "q_col", "q_diag", "r_row", "r_col", "r_diag",
    "dprime", "dprime_remainder", "comparison", "comparison_remainder",
    "dstar", "dstar_benchmark", "dstar_below",
    "k1", "k2", "m1", "m2", "rate1", "rate2",
    "berman_pass", "dprime_decreasing", "comparison_decreasing", "config_digest",
)

PLOT_COLUMNS = ("n1", "n2", "estimate", "target")


def _base_row(config: ExperimentConfig) -> dict:
    return {
        "experiment": config.experiment,
        "shape": str(config.shape) if config.shape else None,
        "family": config.model.params(),
        "field": config.raw.get("field"),
        "lambda": config.lam.tag(),
        "trend": config.trend.tag if config.trend is not None else "zero",
        "tau": config.tau,
        "kappa": config.kappa,
        "x": config.x,
        "y": config.y,
        "seed": config.seed,
        "config_digest": config.digest(),
    }


def _run_simulate(config: ExperimentConfig):
    jc = config.joint_config()
    report = mc_joint_probability(jc)
    row = _base_row(config)
    row.update(
        u=report.plan.u,
        v=report.plan.v,
        estimate=report.estimate,
        std_error=report.std_error,
        target=report.target,
        abs_error=report.abs_error,
        replications=config.replications,
    )
    return [_record(SIMULATE_COLUMNS, row)], {"plan_tau": report.plan.tau, "plan_kappa": report.plan.kappa}, None


def _default_checkpoints(shape: GridShape):
    ladder = []
    n1, n2 = shape.n1, shape.n2
    while n1 >= 16 and n2 >= 16:
        ladder.append(GridShape(n1, n2))
        n1, n2 = n1 // 2, n2 // 2
    if not ladder or ladder[0] != shape:
        ladder.append(shape)
    ladder = [s for s in ladder if s.n1 >= 3 and s.n2 >= 3]
    return tuple(sorted(set(ladder), key=lambda s: s.ncells))


def _run_asclt(config: ExperimentConfig):
    jc = config.joint_config()
    checkpoints = config.shapes or _default_checkpoints(config.shape)
    trace = asclt_trace(jc, checkpoints)
    target = jc.target()
    grids = level_grids(jc)
    ws, lp = weight_normalizer(config.shape)
    final = trace[-1][1] if trace and trace[-1][0] == config.shape else None
    if final is None:
        final = asclt_trace(jc, [config.shape])[0][1]
    row = _base_row(config)
    row.update(
        estimate=final,
        target=target,
        weight_sum=ws,
        log_product=lp,
        vacuous_scales=max(grids.vacuous_u, grids.vacuous_v),
    )
    plot_rows = [
        _record(PLOT_COLUMNS, {"n1": s.n1, "n2": s.n2, "estimate": est, "target": target})
        for s, est in trace
    ]
    extra = {
        "ratio_bound": config.ratio_bound,
        "vacuous_scales_u": grids.vacuous_u,
        "vacuous_scales_v": grids.vacuous_v,
    }
    return [_record(ASCLT_COLUMNS, row)], extra, plot_rows


def _run_calibrate(config: ExperimentConfig):
    jc = config.joint_config()
    tf = jc.tailfn()
    plan = make_plan(tf, config.shape, config.tau, config.kappa)
    n = config.shape.ncells
    achieved_tau = n * float(tail(tf, plan.u))
    achieved_kappa = n * float(tail(tf, plan.v))
    row = _base_row(config)
    row.update(u=plan.u, v=plan.v, achieved_tau=achieved_tau, achieved_kappa=achieved_kappa)
    payload = {
        "u": plan.u,
        "v": plan.v,
        "achieved_tau": achieved_tau,
        "achieved_kappa": achieved_kappa,
    }
    print(json.dumps(payload, sort_keys=True))
    return [_record(CALIBRATE_COLUMNS, row)], payload, None


def _run_limit(config: ExperimentConfig):
    if config.tau is not None:
        value = limit_value(config.lam, kappa=config.kappa, tau=config.tau)
    else:
        value = gumbel_joint_limit(config.lam, config.x, config.y)
    row = _base_row(config)
    row.update(target=value)
    print(json.dumps({"limit": value}, sort_keys=True))
    return [_record(LIMIT_COLUMNS, row)], {"limit": value}, None


def _run_diagnose(config: ExperimentConfig):
    shapes = config.shapes
    kappa = config.kappa
    tau = config.tau if config.tau is not None else kappa
    berman = berman_check(config.model, shapes, epsilon=config.epsilon)
    rows = []
    dvals, cvals = [], []
    prev_shape = None
    prev_plan = None
    for i, s in enumerate(shapes):
        plan = make_plan(_tailfn_for(config), s, tau, kappa)
        part = make_partition(s)
        dp = dprime_sum(config.model, plan, part)
        cb = comparison_bound(config.model, plan)
        dvals.append(dp.value)
        cvals.append(cb.value)
        b = berman.rows[i]
        row = _base_row(config)
        row.update(
            shape=str(s),
            kappa=kappa,
            epsilon=config.epsilon,
            q_row=b.q_row, q_col=b.q_col, q_diag=b.q_diag,
            r_row=b.r_row, r_col=b.r_col, r_diag=b.r_diag,
            dprime=dp.value, dprime_remainder=dp.remainder_bound,
            comparison=cb.value, comparison_remainder=cb.remainder_bound,
            k1=part.k1, k2=part.k2, m1=part.m1, m2=part.m2,
            rate1=part.rates[0], rate2=part.rates[1],
        )
        if prev_shape is not None:
            ds = dstar_bound(config.model, prev_shape, s, prev_plan, plan, epsilon=config.epsilon)
            row.update(dstar=ds.value, dstar_benchmark=ds.benchmark, dstar_below=ds.below_benchmark)
        rows.append(row)
        prev_shape, prev_plan = s, plan
    dprime_trend = ConditionReport.from_values("dprime", shapes, dvals)
    comp_trend = ConditionReport.from_values("comparison", shapes, cvals)
    for row in rows:
        row.update(
            berman_pass=berman.passed,
            dprime_decreasing=dprime_trend.decreasing,
            comparison_decreasing=comp_trend.decreasing,
        )
    records = [_record(DIAGNOSE_COLUMNS, row) for row in rows]
    extra = {
        "berman_pass": berman.passed,
        "dprime_decreasing": dprime_trend.decreasing,
        "comparison_decreasing": comp_trend.decreasing,
    }
    return records, extra, None


def _tailfn_for(config: ExperimentConfig) -> TailFunction:
    if config.field == "gaussian":
        return TailFunction.gaussian()
    if config.field == "chi":
        return TailFunction.chi(config.d)
    return TailFunction.orderstat(config.d, config.r)


_RUNNERS = {
    "simulate": _run_simulate,
    "asclt": _run_asclt,
    "calibrate": _run_calibrate,
    "limit": _run_limit,
    "diagnose": _run_diagnose,
}


def _write_csv(path: Path, records) -> None:
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
            writer.writerow(records[0].columns)
            for rec in records:
                writer.writerow(rec.values)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def run_experiment(
    config: ExperimentConfig,
    out_dir=None,
    seed: Optional[int] = None,
    threads: Optional[int] = None,
):
    """Run one configured experiment and persist its outputs.

    Returns the list of :class:`ResultRecord` rows written to results.csv.
    Everything in results.csv and plot.csv is a pure function of
    (config digest, master seed); wall time lives only in summary.json.
    """
    if seed is not None:
        config.raw["seed"] = str(seed)
        config.seed = seed
    if threads is not None:
        config.threads = threads
    out = Path(out_dir if out_dir is not None else config.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create output directory {out}: {exc}") from exc

    t0 = time.perf_counter()
    records, extra, plot_rows = _RUNNERS[config.experiment](config)
    wall = time.perf_counter() - t0

    _write_csv(out / "results.csv", records)
    if plot_rows:
        _write_csv(out / "plot.csv", plot_rows)
    summary = {
        "experiment": config.experiment,
        "config": dict(sorted(config.raw.items())),
        "defaulted_keys": sorted(config.defaulted),
        "config_digest": config.digest(),
        "library_version": __version__,
        "wall_time_seconds": wall,
        "rows": [rec.as_dict() for rec in records],
    }
    summary.update(extra)
    try:
        with open(out / "summary.json", "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise IoError(f"cannot write summary.json: {exc}") from exc
    return records


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fieldmax",
        description="Joint maxima of 2D random fields under random missing observations",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run a {name} experiment")
        p.add_argument("--config", required=True, help="path to a key = value config file")
        p.add_argument("--out", default=None, help="output directory (default: config 'out')")
        p.add_argument("--seed", type=int, default=None, help="override the master seed")
        p.add_argument("--threads", type=int, default=None, help="worker hint, recorded in the summary")
    args = parser.parse_args(argv)
    try:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise IoError(f"cannot read config {args.config}: {exc}") from exc
        config = parse_config(text, experiment=args.command)
        run_experiment(config, out_dir=args.out, seed=args.seed, threads=args.threads)
    except FieldmaxError as exc:
        print(
            json.dumps(
                {"error": type(exc).__name__, "message": str(exc)}, sort_keys=True
            ),
            file=sys.stderr,
        )
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
