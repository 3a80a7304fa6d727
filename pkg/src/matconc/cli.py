"""Command-line front end.

Four subcommands:

``matconc verify``
    Run Monte Carlo coverage checks from a JSON config (or the built-in
    default suite) and report PASS/FAIL per bound.
``matconc test``
    Run the sequential matrix-mean test over a stream of observations
    (one JSON matrix per line), emitting a decision frame per step.
``matconc power-compare``
    Simulate the matrix-threshold and scalar-threshold versions of the
    sequential test side by side and report rejection rates and mean
    stopping times.
``matconc falsify``
    Randomized search for counterexamples to the trace p-th moment
    contraction ratio; prints the worst instance found, never a proof.

Exit codes: 0 success (and all verifications passed), 1 at least one
coverage FAIL verdict, 2 configuration or input error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import martingales as mg
from . import rng as _rng
from . import scalar_e as se
from . import symmat as sm
from .errors import DomainError, MatconcError
from .errors import ConfigError
from .generators import GENERATOR_KINDS, GeneratorSpec
from .randomizers import ScalarRandomizer
from .simulator import (
    McConfig,
    falsify_conjecture,
    run_coverage,
    run_default_suite,
)

__all__ = ["main"]


# ---------------------------------------------------------------------------
# JSON with stable 17-significant-digit floats


def _fmt_json(obj, indent=0, compact=False) -> str:
    pad = "  " * indent
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "NaN"
        if math.isinf(x):
            return "Infinity" if x > 0 else "-Infinity"
        return format(x, ".17g")
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _fmt_json(obj.tolist(), indent, compact)
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if compact:
            return "[" + ", ".join(_fmt_json(v, 0, True) for v in obj) + "]"
        inner = ",\n".join(
            "  " * (indent + 1) + _fmt_json(v, indent + 1) for v in obj
        )
        return "[\n" + inner + "\n" + pad + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        if compact:
            items = [
                json.dumps(str(k)) + ": " + _fmt_json(v, 0, True)
                for k, v in obj.items()
            ]
            return "{" + ", ".join(items) + "}"
        items = []
        for key, val in obj.items():
            items.append(
                "  " * (indent + 1) + json.dumps(str(key)) + ": " + _fmt_json(val, indent + 1)
            )
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    raise ConfigError(f"cannot serialize value of type {type(obj).__name__}")


def _dump_json(obj) -> str:
    return _fmt_json(obj) + "\n"


def _write_atomic(path: str | None, text: str) -> None:
    """Write output all-or-nothing; partial files never appear."""
    if path is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".matconc-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    return cfg


def _generator_from_json(obj) -> GeneratorSpec:
    if not isinstance(obj, dict):
        raise ConfigError("generator must be a JSON object")
    known = {
        "kind",
        "dim",
        "m",
        "c",
        "b",
        "d_dir",
        "tail_index",
        "tau",
        "scale",
        "a",
        "seed",
    }
    extra = set(obj) - known
    if extra:
        raise ConfigError(f"unknown generator fields: {sorted(extra)}")
    if "kind" not in obj or "dim" not in obj:
        raise ConfigError("generator needs at least 'kind' and 'dim'")
    kwargs = {"kind": obj["kind"], "dim": int(obj["dim"])}
    for field in ("m", "c", "b", "d_dir", "a"):
        if obj.get(field) is not None:
            kwargs[field] = sm.parse_matrix_json(obj[field])
    for field in ("tail_index", "tau", "scale"):
        if obj.get(field) is not None:
            kwargs[field] = float(obj[field])
    if obj.get("seed") is not None:
        kwargs["seed"] = int(obj["seed"])
    return GeneratorSpec(**kwargs)


# ---------------------------------------------------------------------------
# verify


def _cmd_verify(args) -> int:
    cfg = _load_config(args.config) if args.config else {"suite": "default"}
    seed = args.seed
    reports = []
    if "runs" in cfg:
        runs = cfg["runs"]
        if not isinstance(runs, list) or not runs:
            raise ConfigError("'runs' must be a non-empty list")
        for i, run in enumerate(runs):
            if not isinstance(run, dict):
                raise ConfigError(f"run {i}: must be a JSON object")
            if "bound" not in run or "generator" not in run:
                raise ConfigError(f"run {i}: needs 'bound' and 'generator'")
            gen = _generator_from_json(run["generator"])
            mc = McConfig(
                trials=int(run.get("trials", args.trials or 10_000)),
                horizon=int(run.get("horizon", 200)),
                workers=args.workers,
                base_seed=seed,
            )
            params = run.get("params")
            if params is not None and not isinstance(params, dict):
                raise ConfigError(f"run {i}: 'params' must be an object")
            reports.append(run_coverage(run["bound"], gen, mc, params))
    elif cfg.get("suite", "default") == "default":
        dims = cfg.get("dims", [1, 2, 5])
        if not isinstance(dims, list) or not all(
            isinstance(d, int) and d >= 1 for d in dims
        ):
            raise ConfigError("'dims' must be a list of positive integers")
        reports = run_default_suite(
            dims=tuple(dims),
            trials_fixed=int(cfg.get("trials_fixed", args.trials or 100_000)),
            trials_path=int(cfg.get("trials_path", max(1, (args.trials or 10_000)))),
            horizon=int(cfg.get("horizon", 200)),
            workers=args.workers,
            base_seed=seed,
        )
    else:
        raise ConfigError(f"unknown suite {cfg.get('suite')!r}")
    failures = 0
    for rep in reports:
        status = "PASS" if rep.verdict else "FAIL"
        vac = " (vacuous)" if rep.vacuous else ""
        print(
            f"{status} {rep.name}: freq {rep.event_freq:.6f} "
            f"vs bound {rep.stated_bound:.6f}{vac}"
        )
        failures += 0 if rep.verdict else 1
    if args.output:
        _write_atomic(args.output, _dump_json([r.to_dict() for r in reports]))
    print(f"{len(reports) - failures}/{len(reports)} coverage checks passed")
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# test


def _iter_frames(path: str):
    """Yield (line_number, matrix) from a stream of one-JSON-per-line."""
    try:
        fh = open(path) if path != "-" else sys.stdin
    except OSError as exc:
        raise ConfigError(f"cannot read data {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"data line {lineno}: invalid JSON ({exc.msg})") from exc
            if isinstance(obj, dict):
                if "x" not in obj:
                    raise ConfigError(f"data line {lineno}: frame object needs key 'x'")
                obj = obj["x"]
            try:
                yield lineno, sm.parse_matrix_json(obj)
            except (DomainError, ConfigError) as exc:
                raise ConfigError(f"data line {lineno}: {exc}") from exc


def _gamma_fn(raw):
    if raw is None:
        return mg.default_gamma_schedule(1.0)
    if isinstance(raw, (int, float)):
        g = float(raw)
        if g <= 0.0:
            raise ConfigError(f"gamma must be positive, got {g}")
        return lambda n: g
    if isinstance(raw, dict) and "scale" in raw:
        return mg.default_gamma_schedule(float(raw["scale"]))
    raise ConfigError("'gamma' must be a positive number or {\"scale\": s}")


def _cmd_test(args) -> int:
    cfg = _load_config(args.config)
    mode = cfg.get("mode", "matrix")
    if mode not in ("matrix", "scalar"):
        raise ConfigError(f"mode must be 'matrix' or 'scalar', got {mode!r}")
    alpha = float(cfg.get("alpha", 0.05))
    if "m" not in cfg:
        raise ConfigError("config needs 'm', the hypothesized mean matrix")
    m = sm.parse_matrix_json(cfg["m"])
    d = m.shape[0]
    gamma_fn = _gamma_fn(cfg.get("gamma"))
    rand_cfg = cfg.get("randomizer")
    randomizer = None
    if rand_cfg is not None:
        if not isinstance(rand_cfg, dict):
            raise ConfigError("'randomizer' must be an object")
        kind = rand_cfg.get("kind", "uniform01")
        randomizer = ScalarRandomizer(
            kind, seed=rand_cfg.get("seed", args.seed)
        )
    frames_out = []
    rejected_at = None

    if mode == "matrix":
        builder = cfg.get("builder", "SELF_NORMALIZED")
        if builder not in mg.BUILDER_KINDS:
            raise ConfigError(
                f"builder must be one of {mg.BUILDER_KINDS}, got {builder!r}"
            )
        kwargs = {}
        if builder == "SELF_NORMALIZED":
            if "v" not in cfg:
                raise ConfigError("SELF_NORMALIZED needs 'v', the variance bound")
            kwargs["v"] = sm.parse_matrix_json(cfg["v"])
        elif builder == "BETTING":
            if "b" not in cfg:
                raise ConfigError("BETTING needs 'b', the upper bound matrix")
            kwargs["b"] = sm.parse_matrix_json(cfg["b"])
        elif builder == "MGF":
            row = cfg.get("mgf")
            if not isinstance(row, dict) or "kind" not in row or "matrix" not in row:
                raise ConfigError("MGF needs 'mgf': {\"kind\":..., \"matrix\":...}")
            from .fixed_bounds import MgfSpec

            kwargs["mgf"] = MgfSpec(row["kind"], sm.parse_matrix_json(row["matrix"]))
        if "a" in cfg:
            a_thresh = sm.parse_matrix_json(cfg["a"])
        else:
            a_thresh = (d / alpha) * np.eye(d)
        tc = se.TestConfig(alpha=alpha, a_thresh=a_thresh, randomizer=randomizer)
        state = mg.MatSupermartingaleState.start(d)
        n = 0
        for lineno, x in _iter_frames(args.data):
            if x.shape[0] != d:
                raise ConfigError(
                    f"data line {lineno}: dimension {x.shape[0]} != mean dimension {d}"
                )
            n += 1
            e_fac, a_fac = mg.build_factors(builder, x, m, gamma_fn(n), **kwargs)
            state = state.step(e_fac, a_fac)
            y = state.value()
            reject = se.matrix_test_decide(y, tc.a_thresh)
            frames_out.append(
                {"n": n, "trace": sm.trace(y), "reject": bool(reject)}
            )
            if reject and rejected_at is None:
                rejected_at = n
                break
        if rejected_at is None and randomizer is not None and n > 0:
            u = randomizer.sample()
            y = state.value()
            root = sm.mat_sqrt(tc.a_thresh)
            if not sm.loewner_leq(y, u * (root @ root)):
                rejected_at = n
            frames_out.append({"n": n, "u": u, "reject": rejected_at is not None})
    else:
        if "v" not in cfg:
            raise ConfigError("scalar mode needs 'v', the variance bound")
        v = sm.parse_matrix_json(cfg["v"])
        state = se.TraceExpState.start(d)
        n = 0
        for lineno, x in _iter_frames(args.data):
            if x.shape[0] != d:
                raise ConfigError(
                    f"data line {lineno}: dimension {x.shape[0]} != mean dimension {d}"
                )
            n += 1
            state = se.sn_process_step(state, x, m, v, gamma_fn(n))
            val = state.log_value()
            reject = val >= math.log(d / alpha)
            frames_out.append({"n": n, "log_value": val, "reject": bool(reject)})
            if reject and rejected_at is None:
                rejected_at = n
                break
        if rejected_at is None and randomizer is not None and n > 0:
            u = randomizer.sample()
            if se.ursn_event(state, alpha, u):
                rejected_at = n
            frames_out.append({"n": n, "u": u, "reject": rejected_at is not None})

    summary = {
        "mode": mode,
        "alpha": alpha,
        "frames": len([f for f in frames_out if "n" in f]),
        "decision": "reject" if rejected_at is not None else "continue",
        "rejected_at": rejected_at,
    }
    # one JSON record per line so the stream stays greppable/splittable
    lines = [_fmt_json(f, compact=True) for f in frames_out] + [
        _fmt_json(summary, compact=True)
    ]
    _write_atomic(args.output, "\n".join(lines) + "\n")
    return 0


# ---------------------------------------------------------------------------
# power-compare


def _cmd_power_compare(args) -> int:
    cfg = _load_config(args.config)
    if "generator" not in cfg:
        raise ConfigError("config needs 'generator'")
    gen = _generator_from_json(cfg["generator"])
    d = gen.dim
    alpha = float(cfg.get("alpha", 0.05))
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must be in (0,1), got {alpha}")
    trials = int(cfg.get("trials", 2000))
    horizon = int(cfg.get("horizon", 200))
    if trials < 1 or horizon < 1:
        raise ConfigError("trials and horizon must be positive")
    gamma_scale = float(cfg.get("gamma_scale", 0.5))
    # the hypothesized mean: the truth plus an optional shift, so
    # shift = 0 measures size and shift != 0 measures power
    m0 = gen.mean()
    if cfg.get("mean_shift") is not None:
        m0 = m0 + sm.parse_matrix_json(cfg["mean_shift"])
    try:
        v = gen.variance()
    except ConfigError as exc:
        raise ConfigError(f"power comparison needs a known variance: {exc}") from exc
    seed = args.seed if args.seed is not None else _rng.default_seed()
    a_thresh = (d / alpha) * np.eye(d)
    log_cross = math.log(d / alpha)
    counts = {"matrix": 0, "scalar": 0}
    stops = {"matrix": 0, "scalar": 0}
    lam_v = max(math.sqrt(sm.lambda_max(v)), 1e-12)
    for t in range(trials):
        g = _rng.substream(seed, 0xC0DE, t)
        xs = gen.sample_path(g, horizon)
        state_m = mg.MatSupermartingaleState.start(d)
        state_s = se.TraceExpState.start(d)
        done_m = done_s = False
        for n in range(1, horizon + 1):
            gamma = gamma_scale / (lam_v * math.sqrt(n))
            x = xs[n - 1]
            if not done_m:
                e_fac, a_fac = mg.build_factors(
                    "SELF_NORMALIZED", x, m0, gamma, v=v
                )
                state_m = state_m.step(e_fac, a_fac)
                if se.matrix_test_decide(state_m.value(), a_thresh):
                    counts["matrix"] += 1
                    stops["matrix"] += n
                    done_m = True
            if not done_s:
                state_s = se.sn_process_step(state_s, x, m0, v, gamma)
                if state_s.log_value() >= log_cross:
                    counts["scalar"] += 1
                    stops["scalar"] += n
                    done_s = True
            if done_m and done_s:
                break
        if not done_m:
            stops["matrix"] += horizon
        if not done_s:
            stops["scalar"] += horizon
    out = {
        "alpha": alpha,
        "trials": trials,
        "horizon": horizon,
        "dim": d,
        "generator": gen.kind,
        "null_is_true": cfg.get("mean_shift") is None,
        "matrix": {
            "reject_rate": counts["matrix"] / trials,
            "mean_stop": stops["matrix"] / trials,
        },
        "scalar": {
            "reject_rate": counts["scalar"] / trials,
            "mean_stop": stops["scalar"] / trials,
        },
        "seed": seed,
    }
    _write_atomic(args.output, _dump_json(out))
    return 0


# ---------------------------------------------------------------------------
# falsify


def _cmd_falsify(args) -> int:
    rec = falsify_conjecture(
        p=args.p,
        d=args.d,
        instances=args.instances,
        trials_per_instance=args.trials_per_instance,
        seed=args.seed,
    )
    _write_atomic(args.output, _dump_json(rec.to_dict()))
    return 0


# ---------------------------------------------------------------------------
# entry point


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="matconc",
        description="Randomized matrix concentration bounds: verification and testing.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--seed",
        type=int,
        default=None,
        help="base seed (default: MATCONC_SEED env var or built-in)",
    )
    common.add_argument(
        "--output", default=None, help="output file (default: stdout); written atomically"
    )

    p_verify = sub.add_parser(
        "verify", parents=[common], help="Monte Carlo coverage checks"
    )
    p_verify.add_argument("--config", default=None, help="JSON run config")
    p_verify.add_argument("--trials", type=int, default=None, help="trials per run")
    p_verify.add_argument("--workers", type=int, default=1, help="parallel workers")
    p_verify.set_defaults(fn=_cmd_verify)

    p_test = sub.add_parser(
        "test", parents=[common], help="sequential matrix-mean test on a data stream"
    )
    p_test.add_argument("--config", required=True, help="JSON test config")
    p_test.add_argument(
        "--data", required=True, help="observations, one JSON matrix per line ('-' for stdin)"
    )
    p_test.set_defaults(fn=_cmd_test)

    p_power = sub.add_parser(
        "power-compare",
        parents=[common],
        help="matrix- vs scalar-threshold sequential test, simulated head to head",
    )
    p_power.add_argument("--config", required=True, help="JSON comparison config")
    p_power.set_defaults(fn=_cmd_power_compare)

    p_fals = sub.add_parser(
        "falsify", parents=[common], help="search for trace-moment ratio counterexamples"
    )
    p_fals.add_argument("--p", type=float, required=True, help="moment order in [1,2]")
    p_fals.add_argument("--d", type=int, required=True, help="matrix dimension")
    p_fals.add_argument("--instances", type=int, default=200)
    p_fals.add_argument("--trials-per-instance", type=int, default=1500)
    p_fals.set_defaults(fn=_cmd_falsify)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except MatconcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
