"""Command-line entry point: ``gibbstree <command> [options]``.

Parameters come from an optional JSON config file (``--config``); flags
given on the command line override keys from the file. Output goes to
``--out`` (written atomically) or stdout. Exit status is 0 on success, 2
for invalid input, 1 for runtime failures.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from . import criticality, dynamics, manifold, moments, sampler, trees
from .errors import (
    DomainError,
    GibbsTreeError,
    InvalidDistributionError,
    SeriesOrderError,
    SpinDecodeError,
)
from .offspring import OffspringDistribution, validate

COMMANDS = ("validate", "orbit", "phase", "critical", "series", "asymptotics", "moments", "enumerate", "fkg", "sample")
CONFIG_KEYS = {"p", "b", "x", "n", "n_max", "seed", "order", "out", "format", "reps"}
EXIT_OK, EXIT_RUNTIME, EXIT_INVALID = 0, 1, 2


class ConfigError(ValueError):
    pass


# -- emission ------------------------------------------------------------------


def fmt_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _json_value(obj: Any) -> str:
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(bool(obj) if obj is not None else None)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return json.dumps(str(fmt_float(x)))
        return fmt_float(x)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        items = (f"{json.dumps(str(k))}: {_json_value(v)}" for k, v in obj.items())
        return "{" + ", ".join(items) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_json_value(v) for v in obj) + "]"
    raise TypeError(f"cannot emit {type(obj).__name__}")


def to_json(obj: Any) -> str:
    return _json_value(obj) + "\n"


def _cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return fmt_float(v)
    return str(v)


def to_csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_cell(v) for v in row) + "\n")
    return buf.getvalue()


def to_records_json(header: Sequence[str], rows) -> str:
    return to_json([dict(zip(header, row)) for row in rows])


def write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- configuration -------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    p: tuple[float, ...] | None = None
    b: float | None = None
    x: int = 2
    n: int | None = None
    seed: int = 0
    order: int = 30
    out: str | None = None
    format: str | None = None
    reps: int | None = None

    @property
    def dist(self) -> OffspringDistribution:
        if self.p is None:
            raise ConfigError("missing offspring distribution 'p'")
        return OffspringDistribution(self.p)

    def need(self, name: str):
        value = getattr(self, name)
        if value is None:
            raise ConfigError(f"command needs '{name}'")
        return value


def _parse_p(value) -> tuple[float, ...]:
    if isinstance(value, str):
        parts = [s for s in value.replace(" ", "").split(",") if s]
    elif isinstance(value, (list, tuple)):
        parts = list(value)
    else:
        raise ConfigError("'p' must be a list of numbers or a comma-separated string")
    try:
        return tuple(float(s) for s in parts)
    except (TypeError, ValueError):
        raise ConfigError(f"'p' has a non-numeric entry: {value!r}") from None


def load_config_file(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}:1: config must be a JSON object")
    unknown = sorted(set(data) - CONFIG_KEYS)
    if unknown:
        lines = text.splitlines()
        where = []
        for key in unknown:
            lineno = next((i + 1 for i, line in enumerate(lines) if f'"{key}"' in line), 1)
            where.append(f"{path}:{lineno}: unknown key '{key}'")
        raise ConfigError("\n".join(where))
    return data


def _typed(key: str, value, kind):
    if value is None:
        return None
    try:
        if kind is int:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        return kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"'{key}' must be {kind.__name__}, got {value!r}") from None


def build_config(args: argparse.Namespace) -> RunConfig:
    """Merge the config file with command-line flags; flags win."""
    merged = load_config_file(args.config) if args.config else {}
    for key in ("p", "b", "x", "n", "seed", "order", "out", "format", "reps"):
        flag = getattr(args, key, None)
        if flag is not None:
            merged[key] = flag
    if "n_max" in merged:
        if "n" in merged and merged["n"] != merged["n_max"]:
            raise ConfigError("'n' and 'n_max' disagree")
        merged["n"] = merged.pop("n_max")
    fmt = merged.get("format")
    if fmt is not None and fmt not in ("csv", "json"):
        raise ConfigError(f"'format' must be csv or json, got {fmt!r}")
    cfg = RunConfig(
        p=_parse_p(merged["p"]) if "p" in merged else None,
        b=_typed("b", merged.get("b"), float),
        x=_typed("x", merged.get("x", 2), int),
        n=_typed("n", merged.get("n"), int),
        seed=_typed("seed", merged.get("seed", 0), int),
        order=_typed("order", merged.get("order", 30), int),
        out=merged.get("out"),
        format=fmt,
        reps=_typed("reps", merged.get("reps"), int),
    )
    if cfg.x < 1:
        raise ConfigError("'x' must be a positive integer")
    if cfg.n is not None and cfg.n < 0:
        raise ConfigError("'n' must be non-negative")
    if cfg.reps is not None and cfg.reps < 1:
        raise ConfigError("'reps' must be positive")
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError("'seed' must fit in 64 unsigned bits")
    return cfg


# -- commands --------------------------------------------------------------------


@dataclass
class Result:
    """A table (header + rows), a JSON object, or plain text, plus an optional summary."""

    header: Sequence[str] | None = None
    rows: list | None = None
    obj: Any = None
    text: str | None = None
    summary: dict | None = None
    status: int = EXIT_OK

    def render(self, fmt: str | None) -> str:
        if self.text is not None:
            return self.text
        if self.header is not None:
            if fmt == "json":
                return to_records_json(self.header, self.rows)
            return to_csv(self.header, self.rows)
        return to_json(self.obj)


def cmd_validate(cfg: RunConfig) -> Result:
    report = validate(cfg.dist)
    return Result(obj=report.as_dict(), status=EXIT_OK if report.ok else EXIT_INVALID)


def cmd_orbit(cfg: RunConfig) -> Result:
    dist, n = cfg.dist, cfg.need("n")
    b = cfg.need("b")
    orbit = dynamics.iterate_orbit(dist, b, n + 1, stop_on_convergence=False)
    fixed = criticality.find_fixed_points(dist, b)
    rows = []
    for k in range(len(orbit) - 1):
        u, v = float(orbit.u[k + 1]), float(orbit.v[k + 1])
        gaps = (fixed[0].u - u, fixed[0].v - v) if fixed else (None, None)
        rows.append((k, u, v, *gaps))
    summary = None
    if orbit.divergent:
        summary = {"diverged_at_n": orbit.divergent_at - 1, "threshold": dynamics.DIVERGENCE_THRESHOLD}
    return Result(header=("n", "xi1", "xi2", "gap1", "gap2"), rows=rows, summary=summary)


def cmd_phase(cfg: RunConfig) -> Result:
    phase = criticality.classify_phase(cfg.dist, cfg.need("b"))
    if cfg.format == "json":
        return Result(obj={"phase": phase.value, "b": cfg.b})
    return Result(text=phase.value + "\n")


def _spectral_dict(dist, cp) -> dict:
    if cp.boundary or not dist.p2 > 0:
        return {}
    sd = manifold.spectral_decomposition(dist, cp)
    gu, gv = sd.gap_limits
    return {
        "lambda2": sd.lambda2, "a": sd.a, "c": sd.c, "g2": sd.g2,
        "alpha_prime": sd.alpha_prime, "gamma_prime": sd.gamma_prime,
        "u_gap_limit": gu, "v_gap_limit": gv,
    }


def cmd_critical(cfg: RunConfig) -> Result:
    dist = cfg.dist
    cp = criticality.find_critical_point(dist)
    out = cp.as_dict()
    out.update(_spectral_dict(dist, cp))
    return Result(obj=out)


def cmd_series(cfg: RunConfig) -> Result:
    dist = cfg.dist
    fp = criticality.lagrange_fixed_point_series(dist, cfg.order)
    try:
        cs = criticality.lagrange_vc_series(dist, cfg.order)
    except SeriesOrderError:
        cs = None
    rows = []
    for k in range(cfg.order + 1):
        rows.append((
            k, fp.z[k], fp.w[k],
            cs.z[k] if cs else None, cs.u[k] if cs else None,
        ))
    summary = None
    if cfg.b is not None:
        u, v = fp.evaluate(cfg.b)
        summary = {"b": cfg.b, "u_series": u, "v_series": v}
    return Result(header=("degree", "z", "w", "z_c", "u_c"), rows=rows, summary=summary)


def cmd_asymptotics(cfg: RunConfig) -> Result:
    """Checkpoint table at powers of two up to ``n``, plus the predicted limits."""
    dist = cfg.dist
    n = cfg.n if cfg.n is not None else 100_000
    cp = criticality.find_critical_point(dist)
    sd = manifold.spectral_decomposition(dist, cp)
    orbit = manifold.critical_orbit(dist, cp, n)
    tr = manifold.theta_rho_diagnostics(dist, cp, n, sd)
    checkpoints = [2**k for k in range(1, n.bit_length()) if 2**k > 2 * (tr.n0 + 1)] + [n]
    rows = []
    for j in sorted(set(checkpoints)):
        if j >= n:
            j = n
        rows.append((
            j,
            j * (cp.u_c - float(orbit.u[j])),
            j * (cp.v_c - float(orbit.v[j])),
            j * float(tr.theta[j - tr.n0]),
            tr.log_rho_at(j - 1),
            tr.rho_exponent(j - 1) if (j - 1) // 2 > tr.n0 else None,
        ))
    gu, gv = sd.gap_limits
    summary = {
        "b_c": cp.b_c, "u_c": cp.u_c, "v_c": cp.v_c, "a": sd.a, "g2": sd.g2, "lambda2": sd.lambda2,
        "u_gap_limit": gu, "v_gap_limit": gv, "theta_limit": tr.theta_limit,
        "rho_exponent_expected": tr.rho_exponent_expected, "n0": tr.n0,
    }
    header = ("n", "n_u_gap", "n_v_gap", "j_theta", "log_rho_product", "rho_exponent")
    return Result(header=header, rows=rows, summary=summary)


def cmd_moments(cfg: RunConfig) -> Result:
    dist = cfg.dist
    n = cfg.need("n")
    b = cfg.b if cfg.b is not None else criticality.find_critical_point(dist).b_c
    header = ("n", "EL1", "EQ1", "EN1", "EL2", "EQ2", "EN2", "n2EN1", "n2EN2")
    rows = [tuple(r.as_row()[h] for h in header) for r in moments.moment_trajectory(dist, b, n)]
    return Result(header=header, rows=rows, summary={"b": b})


def cmd_enumerate(cfg: RunConfig) -> Result:
    dist = cfg.dist
    n, b = cfg.need("n"), cfg.need("b")
    gd = trees.gibbs_distribution(dist, b, cfg.x, n)
    tab = gd.table
    probs = gd.probabilities
    rows = []
    for i in range(len(tab)):
        seq = " ".join(str(v) for v in tab.tree(i).neveu_sequence())
        rows.append((i, seq, gd.gw[i], gd.H[i], probs[i]))
    return Result(
        header=("index", "neveu", "gw_weight", "H", "probability"),
        rows=rows,
        summary={"trees": len(tab), "Xi": gd.Xi, "b": b, "x": cfg.x, "n": n},
    )


def cmd_fkg(cfg: RunConfig) -> Result:
    dist = cfg.dist
    n, b = cfg.need("n"), cfg.need("b")
    trials = cfg.reps or 100
    table = trees.TreeTable.build(dist.K, n)
    phi = trees.InteractionPhi.canonical(dist.K)
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    width = len(table.labels)
    rows = []
    for t in range(trials):
        f = trees.random_ramp_function(width, dist.K, rng)
        g = trees.random_ramp_function(width, dist.K, rng)
        rows.append((t, trees.fkg_covariance(dist, b, cfg.x, n, phi, f, g, table=table)))
    cmin = min(c for _, c in rows)
    return Result(
        header=("trial", "covariance"),
        rows=rows,
        summary={"trials": trials, "min_covariance": cmin, "passed": cmin >= -1e-12},
    )


def cmd_sample(cfg: RunConfig) -> Result:
    dist = cfg.dist
    n, b = cfg.need("n"), cfg.need("b")
    stats = sampler.monte_carlo_stats(dist, b, cfg.x, n, cfg.reps or 1000, cfg.seed)
    rows = [(r, int(v), int(v == 0)) for r, v in enumerate(stats.n_values)]
    return Result(header=("replicate", "N_n", "extinct"), rows=rows, summary=stats.summary())


HANDLERS = {
    "validate": cmd_validate,
    "orbit": cmd_orbit,
    "phase": cmd_phase,
    "critical": cmd_critical,
    "series": cmd_series,
    "asymptotics": cmd_asymptotics,
    "moments": cmd_moments,
    "enumerate": cmd_enumerate,
    "fkg": cmd_fkg,
    "sample": cmd_sample,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gibbstree", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="JSON config file; flags override its keys")
    parser.add_argument("--p", help="offspring probabilities, comma separated (p0,p1,...)")
    parser.add_argument("--b", type=float, help="tilting factor b >= 1")
    parser.add_argument("--x", type=int, help="boundary class of the root's virtual parent (default 2)")
    parser.add_argument("--n", type=int, help="depth n (or n_max for orbit/moments/asymptotics)")
    parser.add_argument("--order", type=int, help="series order (default 30)")
    parser.add_argument("--seed", type=int, help="64-bit master seed (default 0)")
    parser.add_argument("--reps", type=int, help="replicates for sample, trials for fkg")
    parser.add_argument("--out", help="output path; written atomically")
    parser.add_argument("--format", choices=("csv", "json"), help="table format (default csv)")
    return parser


def run(command: str, cfg: RunConfig, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        result = HANDLERS[command](cfg)
    except (ConfigError, InvalidDistributionError, DomainError, SeriesOrderError, SpinDecodeError) as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_INVALID
    except (GibbsTreeError, ArithmeticError, RuntimeError, AssertionError) as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_RUNTIME
    text = result.render(cfg.format)
    if cfg.out:
        write_atomic(cfg.out, text)
        if result.summary is not None:
            write_atomic(cfg.out + ".summary.json", to_json(result.summary))
    else:
        stdout.write(text)
        if result.summary is not None:
            stderr.write(to_json(result.summary))
    return result.status


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = build_config(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return run(args.command, cfg)


if __name__ == "__main__":
    sys.exit(main())
