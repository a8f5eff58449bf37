"""Command-line front end: ``wehrl-witness {witness,scan,field}``.

Exit codes: 0 success, 2 inconclusive headline verdict under ``--strict``,
64 unusable input (bad flags, unparseable state spec, empty ranges),
65 numerical failure (truncation, normalisation, configuration).
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from dataclasses import dataclass, field

import numpy as np
import yaml

from .criteria import INCONCLUSIVE, NumericsConfig, run_witness
from .errors import SpecError, WitnessError
from .fock import Angles
from .gaussian import (
    CovarianceSpec, GaussianQ, gaussian_twisted_grid, local_rotation, local_squeezing,
    mgvt, optimize_squeezing, principal_sigmas, rotate_pm, second_order_criterion,
    tmsv_covariance, twist, gaussian_sm,
)
from .husimi import (
    MEASURE, FockQ, InnerQuadrature, default_twisted_grid, marginalize_pm, parse_sign,
)
from .states import StateSpec, load_state_spec

EXIT_OK = 0
EXIT_INCONCLUSIVE = 2
EXIT_USAGE = 64
EXIT_NUMERIC = 65


def fmt(x):
    """17 significant digits, so every float survives a text round trip."""
    return format(float(x), ".17g")


class _Dumper(yaml.SafeDumper):
    pass


def _float_repr(dumper, value):
    if math.isnan(value):
        text = ".nan"
    elif math.isinf(value):
        text = ".inf" if value > 0 else "-.inf"
    else:
        text = fmt(value)
        if not any(c in text for c in ".en"):
            text += ".0"
    return dumper.represent_scalar("tag:yaml.org,2002:float", text)


_Dumper.add_representer(float, _float_repr)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def dump_yaml(data):
    return yaml.dump(_plain(data), Dumper=_Dumper, sort_keys=False, default_flow_style=False)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _write(text, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _config(args):
    kw = {}
    if getattr(args, "grid_n", None) is not None:
        kw["grid_n"] = args.grid_n
    if getattr(args, "extent", None) is not None:
        kw["extent"] = args.extent
    if getattr(args, "threads", None) is not None:
        kw["threads"] = args.threads
    if getattr(args, "backend", None) is not None:
        kw["backend"] = args.backend
    return NumericsConfig(**kw)


# ------------------------------------------------------------------ witness

def cmd_witness(args):
    spec = load_state_spec(args.state)
    report = run_witness(spec, Angles(args.theta1, args.theta2), _config(args), args.sign)
    _write(dump_yaml(report.to_dict()), args.out)
    if args.strict and INCONCLUSIVE in (report.verdict_weak, report.verdict_strong):
        return EXIT_INCONCLUSIVE
    return EXIT_OK


# ------------------------------------------------------------------ scan

@dataclass
class ScanConfig:
    """One parameter sweep; ``rows`` are the parameter tuples to visit."""

    kind: str
    rows: list
    numerics: NumericsConfig = field(default_factory=NumericsConfig)
    out: str | None = None
    fmt: str = "csv"
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.rows:
            raise SpecError(f"{self.kind}: parameter range is empty", self.kind)


def _linspace(lo, hi, steps, key):
    if steps < 1:
        raise SpecError(f"{key}: steps must be >= 1, got {steps}", key)
    if hi < lo:
        raise SpecError(f"{key}: empty range [{lo}, {hi}]", key)
    if steps == 1:
        return [float(lo)]
    return [float(v) for v in np.linspace(lo, hi, steps)]


def _noon_rows(cfg):
    for (N,) in cfg.rows:
        r = run_witness(StateSpec("noon", {"N": N}), None, cfg.numerics)
        yield {
            "N": N,
            "s_m_plus": r.s_m_plus.value,
            "s_m_minus": r.s_m_minus.value,
            "tail_bound": max(r.s_m_plus.tail_bound, r.s_m_minus.tail_bound),
            "weak_bound": r.weak_bound,
            "strong_bound": r.strong_bound,
            "verdict_weak": r.verdict_weak,
            "verdict_strong": r.verdict_strong,
            "witnessed": r.verdict_strong == "witnessed",
        }


def _cat_rows(cfg):
    for re_alpha, z in cfg.rows:
        r = run_witness(StateSpec("cat", {"alpha": re_alpha, "z": z}), None, cfg.numerics)
        head = r.branches[r.headline_branch]
        yield {
            "re_alpha": re_alpha,
            "z": z,
            "w_value": r.w_value,
            "w_plus": r.branches["plus"].w_value,
            "w_minus": r.branches["minus"].w_value,
            "tail_bound": head.s_m.tail_bound,
            "verdict_weak": r.verdict_weak,
        }


def _tmsv_rows(cfg):
    a = cfg.options.get("squeeze")
    numeric = cfg.options.get("numeric", False)
    for (lam,) in cfg.rows:
        gamma = tmsv_covariance(lam)
        if a is not None:
            gamma = rotate_pm(gamma, local_squeezing(a))
        tm = twist(gamma, "-")
        sr, ss = principal_sigmas(tm)
        so = second_order_criterion(tm.sigma2_r, tm.sigma2_s, tm.cov, 1.0)
        opt = optimize_squeezing(tm.sigma2_r, tm.sigma2_s, tm.cov)
        row = {
            "lambda": lam,
            "sigma_r_minus": math.sqrt(tm.sigma2_r),
            "sigma_s_plus": math.sqrt(tm.sigma2_s),
            "det_V": tm.det_v,
            "mgvt_product": sr * ss,
            "mgvt_witnessed": mgvt(sr, ss),
            "second_order_lhs": so.lhs,
            "second_order_witnessed": so.witnessed,
            "optimized_witnessed": opt.witnessed,
            "gaussian_sm": gaussian_sm(tm),
        }
        if numeric:
            r = run_witness(gamma, None, cfg.numerics, "minus")
            row["s_m_minus"] = r.s_m_minus.value
            row["tail_bound"] = r.s_m_minus.tail_bound
            row["verdict_weak"] = r.verdict_weak
        yield row


_SCANS = {"noon-range": _noon_rows, "cat-grid": _cat_rows, "tmsv-range": _tmsv_rows}


def scan_config(args) -> ScanConfig:
    kind = args.kind
    if kind == "noon-range":
        if args.n_min < 0 or args.n_max < args.n_min:
            raise SpecError(f"noon-range: empty range {args.n_min}..{args.n_max}", "noon-range")
        rows = [(n,) for n in range(args.n_min, args.n_max + 1)]
    elif kind == "cat-grid":
        if any(not 0.0 <= z <= 1.0 for z in args.z):
            raise SpecError("z: values must lie in [0, 1]", "z")
        rows = [(a, z) for a in args.re_alpha for z in args.z]
    else:
        rows = [(lam,) for lam in _linspace(args.lambda_min, args.lambda_max, args.steps, "lambda")]
        if rows[0][0] < 0:
            raise SpecError("lambda: must be >= 0", "lambda")
    opts = {}
    if kind == "tmsv-range":
        opts = {"squeeze": args.squeeze, "numeric": args.numeric}
    return ScanConfig(kind, rows, _config(args), args.out, args.format, opts)


def _cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return fmt(v)
    return str(v)


def run_scan(cfg: ScanConfig):
    rows = list(_SCANS[cfg.kind](cfg))
    if cfg.fmt == "yaml":
        return dump_yaml({"scan": cfg.kind, "rows": rows})
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(rows[0]))
    for row in rows:
        w.writerow([_cell(v) for v in row.values()])
    return buf.getvalue()


def cmd_scan(args):
    cfg = scan_config(args)
    _write(run_scan(cfg), cfg.out)
    return EXIT_OK


# ------------------------------------------------------------------ field

def field_dump(spec, sign, config, angles=None):
    """Sample ``Q+-`` for ``spec`` and return ``(QField2D, csv_text)``."""
    angles = angles or Angles()
    state = spec.build() if isinstance(spec, StateSpec) else spec
    if isinstance(state, CovarianceSpec):
        if not angles.is_zero:
            state = rotate_pm(state, local_rotation(angles.theta1, angles.theta2))
        q4 = GaussianQ(state)
        grid = gaussian_twisted_grid(state, config.grid_n, config.extent)
        inner = q4.inner_quadrature(sign, config.gaussian_nodes)
    else:
        q4 = FockQ(state, angles)
        grid = default_twisted_grid(q4.mean_excitation, config.grid_n, config.extent)
        n_inner = config.inner_nodes if config.inner_nodes is not None else state.dim + 2
        inner = InnerQuadrature.make(config.inner_scheme, n_inner)
    qf = marginalize_pm(q4, sign, grid, inner, backend=config.backend, threads=config.threads)
    g = grid
    name = "plus" if parse_sign(sign) > 0 else "minus"
    pair = ("r_plus", "s_minus") if name == "plus" else ("r_minus", "s_plus")
    lines = [
        f"# branch: {name} ({pair[0]}, {pair[1]})",
        f"# grid: x_min={fmt(g.x_min)} x_max={fmt(g.x_max)} nx={g.nx} "
        f"y_min={fmt(g.y_min)} y_max={fmt(g.y_max)} ny={g.ny}",
        f"# measure: dx dy / (2 pi) = {fmt(MEASURE)} dx dy; composite Simpson in both axes",
        f"# mass: {fmt(qf.mass)}",
        f"# pre_clamp_min: {fmt(qf.pre_clamp_min)}",
        "r_pm,s_mp,q_value",
    ]
    xs, ys, v = g.xs, g.ys, qf.values
    for i in range(g.nx):
        xi = fmt(xs[i])
        lines.extend(f"{xi},{fmt(ys[j])},{fmt(v[i, j])}" for j in range(g.ny))
    return qf, "\n".join(lines) + "\n"


def read_field_csv(path_or_text):
    """Parse a field dump back into ``(header dict, xs, ys, values)``."""
    if "\n" in path_or_text:
        text = path_or_text
    else:
        with open(path_or_text, encoding="utf-8") as fh:
            text = fh.read()
    header = {}
    data = []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].partition(":")
            header[key.strip()] = val.strip()
        elif line and not line.startswith("r_pm"):
            data.append([float(t) for t in line.split(",")])
    arr = np.array(data)
    xs = np.unique(arr[:, 0])
    ys = np.unique(arr[:, 1])
    return header, xs, ys, arr[:, 2].reshape(xs.size, ys.size)


def cmd_field(args):
    spec = load_state_spec(args.state)
    _, text = field_dump(spec, args.sign, _config(args), Angles(args.theta1, args.theta2))
    _write(text, args.out)
    return EXIT_OK


# ------------------------------------------------------------------ parser

def _numerics_flags(p):
    p.add_argument("--grid-n", type=int, default=None, help="outer grid nodes per axis (default 257)")
    p.add_argument("--extent", type=float, default=None, help="outer grid half-width")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: $WEHRL_THREADS or 1)")
    p.add_argument("--backend", choices=("compiled", "python"), default=None)


def build_parser():
    p = _Parser(prog="wehrl-witness", description="Wehrl-entropic entanglement witnesses "
                "for two-mode continuous-variable states.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    w = sub.add_parser("witness", help="evaluate the criteria for one state")
    w.add_argument("--state", required=True, help="YAML state-spec file")
    w.add_argument("--theta1", type=float, default=0.0)
    w.add_argument("--theta2", type=float, default=0.0)
    w.add_argument("--sign", choices=("plus", "minus", "both"), default="both")
    w.add_argument("--out", default=None, help="report path (default stdout)")
    w.add_argument("--strict", action="store_true", help="exit 2 on an inconclusive verdict")
    _numerics_flags(w)
    w.set_defaults(func=cmd_witness)

    s = sub.add_parser("scan", help="parameter sweeps")
    s.add_argument("kind", choices=tuple(_SCANS))
    s.add_argument("--n-min", type=int, default=0)
    s.add_argument("--n-max", type=int, default=15)
    s.add_argument("--re-alpha", type=float, nargs="+", default=[0.25, 0.5, 1.0, 1.5, 2.0, 2.5])
    s.add_argument("--z", type=float, nargs="+", default=[0.0, 0.5, 0.9])
    s.add_argument("--lambda-min", type=float, default=0.0)
    s.add_argument("--lambda-max", type=float, default=1.0)
    s.add_argument("--steps", type=int, default=5)
    s.add_argument("--squeeze", type=float, default=None,
                   help="tmsv-range: apply diag(a, 1/a) to both modes first")
    s.add_argument("--numeric", action="store_true",
                   help="tmsv-range: also compute S_M(Q-) by quadrature")
    s.add_argument("--format", choices=("csv", "yaml"), default="csv")
    s.add_argument("--out", default=None)
    _numerics_flags(s)
    s.set_defaults(func=cmd_scan)

    f = sub.add_parser("field", help="dump a twisted marginal as CSV triplets")
    f.add_argument("--state", required=True)
    f.add_argument("--sign", choices=("plus", "minus"), default="plus")
    f.add_argument("--theta1", type=float, default=0.0)
    f.add_argument("--theta2", type=float, default=0.0)
    f.add_argument("--out", default=None)
    _numerics_flags(f)
    f.set_defaults(func=cmd_field)
    return p


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code
    if getattr(args, "threads", None) is not None and args.threads < 1:
        print("wehrl-witness: error: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except SpecError as exc:
        print(f"wehrl-witness: spec error at '{exc.key}': {exc}", file=sys.stderr)
        return EXIT_USAGE
    except WitnessError as exc:
        stage = getattr(exc, "stage", None) or "input"
        print(f"wehrl-witness: {type(exc).__name__} in stage '{stage}': {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"wehrl-witness: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
