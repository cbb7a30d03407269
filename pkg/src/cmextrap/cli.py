"""Command-line front end.

Subcommands
-----------
powerlaw        fit the worst-case power-law exponent over an eps range
delta-star      tabulate the worst-case discrepancy curve
local           solve the local envelope problem (single offset or sweep)
eig             tabulate eigenfunction values, exact vs asymptotic branch
oracle-compare  spectral solver against the dense collocation oracle
demo-left       the closed-form family showing left extrapolation fails
verify          run the acceptance suite (exit 3 on any failure)

All tabular output is CSV with 12 significant digits (or JSON with
``--format json``); ``--out`` writes to a file instead of stdout.  A JSON
config file may supply any long-option defaults via ``--config``; flags
given on the command line win.  Exit codes: 0 success, 1 usage error,
2 solver failure, 3 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__, acceptance, local, oracle, solver, special
from .grids import spectral_grid_for_solver

_FMT = "%.12g"


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here is exit 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


@dataclasses.dataclass
class RunConfig:
    """Resolved run parameters; round-trips losslessly through JSON."""

    command: str
    x0: float = 2.0
    eps_decades: str = "1e-9:1e-5"
    points_per_decade: int = 2
    eps: float | None = None
    delta: float | None = None
    veps: tuple = ()
    f0: str = "exp"
    slopes: bool = False
    point: str = "2.0"
    mu_max: float = 30.0
    mu_step: float = 0.5
    k_values: tuple = (50.0, 500.0, 5000.0)
    c: float = 0.0
    only: tuple = ()
    as_json: bool = False
    seed: int = acceptance.DEFAULT_SEED
    workers: int = 1
    out: str | None = None
    fmt: str = "csv"

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        data = json.loads(text)
        for key in ("veps", "k_values", "only"):
            if key in data and data[key] is not None:
                data[key] = tuple(data[key])
        return cls(**data)


def _parse_eps_range(spec: str, points_per_decade: int) -> np.ndarray:
    try:
        lo_s, hi_s = spec.split(":")
        lo, hi = float(lo_s), float(hi_s)
    except ValueError:
        raise ValueError(f"malformed eps range {spec!r}; expected LO:HI like 1e-9:1e-5")
    if not (0.0 < lo < hi < 1.0):
        raise ValueError(f"eps range must satisfy 0 < LO < HI < 1, got {spec!r}")
    decades = math.log10(hi / lo)
    n = max(int(round(decades * points_per_decade)) + 1, 2)
    return np.geomspace(lo, hi, n)


def _emit(rows, columns, cfg: RunConfig):
    """Write rows (list of dicts) as CSV or JSON to cfg.out or stdout."""
    if cfg.fmt == "json":
        text = json.dumps(rows, indent=2)
    else:
        import io

        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([
                (_FMT % v) if isinstance(v, float) else v for v in (row[c] for c in columns)
            ])
        text = buf.getvalue()
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _parse_f0(spec: str) -> local.CmfMeasure:
    if spec == "exp":
        return local.CmfMeasure.exponential()
    try:
        pairs = json.loads(spec)
        return local.CmfMeasure.from_pairs(pairs)
    except (json.JSONDecodeError, TypeError, ValueError, IndexError) as exc:
        raise ValueError(
            f"--f0 must be 'exp' or a JSON list of [t, a] pairs; got {spec!r}: {exc}"
        )


def cmd_powerlaw(cfg: RunConfig) -> int:
    eps = _parse_eps_range(cfg.eps_decades, cfg.points_per_decade)
    grid = spectral_grid_for_solver(cfg.x0, 1e-16)
    rows = _curve_rows(cfg.x0, eps, grid, cfg.workers)
    fit = np.polyfit(np.log(eps), np.log([r["delta_star"] for r in rows]), 1)
    _emit(rows, ["eps", "veps", "delta_star", "asymptotic_value", "ratio", "local_slope"], cfg)
    target = special.gamma_star(cfg.x0)
    print(f"\nfitted slope = {fit[0]:.6f}   reference exponent = {target:.6f}   "
          f"difference = {abs(fit[0]-target):.2e}", file=sys.stderr)
    return 0


def _curve_rows(x0, eps, grid, workers):
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            sols = list(pool.map(lambda e: solver.match_veps(x0, e, grid), eps))
    else:
        sols = [solver.match_veps(x0, e, grid) for e in eps]
    delta = np.array([s.delta_star for s in sols])
    slopes = np.gradient(np.log(delta), np.log(eps))
    rows = []
    for e, s, d, sl in zip(eps, sols, delta, slopes):
        asym = solver.delta_star_asymptotic(x0, e)
        rows.append({
            "eps": float(e), "veps": s.veps, "delta_star": float(d),
            "asymptotic_value": asym, "ratio": float(d / asym), "local_slope": float(sl),
        })
    return rows


def cmd_delta_star(cfg: RunConfig) -> int:
    eps = _parse_eps_range(cfg.eps_decades, cfg.points_per_decade)
    grid = spectral_grid_for_solver(cfg.x0, 1e-16)
    rows = _curve_rows(cfg.x0, eps, grid, cfg.workers)
    _emit(rows, ["eps", "veps", "delta_star", "asymptotic_value", "ratio", "local_slope"], cfg)
    return 0


def cmd_local(cfg: RunConfig) -> int:
    f0 = _parse_f0(cfg.f0)
    report: dict = {"x0": cfg.x0, "f0": cfg.f0}
    if cfg.slopes:
        e_plus, e_minus = local.e_slopes(cfg.x0)
        report["E_plus"] = e_plus
        report["E_minus"] = e_minus
        print(json.dumps(report, indent=2))
        return 0
    if cfg.delta is not None:
        state = local.solve_local(f0, cfg.x0, cfg.delta)
        states = {"state": state}
        report.update(state.to_dict())
    elif cfg.eps is not None:
        sweep = local.sweep_epsilon(f0, cfg.x0, cfg.eps)
        states = {"upper": sweep.state_plus, "lower": sweep.state_minus}
        report.update({
            "eps": sweep.eps,
            "envelope_upper": sweep.m_upper,
            "envelope_lower": sweep.m_lower,
            "upper": sweep.state_plus.to_dict(),
            "lower": sweep.state_minus.to_dict(),
        })
    else:
        raise ValueError("local needs --delta or --eps (or --slopes)")
    for state in states.values():
        if not state.converged:
            print(json.dumps(report, indent=2), file=sys.stderr)
            print("local solver did not converge; see report above", file=sys.stderr)
            return 2
    print(json.dumps(report, indent=2))
    if cfg.out:
        rows = []
        t_max = 50.0 + 10.0 * cfg.x0
        ts = np.concatenate([[0.0], np.geomspace(1e-6, t_max, 2000)])
        for name, state in states.items():
            cert = state.certificate(ts)
            gap = local.caprini_C(state, ts)
            rows.extend(
                {"branch": name, "t": float(t), "moment_gap": float(g), "certificate": float(cv)}
                for t, g, cv in zip(ts, gap, cert)
            )
        _emit(rows, ["branch", "t", "moment_gap", "certificate"], cfg)
    return 0


def _cstr(value) -> str:
    value = complex(value)
    if value.imag == 0.0:
        return _FMT % value.real
    return f"{value.real:.12g}{value.imag:+.12g}j"


def cmd_eig(cfg: RunConfig) -> int:
    point = complex(cfg.point)
    point = point.real if point.imag == 0.0 else point
    in_unit = isinstance(point, float) and 0.0 < point <= 1.0
    mus = np.arange(0.0, cfg.mu_max + cfg.mu_step / 2.0, cfg.mu_step)
    rows = []
    for mu in mus:
        sample = special.eigfun_sample(point, float(mu))
        row = {"mu": float(mu), "value": _cstr(sample.value), "method": sample.method}
        if not in_unit and mu > 0.0:
            u0 = special.eigfun_u_asymptotic(point, float(mu))
            row["asymptotic"] = _cstr(u0)
            row["exact_over_asymptotic"] = _FMT % abs(complex(sample.value) / complex(u0))
        else:
            row["asymptotic"] = ""
            row["exact_over_asymptotic"] = ""
        rows.append(row)
    _emit(rows, ["mu", "value", "method", "asymptotic", "exact_over_asymptotic"], cfg)
    return 0


def cmd_oracle_compare(cfg: RunConfig) -> int:
    veps_list = cfg.veps or (1e-2, 1e-3, 1e-4)
    grid = spectral_grid_for_solver(cfg.x0, min(veps_list))
    rows = []
    for veps in veps_list:
        spec = solver.solve_psi(cfg.x0, veps, grid)
        nys = oracle.nystrom_solve(cfg.x0, veps * veps, 400)
        for name, val, ref in (
            ("psi_at_x0", spec.psi_at_x0, nys.psi_at_x0),
            ("norm_l2", spec.norm_l2, nys.norm_l2),
            ("norm_hardy", spec.norm_hardy, nys.norm_hardy),
        ):
            rows.append({
                "method": "spectral-vs-nystrom", "parameter": f"{name}@veps={veps:g}",
                "value": float(val), "reference": float(ref),
                "relative_gap": float(abs(val / ref - 1.0)),
            })
    _emit(rows, ["method", "parameter", "value", "reference", "relative_gap"], cfg)
    return 0


def cmd_demo_left(cfg: RunConfig) -> int:
    eps = cfg.eps if cfg.eps is not None else 0.01
    rows = oracle.left_unbounded_demo(eps, cfg.k_values, cfg.c)
    _emit(rows, ["K", "l2_discrepancy", "gap_at_c", "c"], cfg)
    return 0


def cmd_verify(cfg: RunConfig) -> int:
    only = list(cfg.only) if cfg.only else None
    results = acceptance.run_all(seed=cfg.seed, only=only)
    if cfg.as_json:
        payload = [
            {
                "slug": r.slug, "title": r.title, "passed": r.passed,
                "runtime_s": r.runtime_s,
                "rows": [dataclasses.asdict(row) for row in r.rows],
            }
            for r in results
        ]
        print(json.dumps(payload, indent=2))
    else:
        width = max(len(r.slug) for r in results)
        for r in results:
            print(f"{r.slug:<{width}}  {'PASS' if r.passed else 'FAIL'}  ({r.runtime_s:6.1f}s)  {r.title}")
            for row in r.rows:
                if not row.passed:
                    print(f"    FAILED: {row.label}  value={row.value!r}  required {row.bound}")
    return 0 if all(r.passed for r in results) else 3


def build_parser() -> _Parser:
    # Defaults live on RunConfig; absent flags are SUPPRESSed so that the
    # precedence is RunConfig defaults < --config file < explicit flags.
    parser = _Parser(prog="cmextrap", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"cmextrap {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sup = argparse.SUPPRESS

    def common(p):
        p.add_argument("--config", default=sup, help="JSON file with option defaults")
        p.add_argument("--out", default=sup, help="write tabular output to this path")
        p.add_argument("--format", dest="fmt", choices=("csv", "json"), default=sup)
        p.add_argument("--seed", type=int, default=sup)
        p.add_argument("--workers", type=int, default=sup)

    p = sub.add_parser("powerlaw", help="fit the power-law exponent")
    p.add_argument("--x0", type=float, default=sup)
    p.add_argument("--eps-decades", default=sup)
    p.add_argument("--points-per-decade", type=int, default=sup)
    common(p)

    p = sub.add_parser("delta-star", help="tabulate the worst-case curve")
    p.add_argument("--x0", type=float, default=sup)
    p.add_argument("--eps-decades", default=sup)
    p.add_argument("--points-per-decade", type=int, default=sup)
    common(p)

    p = sub.add_parser("local", help="local envelope problem")
    p.add_argument("--f0", default=sup, help="'exp' or JSON [[t, a], ...]")
    p.add_argument("--x0", type=float, default=sup)
    p.add_argument("--eps", type=float, default=sup, help="two-sided envelope level")
    p.add_argument("--delta", type=float, default=sup, help="single offset solve")
    p.add_argument("--slopes", action="store_true", default=sup, help="report E+ and E-")
    common(p)

    p = sub.add_parser("eig", help="eigenfunction table")
    p.add_argument("--point", default=sup)
    p.add_argument("--mu-max", type=float, default=sup)
    p.add_argument("--mu-step", type=float, default=sup)
    common(p)

    p = sub.add_parser("oracle-compare", help="spectral vs collocation")
    p.add_argument("--x0", type=float, default=sup)
    p.add_argument("--veps", type=float, nargs="+", default=sup)
    common(p)

    p = sub.add_parser("demo-left", help="left extrapolation failure family")
    p.add_argument("--eps", type=float, default=sup)
    p.add_argument("--K", dest="k_values", type=float, nargs="+", default=sup)
    p.add_argument("--c", type=float, default=sup)
    common(p)

    p = sub.add_parser("verify", help="run the acceptance suite")
    p.add_argument("--only", nargs="+", choices=acceptance.CHECK_SLUGS, default=sup)
    p.add_argument("--json", dest="as_json", action="store_true", default=sup)
    common(p)

    return parser


_COMMANDS = {
    "powerlaw": cmd_powerlaw,
    "delta-star": cmd_delta_star,
    "local": cmd_local,
    "eig": cmd_eig,
    "oracle-compare": cmd_oracle_compare,
    "demo-left": cmd_demo_left,
    "verify": cmd_verify,
}


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    fields = {f.name for f in dataclasses.fields(RunConfig)}
    data = {k: v for k, v in vars(args).items() if k in fields and v is not None}
    for key in ("veps", "k_values", "only"):
        if key in data:
            data[key] = tuple(data[key])
    cfg_path = getattr(args, "config", None)
    if cfg_path:
        with open(cfg_path) as fh:
            file_data = json.load(fh)
        merged = dict(file_data)
        merged.update(data)
        data = merged
    return RunConfig(**data)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
    except (ValueError, OSError, TypeError, json.JSONDecodeError) as exc:
        print(f"cmextrap: {exc}", file=sys.stderr)
        return 1
    try:
        return _COMMANDS[cfg.command](cfg)
    except ValueError as exc:
        print(f"cmextrap: {exc}", file=sys.stderr)
        return 1
    except RuntimeError as exc:
        print(f"cmextrap: solver failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
