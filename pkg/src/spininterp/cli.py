"""Command-line interface.

One binary, subcommands: estimate, exact, zeros, threshold, curves, verify,
bench.  JSON is the canonical machine format (reports embed provenance:
spec hash, seed, tool version); CSV is emitted only for plot-feeding
tabular dumps.  Exit codes: 0 success, 2 precondition refusals (capacity,
work budget, domain errors), 1 internal errors; failures print a
machine-readable JSON object on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import asdict, dataclass

import numpy as np

from spininterp import __version__, backend
from spininterp.curves import build_curve_family, certify_tubes
from spininterp.exact import (
    ZEvaluator,
    jensen_check,
    locate_zeros,
    second_moment_identity_check,
    sphere_Z_series,
    winding_on_circle,
    z_raster,
)
from spininterp.interpolate import estimate_multicurve, estimate_straightline
from spininterp.model import (
    CapacityError,
    Domain,
    MixtureSpec,
    build_disorder,
    empirical_covariance_check,
)
from spininterp.series import (
    ComplexSeries,
    WorkBudgetError,
    moments_combinatorial,
    series_exp,
    series_log,
)
from spininterp.threshold import (
    PhiProfile,
    beta_2nd,
    curie_weiss_Z,
    rs_form_bound,
    verify_cw_bound,
)


@dataclass(frozen=True)
class RunConfig:
    """Provenance block embedded in every JSON report."""

    subcommand: str
    spec_digest: str
    seed: int | None
    tool_version: str
    out: str
    format: str

    @classmethod
    def from_json(cls, data: dict) -> "RunConfig":
        return cls(**data)


def _parse_complex(text: str) -> complex:
    parts = text.split(",")
    if len(parts) == 1:
        return complex(float(parts[0]), 0.0)
    if len(parts) == 2:
        return complex(float(parts[0]), float(parts[1]))
    raise ValueError(f"expected RE or RE,IM, got {text!r}")


def _load_spec(path: str) -> MixtureSpec:
    return MixtureSpec.from_toml(path)


def _write_out(out: str, text: str) -> None:
    if out == "-":
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _emit_json(args, payload: dict, spec: MixtureSpec | None, seed: int | None) -> None:
    run = RunConfig(
        subcommand=args.command,
        spec_digest=spec.digest() if spec is not None else "",
        seed=seed,
        tool_version=__version__,
        out=args.out,
        format=getattr(args, "format", "json"),
    )
    _write_out(args.out, json.dumps({"run": asdict(run), **payload}, indent=2))


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# subcommands


def _cmd_estimate(args) -> int:
    spec = _load_spec(args.spec)
    G = build_disorder(spec, args.n, args.seed)
    beta = _parse_complex(args.beta)
    mode = args.mode
    if mode == "auto":
        mode = "straight" if spec.gamma(2) == 0.0 else "multicurve"
    if mode == "straight":
        report = estimate_straightline(
            spec, G, beta, epsilon=args.eps, eta=args.eta, force_moments=args.force_moments
        )
    else:
        if beta.imag != 0.0:
            raise ValueError(
                "multicurve accepts real beta only; complex targets need gamma_2 = 0"
            )
        report = estimate_multicurve(
            spec,
            G,
            beta.real,
            epsilon=args.eps,
            delta=args.delta,
            eta=args.eta,
            m_budget=args.m_budget,
            schedule=args.schedule,
            force_moments=args.force_moments,
            jitter=args.jitter,
        )
    _emit_json(args, {"report": report.to_json()}, spec, args.seed)
    return 0


def _cmd_exact(args) -> int:
    spec = _load_spec(args.spec)
    G = build_disorder(spec, args.n, args.seed)
    if spec.domain is Domain.SPHERE:
        res = sphere_Z_series(spec, G, _parse_complex(args.beta), k_max=args.kmax)
        _emit_json(
            args,
            {
                "z": [res.value.real, res.value.imag],
                "tail_estimate": res.tail_estimate,
                "converged": res.converged,
            },
            spec,
            args.seed,
        )
        return 0
    ev = ZEvaluator(spec, G, cap=args.cap)
    if args.grid:
        lo_re, hi_re, lo_im, hi_im = (float(x) for x in args.grid.split(","))
        rows = z_raster(ev, (lo_re, hi_re), (lo_im, hi_im), args.resolution)
        _write_out(args.out, _csv_text(["re", "im", "abs_z", "arg_z"], rows))
        return 0
    z, dz = ev.z_and_dz(_parse_complex(args.beta))
    _emit_json(
        args,
        {"z": [z.real, z.imag], "dz": [dz.real, dz.imag]},
        spec,
        args.seed,
    )
    return 0


def _cmd_zeros(args) -> int:
    spec = _load_spec(args.spec)
    G = build_disorder(spec, args.n, args.seed)
    ev = ZEvaluator(spec, G, cap=args.cap)
    zl = locate_zeros(
        ev, center=_parse_complex(args.center), radius=args.radius, tol=args.tol
    )
    if args.format == "csv":
        buf = io.StringIO()
        zl.write_csv(buf)
        _write_out(args.out, buf.getvalue())
    else:
        payload = zl.to_json()
        payload["winding_on_circle"] = winding_on_circle(
            ev, center=_parse_complex(args.center), radius=args.radius
        )
        payload["beta_2nd"] = beta_2nd(spec, 1e-6)
        _emit_json(args, {"zeros": payload}, spec, args.seed)
    return 0


def _cmd_threshold(args) -> int:
    spec = _load_spec(args.spec)
    b2 = beta_2nd(spec, args.tol)
    payload: dict = {"beta_2nd": b2, "tol": args.tol}
    if args.phi_csv:
        beta = args.beta if args.beta is not None else 0.9 * b2
        prof = PhiProfile.build(spec, beta)
        ms = np.linspace(-1.0 + 1e-9, 1.0 - 1e-9, args.points)
        rows = [(float(m), float(prof.phi(m))) for m in ms]
        with open(args.phi_csv, "w") as fh:
            fh.write(_csv_text(["m", "phi"], rows))
        payload["phi_csv"] = args.phi_csv
        payload["phi_beta"] = beta
    if args.cw_csv:
        betas = np.linspace(0.0, 0.99 * b2, args.points)
        rows = []
        for beta in betas:
            lz = curie_weiss_Z(spec, args.n, float(beta) ** 2)
            try:
                rb = rs_form_bound(spec, float(beta))
            except ValueError:
                rb = math.inf
            rows.append((float(beta), lz, rb))
        with open(args.cw_csv, "w") as fh:
            fh.write(_csv_text(["beta", "log_zcw", "rs_bound"], rows))
        payload["cw_csv"] = args.cw_csv
        payload["cw_n"] = args.n
    _emit_json(args, payload, spec, None)
    return 0


def _cmd_curves(args) -> int:
    spec = _load_spec(args.spec)
    b2 = beta_2nd(spec, 1e-6)
    family = build_curve_family(
        beta_star=args.beta_star,
        epsilon=args.eps,
        delta=args.delta,
        kappa=args.kappa,
        N=args.N,
        m=args.m,
        beta_2nd=b2,
        gamma=args.gamma,
    )
    rows = []
    ts = np.linspace(0.0, 1.0, args.samples // 4)
    for k in family.ks:
        for i, t in enumerate(ts):
            v = family.curve_exact(k, float(t))
            rows.append(("path", k, i, v.real, v.imag))
        for i, v in enumerate(family.boundary_samples(k, args.samples)):
            rows.append(("tube", k, i, float(v.real), float(v.imag)))
    header = ["kind", "k", "idx", "re", "im"]
    meta = {
        "beta_star": family.beta_star,
        "N": family.N,
        "gamma": family.gamma,
        "a": family.a,
        "eps_hat": family.eps_hat,
        "r_hat": family.r_hat,
        "beta_2nd": b2,
    }
    if args.certify:
        rep = certify_tubes(family, samples=args.samples)
        meta["certified"] = rep.all_ok
    _write_out(args.out, _csv_text(header, rows))
    if args.out != "-":
        sys.stdout.write(json.dumps(meta, indent=2) + "\n")
    return 0


def _cmd_verify(args) -> int:
    spec = _load_spec(args.spec) if args.spec else None
    lines: list[tuple[str, bool]] = []

    if args.suite == "jensen":
        assert spec is not None, "--spec required"
        for i in range(args.seeds):
            G = build_disorder(spec, args.n, args.seed + i)
            ev = ZEvaluator(spec, G)
            zl = locate_zeros(ev, center=0.0, radius=args.radius, tol=1e-9)
            jc = jensen_check(ev, R=args.radius, quad_points=2048, zeros=zl)
            ok = abs(jc.lhs - jc.rhs) <= 1e-4
            lines.append((f"jensen seed={args.seed + i} |lhs-rhs|={abs(jc.lhs - jc.rhs):.2e}", ok))
    elif args.suite == "cw-bound":
        assert spec is not None, "--spec required"
        rep = verify_cw_bound(spec, [100, 400, 1600], [args.beta or 0.6])
        for row in rep.rows:
            lines.append(
                (f"cw-bound n={row.n} beta={row.beta} slack={row.slack:.4g} cap={row.cap:.4g}", row.bound_ok)
            )
        lines.append(("cw-monotone", rep.monotone_ok))
    elif args.suite == "second-moment":
        assert spec is not None, "--spec required"
        chk = second_moment_identity_check(spec, args.n, args.beta or 0.6, args.seeds)
        ok = abs(chk.mc_ratio - chk.cw_value) <= 5.0 * chk.stderr
        lines.append(
            (f"second-moment mc={chk.mc_ratio:.6f} cw={chk.cw_value:.6f} se={chk.stderr:.2e}", ok)
        )
    elif args.suite == "series":
        rng = np.random.default_rng(args.seed)
        for i in range(args.seeds):
            m = 64
            decay = 0.6 ** np.arange(m + 1)
            c = (rng.standard_normal(m + 1) + 1j * rng.standard_normal(m + 1)) * decay
            c[0] = 1.0
            a = ComplexSeries(c)
            rt = series_exp(series_log(a))
            err = float(np.abs(rt.coeffs - a.coeffs).max())
            lines.append((f"series round-trip #{i} err={err:.2e}", err <= 1e-12))
    elif args.suite == "covariance":
        assert spec is not None, "--spec required"
        n = args.n
        tau = np.ones(n)
        sigma = np.ones(n)
        sigma[: n // 2] = -1.0
        chk = empirical_covariance_check(spec, n, range(args.seeds), tau, sigma)
        ok = abs(chk.sample_cov - chk.predicted) <= 5.0 * chk.stderr
        lines.append(
            (f"covariance sample={chk.sample_cov:.4f} predicted={chk.predicted:.4f}", ok)
        )
    elif args.suite == "moments":
        assert spec is not None, "--spec required"
        G = build_disorder(spec, args.n, args.seed)
        sweep = ZEvaluator(spec, G).moments(args.kmax)
        comb = moments_combinatorial(spec, G, args.kmax)
        for k in range(args.kmax + 1):
            err = abs(sweep[k] - comb[k]) / max(abs(sweep[k]), abs(comb[k]), 1.0)
            lines.append((f"moment k={k} rel-err={err:.2e}", err <= 1e-9))
    else:
        raise ValueError(f"unknown suite {args.suite!r}")

    passed = sum(1 for _, ok in lines if ok)
    for text, ok in lines:
        sys.stdout.write(f"[{'PASS' if ok else 'FAIL'}] {text}\n")
    sys.stdout.write(f"{passed}/{len(lines)} pass\n")
    if args.out != "-":
        _emit_json(
            args,
            {"suite": args.suite, "passed": passed, "total": len(lines)},
            spec,
            args.seed,
        )
    return 0 if passed == len(lines) else 1


def _cmd_bench(args) -> int:
    impls = backend.implementations()
    results: dict[str, dict[str, float]] = {}

    def time_it(fn, repeat=args.repeat):
        best = math.inf
        for _ in range(repeat):
            t0 = time.perf_counter()
            fn()
            best = min(best, time.perf_counter() - t0)
        return best

    if args.kernel in ("htable", "all"):
        spec = MixtureSpec(gammas=(1.0 / math.sqrt(2.0),))
        G = build_disorder(spec, args.n, args.seed)
        terms = [(2, spec.gamma(2) * args.n ** -0.5, G.order(2))]
        results["htable"] = {
            name: time_it(lambda impl=impl: impl.htable(args.n, terms))
            for name, impl in impls.items()
        }
    if args.kernel in ("zsum", "all"):
        table = np.random.default_rng(args.seed).standard_normal(1 << args.n)
        beta = 0.4 + 0.2j
        results["zsum"] = {
            name: time_it(lambda impl=impl: impl.z_and_dz(table, beta))
            for name, impl in impls.items()
        }
    if args.kernel in ("moments", "all"):
        table = np.random.default_rng(args.seed).standard_normal(1 << args.n)
        results["moments"] = {
            name: time_it(lambda impl=impl: impl.scaled_moments(table, args.kmax))
            for name, impl in impls.items()
        }
    if args.kernel in ("series-log", "all"):
        rng = np.random.default_rng(args.seed)
        c = (rng.standard_normal(args.m + 1) + 1j * rng.standard_normal(args.m + 1)) * (
            0.6 ** np.arange(args.m + 1)
        )
        c[0] = 1.0
        results["series-log"] = {
            name: time_it(lambda impl=impl: impl.dd_log_coeffs(c))
            for name, impl in impls.items()
        }

    for kernel, times in results.items():
        for name, t in sorted(times.items()):
            sys.stdout.write(f"{kernel:12s} {name:9s} {t * 1e3:10.3f} ms\n")
        if "compiled" in times and "python" in times:
            sys.stdout.write(
                f"{kernel:12s} speedup   {times['python'] / times['compiled']:10.2f} x\n"
            )
    if args.out != "-":
        _emit_json(args, {"bench": results, "active": backend.ACTIVE}, None, args.seed)
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="spininterp",
        description="Partition-function estimation for mean-field spin glasses",
    )
    top.add_argument("--threads", type=int, default=None, help="worker thread cap")
    sub = top.add_subparsers(dest="command", required=True)

    def add_common(p, seed=True):
        p.add_argument("--spec", required=True, help="TOML model file")
        p.add_argument("--n", type=int, required=True)
        if seed:
            p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default="-")
        p.add_argument("--format", choices=["json", "csv"], default="json")

    p = sub.add_parser("estimate", help="estimate Z at an inverse temperature")
    add_common(p)
    p.add_argument("--beta", required=True, help="RE or RE,IM")
    p.add_argument("--eps", type=float, default=0.25)
    p.add_argument("--delta", type=float, default=0.3)
    p.add_argument("--eta", type=float, default=1e-2)
    p.add_argument("--mode", choices=["auto", "straight", "multicurve"], default="auto")
    p.add_argument(
        "--force-moments", choices=["auto", "sweep", "combinatorial"], default="auto"
    )
    p.add_argument("--m-budget", type=int, default=192)
    p.add_argument("--schedule", choices=["auto", "strict"], default="auto")
    p.add_argument("--jitter", type=float, default=0.0)
    p.set_defaults(fn=_cmd_estimate)

    p = sub.add_parser("exact", help="exact Z by enumeration / entire series")
    add_common(p)
    p.add_argument("--beta", default="0.0")
    p.add_argument("--grid", help="RE_MIN,RE_MAX,IM_MIN,IM_MAX raster window")
    p.add_argument("--resolution", type=int, default=64)
    p.add_argument("--kmax", type=int, default=40, help="series depth (sphere)")
    p.add_argument("--cap", type=int, default=22)
    p.set_defaults(fn=_cmd_exact)

    p = sub.add_parser("zeros", help="locate partition-function zeros in a disk")
    add_common(p)
    p.add_argument("--center", default="0.0")
    p.add_argument("--radius", type=float, default=0.9)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--cap", type=int, default=22)
    p.set_defaults(fn=_cmd_zeros)

    p = sub.add_parser("threshold", help="second-moment threshold and CW curves")
    p.add_argument("--spec", required=True)
    p.add_argument("--tol", type=float, default=1e-7)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--points", type=int, default=257)
    p.add_argument("--phi-csv", default=None)
    p.add_argument("--cw-csv", default=None)
    p.add_argument("--out", default="-")
    p.add_argument("--format", choices=["json"], default="json")
    p.set_defaults(fn=_cmd_threshold)

    p = sub.add_parser("curves", help="interpolating curve paths and tubes")
    p.add_argument("--spec", required=True)
    p.add_argument("--beta-star", type=float, required=True)
    p.add_argument("--eps", type=float, default=0.15)
    p.add_argument("--delta", type=float, default=0.3)
    p.add_argument("--kappa", type=float, default=0.2)
    p.add_argument("--N", type=int, default=2)
    p.add_argument("--m", type=int, default=32)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--samples", type=int, default=512)
    p.add_argument("--certify", action="store_true")
    p.add_argument("--out", default="-")
    p.add_argument("--format", choices=["csv"], default="csv")
    p.set_defaults(fn=_cmd_curves)

    p = sub.add_parser("verify", help="run identity/bound suites")
    p.add_argument(
        "--suite",
        required=True,
        choices=["jensen", "cw-bound", "second-moment", "series", "moments", "covariance"],
    )
    p.add_argument("--spec", default=None)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--radius", type=float, default=0.9)
    p.add_argument("--kmax", type=int, default=8)
    p.add_argument("--out", default="-")
    p.add_argument("--format", choices=["json"], default="json")
    p.set_defaults(fn=_cmd_verify)

    p = sub.add_parser("bench", help="compare compiled vs fallback kernels")
    p.add_argument(
        "--kernel",
        choices=["htable", "zsum", "moments", "series-log", "all"],
        default="all",
    )
    p.add_argument("--n", type=int, default=16)
    p.add_argument("--m", type=int, default=96)
    p.add_argument("--kmax", type=int, default=12)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--out", default="-")
    p.add_argument("--format", choices=["json"], default="json")
    p.set_defaults(fn=_cmd_bench)

    return top


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    backend.set_threads(args.threads)
    try:
        return args.fn(args)
    except (ValueError, CapacityError, WorkBudgetError) as exc:
        sys.stderr.write(
            json.dumps({"error": "precondition", "message": str(exc)}) + "\n"
        )
        return 2
    except Exception as exc:  # internal
        sys.stderr.write(
            json.dumps({"error": "internal", "type": type(exc).__name__, "message": str(exc)})
            + "\n"
        )
        return 1


if __name__ == "__main__":
    sys.exit(main())
