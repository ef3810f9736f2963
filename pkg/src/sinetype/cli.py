"""Command-line driver.

Exit codes: 0 success, 1 ``verify`` found a failing invariant, 2 invalid
input, 3 numerical failure (the error class is printed on stderr).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io
from .checks import run_checks
from .errors import NumericalFailure, ValidationError
from .reconstruction import build_moment_system, complete_zeros, frame_bounds_estimate, invert_to_tail
from .stability_lab import BallSpec, empirical_lipschitz, summarize
from .sturm_liouville import (
    Spectrum,
    main_part,
    theorem12_experiment,
    theta_from_u,
    theta_from_v,
    zeros_to_spectrum,
)
from .zero_finder import localize_zeros


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _positive(kind):
    def parse(text):
        try:
            val = kind(text)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(f"not a valid {kind.__name__}: {text!r}") from exc
        if not val > 0:
            raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
        return val
    return parse


def cmd_zeros(args):
    theta = io.load_function(args.fn)
    rep = localize_zeros(theta, args.nmax)
    io.write_zeros_csv(_out(args) / "zeros.csv", rep.zeros)
    print(f"{len(rep.zeros)} zeros, head count {rep.head_count}")
    return 0


def cmd_reconstruct(args):
    theta = io.load_function(args.fn)
    main = theta.main
    zeros = io.read_zeros_csv(args.zeros, main).base_part()
    if args.K:
        zeros = zeros.select(zeros.indices <= args.K)
    system = build_moment_system(zeros, main, args.M)
    frame = frame_bounds_estimate(system)
    tail, resid = invert_to_tail(system)
    out = _out(args)
    io.save_tail(tail, out / "tail_recovered.json")
    rows = [("residual_norm", resid), ("rhs_norm", float(np.linalg.norm(system.rhs))),
            ("equations", system.K), ("modes", 2 * args.M + 1),
            ("frame_m_est", frame.m_est), ("frame_M_est", frame.M_est)]
    if args.reference:
        ref = io.load_tail(args.reference, main.b).resized(args.M)
        err = np.abs(tail.coeffs - ref.coeffs)
        rows.append(("max_mode_error", float(err.max())))
        rows += [(f"mode_error_{k}", float(e)) for k, e in zip(tail.ks, err)]
    io.write_csv(out / "recon_report.csv", ["quantity", "value"], rows)
    print(f"residual {resid:.3e}, frame [{frame.m_est:.4g}, {frame.M_est:.4g}]")
    return 0


def cmd_complete(args):
    theta = io.load_function(args.fn)
    main = theta.main
    zeros = io.read_zeros_csv(args.zeros, main).base_part()
    full = complete_zeros(zeros, main, args.M)
    io.write_zeros_csv(_out(args) / "zeros_completed.csv", full)
    for n, z in zip(full.indices[: main.N], full.zeros[: main.N]):
        print(f"z[{n}] = {z.real:.17g} {z.imag:+.17g}i")
    return 0


def cmd_stability(args):
    main = main_part(args.profile)
    out = _out(args)
    rec_rows, sum_rows = [], []
    for r in args.r:
        spec = BallSpec(r, args.nmax, args.decay)
        _, recs = empirical_lipschitz(spec, args.trials, args.seed, main, args.modes)
        for rec in recs:
            rec_rows.append((rec.seed_a, rec.seed_b, r, rec.numerator, rec.denominator, rec.ratio))
        n, cmax, mean, std = summarize(recs)
        sum_rows.append((r, n, cmax, mean, std))
        print(f"r={r:g}: C_r={cmax:.6g} over {n} records")
    io.write_csv(out / "stability_records.csv",
                 ["seed_a", "seed_b", "r", "numerator", "denominator", "ratio"], rec_rows)
    io.write_csv(out / "c_r_summary.csv", ["r", "trials", "C_r_est", "mean", "stddev"], sum_rows)
    return 0


def _fixture_modes(path):
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: malformed JSON ({exc.msg})") from exc
    except OSError as exc:
        raise ValidationError(f"{path}: {exc.strerror}") from exc
    if not isinstance(doc, dict):
        raise ValidationError("mode file must map k to [re, im]")
    try:
        return {int(k): io._complex(v, f"mode {k}") for k, v in doc.items()}
    except ValueError as exc:
        raise ValidationError("mode keys must be integers") from exc


def cmd_sturm_liouville(args):
    profile = args.profile
    rows = []
    if args.spectrum_a:
        if not args.spectrum_b:
            raise ValidationError("--spectrum-a needs --spectrum-b")
        pairs = [(Spectrum(io.read_spectrum_csv(args.spectrum_a)),
                  Spectrum(io.read_spectrum_csv(args.spectrum_b)))]
    elif args.modes:
        modes = _fixture_modes(args.modes)
        pairs = []
        for s in args.scales:
            scaled = {k: s * v for k, v in modes.items()}
            theta = theta_from_u(scaled) if profile == 1 else theta_from_v(scaled)
            zs = localize_zeros(theta, 2 * args.nmax + 1).zeros
            spec = Spectrum(zeros_to_spectrum(zs).eigenvalues[: args.nmax])
            pairs.append((spec, Spectrum.unperturbed(len(spec))))
    else:
        raise ValidationError("give --spectrum-a/--spectrum-b or --modes")
    j = 1 - profile
    for a, b in pairs:
        res = theorem12_experiment(a, b, profile, args.M)
        ref = Spectrum.unperturbed(len(a))
        r = max(a.Lambda(ref, j), b.Lambda(ref, j))
        rows.append((r, res.lhs, res.rhs, res.ratio, profile))
        print(f"r={r:.6g} lhs={res.lhs:.6g} rhs={res.rhs:.6g} ratio={res.ratio:.6g}")
    io.write_csv(_out(args) / "sl_experiment.csv", ["r", "lhs", "rhs", "ratio", "profile"], rows)
    return 0


def cmd_verify(args):
    theta = io.load_function(args.fn)
    results = run_checks(theta, args.nmax, args.seed)
    failed = 0
    for res in results:
        tag = "PASS" if res.passed else "FAIL"
        failed += not res.passed
        extra = f" ({res.detail})" if res.detail else ""
        print(f"{tag} {res.name}: value={res.value:.3g} limit={res.limit:.3g}{extra}")
    io.write_csv(_out(args) / "verify_report.csv", ["check", "passed", "value", "limit", "detail"],
                 [(r.name, "1" if r.passed else "0", r.value, r.limit, r.detail) for r in results])
    return 1 if failed else 0


def build_parser():
    p = argparse.ArgumentParser(prog="sinetype", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, fn=True):
        if fn:
            sp.add_argument("--fn", required=True, help="function JSON document")
        sp.add_argument("--out", default=".", help="output directory (default: current)")

    sp = sub.add_parser("zeros", help="localise zeros and write zeros.csv")
    common(sp)
    sp.add_argument("--nmax", type=_positive(int), required=True)
    sp.set_defaults(func=cmd_zeros)

    sp = sub.add_parser("reconstruct", help="recover the tail from zeros.csv")
    common(sp)
    sp.add_argument("--zeros", required=True)
    sp.add_argument("--M", type=int, required=True, help="mode cutoff")
    sp.add_argument("--K", type=_positive(int), help="use zeros with 1 <= n <= K only")
    sp.add_argument("--reference", help="function or tail JSON to compare modes against")
    sp.set_defaults(func=cmd_reconstruct)

    sp = sub.add_parser("complete", help="add the head zeros to zeros with n >= 1")
    common(sp)
    sp.add_argument("--zeros", required=True)
    sp.add_argument("--M", type=int, required=True)
    sp.set_defaults(func=cmd_complete)

    sp = sub.add_parser("stability", help="Monte-Carlo stability constants")
    common(sp, fn=False)
    sp.add_argument("--r", type=_positive(float), nargs="+", required=True)
    sp.add_argument("--trials", type=int, default=200)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--modes", type=int, default=32, help="mode cutoff M")
    sp.add_argument("--nmax", type=_positive(int), default=128)
    sp.add_argument("--profile", type=int, choices=(0, 1), default=1)
    sp.add_argument("--decay", type=float, default=1.0, help="envelope decay exponent")
    sp.set_defaults(func=cmd_stability)

    sp = sub.add_parser("sturm-liouville", help="eigenvalue stability experiment")
    common(sp, fn=False)
    sp.add_argument("--spectrum-a")
    sp.add_argument("--spectrum-b")
    sp.add_argument("--modes", help="JSON {k: [re, im]} of u (profile 1) or v (profile 0)")
    sp.add_argument("--scales", type=float, nargs="+", default=[1.0])
    sp.add_argument("--profile", type=int, choices=(0, 1), default=1)
    sp.add_argument("--M", type=int, default=32)
    sp.add_argument("--nmax", type=_positive(int), default=100, help="eigenvalues per spectrum")
    sp.set_defaults(func=cmd_sturm_liouville)

    sp = sub.add_parser("verify", help="run the invariant suite on a function")
    common(sp)
    sp.add_argument("--nmax", type=_positive(int), default=200)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with code 2
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (NumericalFailure, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


run = main

if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
