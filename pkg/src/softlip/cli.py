"""Command-line front end.

Subcommands cover every analysis: `jacobian-norm` (local constants),
`witness` (sharpness constructions), `estimate` (empirical constants over
CSV score matrices), `dsfp` (regularized game solving), and `scsa` (the
refined attention bound). Input matrices are headerless CSV; reports are
JSON documents {"manifest": ..., "result": ...} whose numeric fields carry
17 significant digits, so re-running a manifest's command reproduces the
report byte-for-byte (the timestamp sits in its own field).

Exit codes: 0 success, 2 input error, 3 solver did not converge.
"""

from __future__ import annotations

import argparse
import math
import os
import re
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

import softlip
from softlip.core import Logits, softmax
from softlip.estimator import (
    MODE_RANDOM,
    MODE_TOP_EIGENVECTOR,
    PerturbationSpec,
    epsilon_sweep,
)
from softlip.games import DsfpConfig, DsfpResult, MatrixGame, dsfp_solve, tau_min
from softlip.lipschitz import (
    ScsaParams,
    closed_form_linf,
    global_bound,
    local_lipschitz,
    scsa_bound,
    scsa_bound_unrefined,
    witness_attained,
    witness_example_pair,
    witness_limit_sequence,
)
from softlip.opnorm import NormOrder, opnorm_two

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NO_CONVERGENCE = 3

_DEFAULT_SEED = 0
_FLOAT_RE = re.compile(r"[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?")


class InputError(Exception):
    """User-input problem; reported on stderr and mapped to exit code 2."""


# ---------------------------------------------------------------------------
# parsing helpers


def _parse_float(text: str, what: str) -> float:
    token = text.strip()
    if not _FLOAT_RE.fullmatch(token):
        raise InputError(f"{what}: cannot parse {text!r} as a number")
    return float(token)


def _float_arg(text: str) -> float:
    if not _FLOAT_RE.fullmatch(text.strip()):
        raise argparse.ArgumentTypeError(f"cannot parse {text!r} as a number")
    return float(text)


def _norm_order_arg(text: str) -> NormOrder:
    token = text.strip().lower()
    if token in ("inf", "infinity", "oo"):
        return NormOrder.infinity()
    try:
        value = _parse_float(token, "--p")
    except InputError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    try:
        return NormOrder.of(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _float_list(text: str, what: str) -> list[float]:
    items = [tok for tok in text.split(",") if tok.strip() != ""]
    if not items:
        raise InputError(f"{what}: empty list")
    return [_parse_float(tok, what) for tok in items]


def _norm_list(text: str) -> list[NormOrder]:
    orders = []
    for tok in text.split(","):
        tok = tok.strip().lower()
        if tok == "":
            continue
        if tok in ("inf", "infinity", "oo"):
            orders.append(NormOrder.infinity())
        else:
            orders.append(NormOrder.of(_parse_float(tok, "--p-list")))
    if not orders:
        raise InputError("--p-list: empty list")
    return orders


def read_matrix_csv(path: str) -> np.ndarray:
    """Parse a headerless CSV matrix, diagnosing problems by line and column.

    UTF-8, LF or CRLF line endings, comma-separated decimal floats
    (scientific notation allowed), rectangular, finite, no trailing commas.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    rows: list[list[float]] = []
    width = None
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        if line == "":
            continue  # blank lines (incl. the trailing newline) carry no row
        fields = line.split(",")
        parsed = []
        for col, tok in enumerate(fields, start=1):
            tok = tok.strip()
            if not _FLOAT_RE.fullmatch(tok):
                raise InputError(
                    f"{path}: line {lineno}, column {col}: cannot parse {tok!r} as a number"
                )
            value = float(tok)
            if not math.isfinite(value):
                raise InputError(
                    f"{path}: line {lineno}, column {col}: non-finite value {tok!r}"
                )
            parsed.append(value)
        if width is None:
            width = len(parsed)
        elif len(parsed) != width:
            raise InputError(
                f"{path}: line {lineno}: expected {width} fields, found {len(parsed)}"
            )
        rows.append(parsed)
    if not rows:
        raise InputError(f"{path}: empty input")
    return np.array(rows, dtype=np.float64)


def read_vector_csv(path: str) -> np.ndarray:
    mat = read_matrix_csv(path)
    if mat.shape[0] == 1:
        return mat[0]
    if mat.shape[1] == 1:
        return mat[:, 0]
    raise InputError(f"{path}: expected a single row or column vector, got {mat.shape}")


_GEN_RE = re.compile(r"(?P<name>[a-z0-9-]+)\((?P<args>[^)]*)\)")


def parse_inline_vector(text: str) -> np.ndarray:
    """Parse an inline vector: comma-separated floats or a generator form.

    Generators: ln9-vector(N) -> (ln(N-1), 0, ..., 0); example-vector(N[,K])
    -> (0, 0, -K, ..., -K) with K defaulting to 20; zeros(N).
    """
    token = text.strip().lower()
    gen = _GEN_RE.fullmatch(token)
    if gen:
        name = gen.group("name")
        args = [a.strip() for a in gen.group("args").split(",") if a.strip() != ""]
        if name == "ln9-vector":
            if len(args) != 1:
                raise InputError("ln9-vector takes one argument: the length")
            n = int(_parse_float(args[0], "ln9-vector"))
            if n < 2:
                raise InputError("ln9-vector needs length >= 2")
            v = np.zeros(n)
            v[0] = math.log(n - 1.0)
            return v
        if name == "example-vector":
            if len(args) not in (1, 2):
                raise InputError("example-vector takes (length[, K])")
            n = int(_parse_float(args[0], "example-vector"))
            big_k = _parse_float(args[1], "example-vector") if len(args) == 2 else 20.0
            if n < 2:
                raise InputError("example-vector needs length >= 2")
            v = np.full(n, -big_k)
            v[0] = v[1] = 0.0
            return v
        if name == "zeros":
            if len(args) != 1:
                raise InputError("zeros takes one argument: the length")
            return np.zeros(int(_parse_float(args[0], "zeros")))
        raise InputError(f"unknown inline generator {name!r}")
    values = _float_list(text, "--inline")
    return np.array(values, dtype=np.float64)


# ---------------------------------------------------------------------------
# deterministic report emission


def format_float(x: float) -> str:
    """17 significant digits: enough to round-trip any finite float64."""
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite float {x}")
    return format(float(x), ".17g")


def _emit(obj, indent: int, out: list) -> None:
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for i, (key, value) in enumerate(obj.items()):
            out.append(f'{pad}  "{key}": ')
            _emit(value, indent + 1, out)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(obj, (list, tuple)) or isinstance(obj, np.ndarray):
        items = obj.tolist() if isinstance(obj, np.ndarray) else list(obj)
        if not items:
            out.append("[]")
            return
        out.append("[\n")
        for i, value in enumerate(items):
            out.append(pad + "  ")
            _emit(value, indent + 1, out)
            out.append(",\n" if i < len(items) - 1 else "\n")
        out.append(pad + "]")
    elif isinstance(obj, str):
        escaped = obj.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
        out.append(f'"{escaped}"')
    elif isinstance(obj, bool) or isinstance(obj, np.bool_):
        out.append("true" if obj else "false")
    elif obj is None:
        out.append("null")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(format_float(float(obj)))
    elif isinstance(obj, NormOrder):
        _emit(obj.label, indent, out)
    else:
        raise TypeError(f"cannot serialize {type(obj)!r}")


def dumps_report(doc: dict) -> str:
    out: list = []
    _emit(doc, 0, out)
    out.append("\n")
    return "".join(out)


def make_manifest(command: list[str], seed, resolved: dict) -> dict:
    return {
        "schema_version": "1",
        "tool": "softlip",
        "version": softlip.__version__,
        "command": list(command),
        "seed": seed,
        "resolved": resolved,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }


def _write_report(path: str, manifest: dict, result: dict) -> None:
    Path(path).write_text(dumps_report({"manifest": manifest, "result": result}), encoding="utf-8")


def _resolve_seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get("SOFTLIP_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise InputError(f"SOFTLIP_SEED must be an integer, got {env!r}") from None
    return _DEFAULT_SEED


# ---------------------------------------------------------------------------
# subcommands


def cmd_jacobian_norm(args, argv: list[str]) -> int:
    if (args.logits_file is None) == (args.inline is None):
        raise InputError("provide exactly one of --logits-file or --inline")
    vec = read_vector_csv(args.logits_file) if args.logits_file else parse_inline_vector(args.inline)
    try:
        x = Logits(vec)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    lam = args.lam
    order = args.p
    est = local_lipschitz(x, lam, order)
    s = softmax(x, lam)
    closed = lam * closed_form_linf(s)
    bound = global_bound(lam)
    print(
        f"local Lipschitz (p={order.label}, lambda={format_float(lam)}): "
        f"lower={format_float(est.lower)} upper={format_float(est.upper)} "
        f"exact={'true' if est.exact else 'false'}"
    )
    print(f"closed form for p in {{1, inf}}: {format_float(closed)}")
    print(f"global bound lambda/2: {format_float(bound)}")
    result = {
        "n": x.n,
        "p": order,
        "lambda": lam,
        "lower": est.lower,
        "upper": est.upper,
        "exact": est.exact,
        "method": est.method,
        "closed_form_one_inf": closed,
        "global_bound": bound,
        "clamped": s.clamped,
    }
    if args.json_out:
        manifest = make_manifest(argv, None, {"lambda": lam, "p": order})
        _write_report(args.json_out, manifest, result)
    return EXIT_OK


def cmd_witness(args, argv: list[str]) -> int:
    try:
        if args.mode == "attained":
            x, constant = witness_attained(args.n, args.p)
            result = {
                "mode": "attained",
                "n": args.n,
                "p": args.p,
                "x": x.values,
                "constant": constant,
            }
            print(f"attained witness (n={args.n}, p={args.p.label}): constant={format_float(constant)}")
        elif args.mode == "limit-sequence":
            if args.epsilons is None:
                raise InputError("--epsilons is required for limit-sequence mode")
            epsilons = _float_list(args.epsilons, "--epsilons")
            steps = witness_limit_sequence(args.n, args.p, epsilons)
            result = {
                "mode": "limit-sequence",
                "n": args.n,
                "p": args.p,
                "steps": [
                    {
                        "k": st.k,
                        "epsilon": st.epsilon,
                        "delta": st.delta,
                        "s": st.s,
                        "certified_ratio": st.certified_ratio,
                        "closed_form": st.closed_form,
                    }
                    for st in steps
                ],
            }
            for st in steps:
                print(
                    f"step {st.k}: epsilon={format_float(st.epsilon)} "
                    f"certified_ratio={format_float(st.certified_ratio)}"
                )
        else:  # example
            pair = witness_example_pair(args.n, args.K, args.eps, args.p)
            result = {
                "mode": "example",
                "n": args.n,
                "K": args.K,
                "eps_pert": args.eps,
                "p": args.p,
                "lambda": pair.lam,
                "ratio": pair.ratio,
                "x": pair.x.values,
                "y": pair.y.values,
            }
            print(
                f"example pair (n={args.n}, K={format_float(args.K)}, "
                f"eps={format_float(args.eps)}, p={args.p.label}): "
                f"ratio={format_float(pair.ratio)}"
            )
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if args.json_out:
        manifest = make_manifest(argv, None, {"mode": args.mode})
        _write_report(args.json_out, manifest, result)
    return EXIT_OK


def _report_dict(report) -> dict:
    return {
        "empirical_lp": report.empirical_lp,
        "argmax_input_index": report.argmax_input_index,
        "argmax_trial": report.argmax_trial,
        "argmax_epsilon_index": report.argmax_epsilon_index,
        "per_epsilon_table": [[eps, val] for eps, val in report.per_epsilon_table],
        "lambda": report.lam,
        "p": report.p,
        "inputs_count": report.inputs_count,
        "trials_per_input": report.trials_per_input,
        "mode": report.mode,
        "seed": report.seed,
        "aggregate": report.aggregate,
        "clamp_events": report.clamp_events,
        "bound_exceeded": report.bound_exceeded,
    }


def cmd_estimate(args, argv: list[str]) -> int:
    matrix = read_matrix_csv(args.matrix)
    if matrix.shape[1] < 2:
        raise InputError(
            f"{args.matrix}: rows have {matrix.shape[1]} column(s); need at least 2"
        )
    seed = _resolve_seed(args)
    epsilons = _float_list(args.eps_list, "--eps-list")
    if any(e <= 0.0 for e in epsilons):
        raise InputError("--eps-list: magnitudes must be positive")
    orders = _norm_list(args.p_list)
    inputs = list(matrix)
    reports = []
    csv_lines = ["epsilon,p,empirical_lp"]
    for order in orders:
        spec = PerturbationSpec(
            p=order,
            epsilon=epsilons[0],
            trials_per_input=args.trials,
            mode=args.mode,
            seed=seed,
            aggregate=args.aggregate,
        )
        report = epsilon_sweep(inputs, args.lam, spec, epsilons)
        reports.append(report)
        for eps, value in report.per_epsilon_table:
            csv_lines.append(f"{format_float(eps)},{order.label},{format_float(value)}")
    overall = max(r.empirical_lp for r in reports)
    result = {
        "matrix": args.matrix,
        "rowwise": bool(args.rowwise),
        "lambda": args.lam,
        "mode": args.mode,
        "trials_per_input": args.trials,
        "aggregate": args.aggregate,
        "global_bound": global_bound(args.lam),
        "max_empirical_lp": overall,
        "reports": [_report_dict(r) for r in reports],
    }
    resolved = {
        "seed": seed,
        "perturbation_law": args.mode,
        "aggregate": args.aggregate,
        "clamp_events": sum(r.clamp_events for r in reports),
    }
    manifest = make_manifest(argv, seed, resolved)
    print(
        f"max empirical L_p = {format_float(overall)} "
        f"(global bound {format_float(global_bound(args.lam))})"
    )
    if args.out:
        _write_report(args.out + ".json", manifest, result)
        Path(args.out + ".csv").write_text("\n".join(csv_lines) + "\n", encoding="utf-8")
        print(f"wrote {args.out}.json and {args.out}.csv")
    else:
        sys.stdout.write(dumps_report({"manifest": manifest, "result": result}))
    return EXIT_OK


def _dsfp_result_dict(res: DsfpResult, resolved_tau: float) -> dict:
    return {
        "tau": resolved_tau,
        "alpha": res.config.alpha,
        "p": res.config.p,
        "tol": res.config.tol,
        "max_iter": res.config.max_iter,
        "y0": "uniform" if isinstance(res.config.y0, str) else res.config.y0,
        "y_star": res.y_star,
        "x_star": res.x_star,
        "iterations": res.iterations,
        "residual": res.residual,
        "contraction_nominal": res.contraction_nominal,
        "contraction_safe": res.contraction_safe,
        "certified": res.certified,
        "no_certificate": not res.certified,
        "regularized_value": res.regularized_value,
        "converged": res.converged,
        "clamp_events": res.clamp_events,
        "trace": [[k, d] for k, d in res.trace],
    }


def cmd_dsfp(args, argv: list[str]) -> int:
    payoff = read_matrix_csv(args.payoff)
    game = MatrixGame(payoff)
    order = args.p
    if args.tau.strip().lower() == "auto":
        resolved_tau = 1.01 * tau_min(game, order)
    else:
        resolved_tau = _parse_float(args.tau, "--tau")
    if resolved_tau <= 0.0:
        raise InputError(f"--tau must be positive, got {resolved_tau}")
    try:
        config = DsfpConfig(
            tau=resolved_tau,
            alpha=args.alpha,
            p=order,
            tol=args.tol,
            max_iter=args.max_iter,
        )
    except ValueError as exc:
        raise InputError(str(exc)) from None
    res = dsfp_solve(game, config)
    print(
        f"dsfp: converged={'true' if res.converged else 'false'} "
        f"iterations={res.iterations} residual={format_float(res.residual)}"
    )
    print(
        f"contraction: nominal={format_float(res.contraction_nominal)} "
        f"safe={format_float(res.contraction_safe)} "
        f"certified={'true' if res.certified else 'false'}"
    )
    print(f"value: {format_float(res.regularized_value)}")
    if args.out:
        resolved = {
            "tau": resolved_tau,
            "alpha": args.alpha,
            "p": order,
            "tol": args.tol,
            "clamp_events": res.clamp_events,
        }
        manifest = make_manifest(argv, None, resolved)
        _write_report(args.out, manifest, _dsfp_result_dict(res, resolved_tau))
    return EXIT_OK if res.converged else EXIT_NO_CONVERGENCE


def _weight_norm(scalar, path, name: str) -> float:
    if (scalar is None) == (path is None):
        raise InputError(f"provide exactly one of --{name} or --{name}-file")
    if scalar is not None:
        if scalar < 0.0:
            raise InputError(f"--{name} must be nonnegative")
        return scalar
    return opnorm_two(read_matrix_csv(path))


def cmd_scsa(args, argv: list[str]) -> int:
    wq = _weight_norm(args.wq, args.wq_file, "wq")
    wk = _weight_norm(args.wk, args.wk_file, "wk")
    wv = _weight_norm(args.wv, args.wv_file, "wv")
    try:
        params = ScsaParams(
            n=args.n, nu=args.nu, tau=args.tau, eps=args.eps,
            wq_norm=wq, wk_norm=wk, wv_norm=wv,
        )
    except ValueError as exc:
        raise InputError(str(exc)) from None
    bound = scsa_bound(params)
    before = scsa_bound_unrefined(params)
    print(f"refined SCSA Lipschitz bound:      {format_float(bound)}")
    print(f"pre-refinement bound (2x QK terms): {format_float(before)}")
    result = {
        "n": params.n,
        "nu": params.nu,
        "tau": params.tau,
        "eps": params.eps,
        "wq_norm": params.wq_norm,
        "wk_norm": params.wk_norm,
        "wv_norm": params.wv_norm,
        "bound": bound,
        "pre_refinement_bound": before,
    }
    if args.json_out:
        manifest = make_manifest(argv, None, {})
        _write_report(args.json_out, manifest, result)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="softlip",
        description="Softmax Lipschitz analysis: constants, witnesses, estimation, games.",
    )
    parser.add_argument("--version", action="version", version=f"softlip {softlip.__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    jac = sub.add_parser("jacobian-norm", help="local Lipschitz constant at a logit vector")
    jac.add_argument("--logits-file", help="CSV file holding a single row or column vector")
    jac.add_argument("--inline", help="inline vector, e.g. '0,0,0' or 'ln9-vector(10)'")
    jac.add_argument("--lambda", dest="lam", type=_float_arg, default=1.0)
    jac.add_argument("--p", type=_norm_order_arg, default=NormOrder.two())
    jac.add_argument("--json-out", help="write the JSON report here")
    jac.set_defaults(func=cmd_jacobian_norm)

    wit = sub.add_parser("witness", help="sharpness witnesses for the lambda/2 bound")
    wit.add_argument("--mode", required=True, choices=["attained", "limit-sequence", "example"])
    wit.add_argument("--n", type=int, default=10)
    wit.add_argument("--p", type=_norm_order_arg, default=NormOrder.two())
    wit.add_argument("--K", type=_float_arg, default=20.0)
    wit.add_argument("--eps", type=_float_arg, default=1e-4, help="perturbation size (example mode)")
    wit.add_argument("--epsilons", help="comma list of gaps (limit-sequence mode)")
    wit.add_argument("--json-out", help="write the JSON report here")
    wit.set_defaults(func=cmd_witness)

    est = sub.add_parser("estimate", help="empirical Lipschitz constants over a CSV matrix")
    est.add_argument("--matrix", required=True, help="CSV matrix; rows are input vectors")
    est.add_argument("--rowwise", action="store_true",
                     help="treat the matrix as attention scores (softmax per row)")
    est.add_argument("--lambda", dest="lam", type=_float_arg, default=1.0)
    est.add_argument("--p-list", default="2", help="comma list of norm orders")
    est.add_argument("--eps-list", default="1e-4", help="comma list of perturbation sizes")
    est.add_argument("--trials", type=int, default=100)
    est.add_argument("--mode", choices=[MODE_RANDOM, MODE_TOP_EIGENVECTOR], default=MODE_RANDOM)
    est.add_argument("--aggregate", choices=["max", "mean"], default="max")
    est.add_argument("--seed", type=int, default=None,
                     help="RNG seed; falls back to SOFTLIP_SEED, then 0")
    est.add_argument("--out", help="prefix for the .json and .csv reports")
    est.set_defaults(func=cmd_estimate)

    dsf = sub.add_parser("dsfp", help="solve an entropy-regularized zero-sum matrix game")
    dsf.add_argument("--payoff", required=True, help="CSV payoff matrix")
    dsf.add_argument("--tau", default="auto", help="regularization, or 'auto' (=1.01 * tau_min)")
    dsf.add_argument("--alpha", type=_float_arg, default=1.0)
    dsf.add_argument("--p", type=_norm_order_arg, default=NormOrder.two())
    dsf.add_argument("--tol", type=_float_arg, default=1e-10)
    dsf.add_argument("--max-iter", type=int, default=10_000)
    dsf.add_argument("--out", help="write the JSON report here")
    dsf.set_defaults(func=cmd_dsfp)

    scs = sub.add_parser("scsa", help="refined Lipschitz bound for scaled cosine attention")
    scs.add_argument("--n", type=int, required=True, help="token count")
    scs.add_argument("--nu", type=_float_arg, required=True)
    scs.add_argument("--tau", type=_float_arg, required=True)
    scs.add_argument("--eps", type=_float_arg, required=True)
    scs.add_argument("--wq", type=_float_arg, help="spectral norm of W_Q")
    scs.add_argument("--wq-file", help="CSV matrix; reduced via its spectral norm")
    scs.add_argument("--wk", type=_float_arg)
    scs.add_argument("--wk-file")
    scs.add_argument("--wv", type=_float_arg)
    scs.add_argument("--wv-file")
    scs.add_argument("--json-out", help="write the JSON report here")
    scs.set_defaults(func=cmd_scsa)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage and 0 for --help/--version
        return EXIT_OK if exc.code in (0, None) else EXIT_INPUT
    try:
        return args.func(args, argv)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
