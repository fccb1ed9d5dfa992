"""Command line front end.

Subcommands: ``gen`` writes family states to qstate files, ``test`` runs
criteria on a state file at its stored dimensions, ``verify`` runs the
dimension escalation (optionally scanning all bipartitions), ``sweep`` tables
a criterion over a parameter grid as CSV, and ``bipartitions`` lists the
canonical bipartitions of M modes.

Exit codes: 0 for a completed run (entangled or undecided alike), 1 for bad
usage, unreadable input or malformed state files, 3 when --expect disagrees
with the computed verdict.  Reports are stable key=value lines; the elapsed
time line is informational and excluded from reproducibility.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time

from . import __version__
from .criteria import TOL_DETECT, normalize_partition
from .escalate import (
    CRITERION_FUNCS,
    AnalyticFamily,
    EscalationConfig,
    FiniteSource,
    bipartitions,
    multipartite_scan,
    truncate,
    verify_escalating,
)
from .states import (
    PureStateVec,
    gen_chik,
    gen_isotropic,
    gen_partial_ent,
    gen_separable_random,
    gen_tmsv,
    read_qstate,
    write_qstate,
)

ENV_SEED = "FINENT_SEED"

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_EXPECT_MISMATCH = 3

FAMILIES = ("chik", "tmsv", "isotropic", "partial-ent", "separable-random")

# Sweepable parameters per family; "d" sweeps the truncation dimension.
SWEEP_PARAMS = {
    "chik": ("k", "d"),
    "tmsv": ("lambda", "d"),
    "isotropic": ("p", "d"),
}


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


def _fmt(x: float) -> str:
    if x == 0:
        x = 0.0  # avoid printing negative zero
    return f"{x:.17g}"


def _fmt_dims(dims) -> str:
    return ",".join(str(d) for d in dims)


def _fmt_partition(partition) -> str:
    side_a, side_b = partition
    return ",".join(str(m) for m in side_a) + "|" + ",".join(str(m) for m in side_b)


def _resolve_seed(explicit) -> int:
    if explicit is not None:
        return int(explicit)
    env = os.environ.get(ENV_SEED)
    if env:
        try:
            return int(env)
        except ValueError:
            raise CliError(f"{ENV_SEED} must be an integer, got {env!r}") from None
    return 0


def _parse_partition(text: str, num_modes: int):
    sides = text.split("|")
    if len(sides) != 2:
        raise CliError(f"bad partition {text!r}: expected exactly one '|'")
    try:
        side_a = tuple(int(tok) for tok in sides[0].split(",") if tok)
        side_b = tuple(int(tok) for tok in sides[1].split(",") if tok)
        return normalize_partition((side_a, side_b), num_modes)
    except ValueError as exc:
        raise CliError(f"bad partition {text!r}: {exc}") from None


def _parse_criteria(text: str):
    names = tuple(tok.strip() for tok in text.split(",") if tok.strip())
    if not names:
        raise CliError("no criteria given")
    for name in names:
        if name not in CRITERION_FUNCS:
            raise CliError(f"unknown criterion {name!r}, expected one of {tuple(CRITERION_FUNCS)}")
    return names


def _parse_dims(text: str):
    try:
        dims = tuple(int(tok) for tok in text.split(",") if tok)
    except ValueError:
        raise CliError(f"bad dims {text!r}, expected comma-separated integers") from None
    if not dims:
        raise CliError(f"bad dims {text!r}, expected comma-separated integers")
    return dims


def _parse_range(text: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise CliError(f"bad range {text!r}, expected start:stop:step")
    try:
        start, stop, step = (float(tok) for tok in parts)
    except ValueError:
        raise CliError(f"bad range {text!r}, expected numeric start:stop:step") from None
    if step <= 0:
        raise CliError("range step must be positive")
    count = math.floor((stop - start) / step + 1e-9) + 1
    return [start + i * step for i in range(max(count, 0))]


def _require(value, flag: str, family: str):
    if value is None:
        raise CliError(f"{flag} is required for family {family}")
    return value


def _build_state(args, seed: int):
    family = args.family
    if family == "chik":
        k = _require(args.k, "--k", family)
        dim = _require(args.dim, "--dim", family)
        return gen_chik(k, dim)
    if family == "tmsv":
        lam = _require(args.lam, "--lambda", family)
        dim = _require(args.dim, "--dim", family)
        return gen_tmsv(lam, dim)
    if family == "isotropic":
        p = _require(args.p, "--p", family)
        dim = _require(args.dim, "--dim", family)
        return gen_isotropic(p, dim)
    if family == "partial-ent":
        return gen_partial_ent(args.dim if args.dim is not None else 2)
    if family == "separable-random":
        terms = _require(args.terms, "--terms", family)
        dims = _parse_dims(_require(args.dims, "--dims", family))
        return gen_separable_random(terms, dims, seed).to_density()
    raise CliError(f"unknown family {family!r}")


def _build_provider(args, seed: int):
    if getattr(args, "path", None):
        state = read_qstate(args.path)
        if isinstance(state, PureStateVec):
            state = state.to_density()
        return FiniteSource(state)
    family = args.family
    if family is None:
        raise CliError("give a state file or --family")
    if family == "chik":
        return AnalyticFamily("chik", k=_require(args.k, "--k", family))
    if family == "tmsv":
        return AnalyticFamily("tmsv", lam=_require(args.lam, "--lambda", family))
    state = _build_state(args, seed)
    if isinstance(state, PureStateVec):
        state = state.to_density()
    return FiniteSource(state)


def _print_header(command: str, seed: int | None = None):
    print(f"command={command}")
    print(f"version={__version__}")
    if seed is not None:
        print(f"seed={seed}")


def _scalar_detail(detail: dict) -> str:
    chunks = []
    for key in sorted(detail):
        value = detail[key]
        if isinstance(value, bool):
            chunks.append(f"{key}={'yes' if value else 'no'}")
        elif isinstance(value, (int, float)):
            chunks.append(f"{key}={_fmt(float(value))}")
    return (" " + " ".join(chunks)) if chunks else ""


def _print_verdict(verdict, prefix: str = ""):
    for step in verdict.steps:
        print(
            f"{prefix}step dims={_fmt_dims(step.dims)} criterion={step.criterion_name} "
            f"value={_fmt(step.value)} verdict={step.verdict} "
            f"captured_trace={_fmt(step.captured_trace)}"
        )
    for note in verdict.diagnostics:
        print(f"{prefix}diagnostic={note}")
    print(f"{prefix}outcome={verdict.outcome}")
    if verdict.outcome == "entangled":
        cert = verdict.certificate
        print(f"{prefix}detected_dims={_fmt_dims(verdict.dims)}")
        print(f"{prefix}criterion={verdict.criterion_name}")
        print(f"{prefix}certificate_measured={_fmt(cert.measured_value)}")
        print(f"{prefix}certificate_sep_bound={_fmt(cert.witness.sep_bound)}")
        print(f"{prefix}certificate_margin={_fmt(cert.margin)}")
        print(f"{prefix}certificate_bound_kind={cert.witness.bound_kind}")
        print(f"{prefix}certificate_dims={_fmt_dims(cert.witness.index_map.dims)}")
        print(f"{prefix}certificate_lifted={'yes' if cert.lifted else 'no'}")
    else:
        print(f"{prefix}max_dims={_fmt_dims(verdict.dims)}")


def cmd_gen(args) -> int:
    seed = _resolve_seed(args.seed)
    state = _build_state(args, seed)
    write_qstate(state, args.output)
    _print_header("gen", seed)
    print(f"family={args.family}")
    print(f"dims={_fmt_dims(state.dims)}")
    if isinstance(state, PureStateVec):
        print("kind=pure")
        print(f"norm={_fmt(state.norm)}")
    else:
        print("kind=density")
        print(f"trace={_fmt(state.trace)}")
    print(f"path={args.output}")
    return EXIT_OK


def cmd_test(args) -> int:
    state = read_qstate(args.path)
    if isinstance(state, PureStateVec):
        state = state.to_density()
    partition = None
    if args.partition:
        partition = _parse_partition(args.partition, state.index_map.num_modes)
    names = _parse_criteria(args.criteria)
    _print_header("test")
    print(f"path={args.path}")
    print(f"dims={_fmt_dims(state.dims)}")
    print(f"trace={_fmt(state.trace)}")
    for name in names:
        result = CRITERION_FUNCS[name](state, partition, args.tol_detect)
        print(
            f"criterion={name} value={_fmt(result.value)} "
            f"threshold={_fmt(result.threshold)} verdict={result.verdict}"
            + _scalar_detail(result.detail)
        )
    return EXIT_OK


def cmd_verify(args) -> int:
    start = time.perf_counter()
    seed = _resolve_seed(args.seed)
    provider = _build_provider(args, seed)
    names = _parse_criteria(args.criteria)
    _print_header("verify", seed)
    print(f"source={args.path if args.path else args.family}")
    print(f"criteria={','.join(names)}")
    print(f"d_start={args.dstart}")
    print(f"d_max={args.dmax}")
    print(f"growth={args.growth}")
    print(f"tol_detect={_fmt(args.tol_detect)}")

    if args.scan_bipartitions:
        config = EscalationConfig(
            d_start=args.dstart, d_max=args.dmax, growth=args.growth,
            criteria=names, tol_detect=args.tol_detect,
        )
        scan = multipartite_scan(provider, config)
        for partition, verdict in scan.verdicts.items():
            _print_verdict(verdict, prefix=f"[{_fmt_partition(partition)}] ")
        overall = "entangled" if scan.entangled else "undecided"
        print(f"verdict={overall}")
    else:
        partition = None
        if args.partition:
            partition = _parse_partition(args.partition, provider.num_modes)
        config = EscalationConfig(
            d_start=args.dstart, d_max=args.dmax, growth=args.growth,
            criteria=names, tol_detect=args.tol_detect, partition=partition,
        )
        verdict = verify_escalating(provider, config)
        _print_verdict(verdict)
        overall = verdict.outcome
        print(f"verdict={overall}")

    print(f"elapsed_s={time.perf_counter() - start:.3f}")
    if args.expect is not None and args.expect != overall:
        print(f"expect_mismatch=wanted {args.expect}, got {overall}")
        return EXIT_EXPECT_MISMATCH
    return EXIT_OK


def _sweep_provider(args, family: str, param: str, value: float, seed: int):
    """Provider and truncation dimension for one sweep grid point."""
    if param == "d":
        d = int(round(value))
        if d < 1:
            raise CliError(f"swept dimension must be >= 1, got {d}")
    else:
        d = _require(args.dim, "--dim", family)
    if family == "chik":
        k = int(round(value)) if param == "k" else _require(args.k, "--k", family)
        return AnalyticFamily("chik", k=k), d
    if family == "tmsv":
        lam = value if param == "lambda" else _require(args.lam, "--lambda", family)
        return AnalyticFamily("tmsv", lam=lam), d
    p = value if param == "p" else _require(args.p, "--p", family)
    return FiniteSource(gen_isotropic(p, d)), d


def cmd_sweep(args) -> int:
    seed = _resolve_seed(args.seed)
    family = args.family
    if family not in SWEEP_PARAMS:
        raise CliError(f"family {family!r} is not sweepable, expected one of {tuple(SWEEP_PARAMS)}")
    if args.param not in SWEEP_PARAMS[family]:
        raise CliError(
            f"family {family} cannot sweep {args.param!r}, expected one of {SWEEP_PARAMS[family]}"
        )
    names = _parse_criteria(args.criteria)
    values = _parse_range(args.range)

    rows = []
    for value in values:
        provider, d = _sweep_provider(args, family, args.param, value, seed)
        dims = (d,) * provider.num_modes
        if provider.ambient_dims is not None:
            dims = tuple(min(x, a) for x, a in zip(dims, provider.ambient_dims))
        truncation = truncate(provider, dims)
        for name in names:
            result = CRITERION_FUNCS[name](truncation.reduced, None, args.tol_detect)
            rows.append((
                _fmt(float(value)), str(d), name,
                _fmt(result.value), result.verdict, _fmt(truncation.captured_trace),
            ))

    try:
        with open(args.output, "w") as handle:
            handle.write("param,d,criterion,value,verdict,captured_trace\n")
            for row in rows:
                handle.write(",".join(row) + "\n")
    except OSError as exc:
        raise CliError(f"cannot write {args.output}: {exc}") from exc

    _print_header("sweep", seed)
    print(f"family={family}")
    print(f"param={args.param}")
    print(f"rows={len(rows)}")
    print(f"path={args.output}")
    return EXIT_OK


def cmd_bipartitions(args) -> int:
    for partition in bipartitions(args.num_modes):
        print(_fmt_partition(partition))
    return EXIT_OK


def _add_family_args(parser):
    parser.add_argument("--family", choices=FAMILIES, help="state family")
    parser.add_argument("--k", type=int, help="number-component index for chik")
    parser.add_argument("--lambda", dest="lam", type=float, help="squeezing parameter for tmsv")
    parser.add_argument("--p", type=float, help="mixing parameter for isotropic")
    parser.add_argument("--dim", type=int, help="local dimension")
    parser.add_argument("--dims", help="comma-separated mode dimensions (separable-random)")
    parser.add_argument("--terms", type=int, help="ensemble size (separable-random)")
    parser.add_argument("--seed", type=int, help=f"RNG seed (default: ${ENV_SEED} or 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="finent", description="entanglement verification in finite truncations")
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate a family state and write a qstate file")
    _add_family_args(p_gen)
    p_gen.add_argument("-o", "--output", required=True, help="output qstate path")
    p_gen.set_defaults(func=cmd_gen)

    p_test = sub.add_parser("test", help="run criteria on a state file at its stored dims")
    p_test.add_argument("path", help="qstate file")
    p_test.add_argument("--criteria", default="ppt,realign,witness")
    p_test.add_argument("--partition", help="bipartition such as 0|1,2 (default: mode 0 vs rest)")
    p_test.add_argument("--tol-detect", dest="tol_detect", type=float, default=TOL_DETECT)
    p_test.set_defaults(func=cmd_test)

    p_verify = sub.add_parser("verify", help="escalate truncation dimensions until certified")
    p_verify.add_argument("path", nargs="?", help="qstate file (alternative to --family)")
    _add_family_args(p_verify)
    p_verify.add_argument("--dstart", type=int, default=2)
    p_verify.add_argument("--dmax", type=int, default=8)
    p_verify.add_argument("--growth", choices=("increment", "double"), default="increment")
    p_verify.add_argument("--criteria", default="ppt,realign,witness")
    p_verify.add_argument("--partition", help="bipartition such as 0|1,2")
    p_verify.add_argument("--scan-bipartitions", action="store_true",
                          help="run every canonical bipartition")
    p_verify.add_argument("--expect", choices=("entangled", "undecided"))
    p_verify.add_argument("--tol-detect", dest="tol_detect", type=float, default=TOL_DETECT)
    p_verify.set_defaults(func=cmd_verify)

    p_sweep = sub.add_parser("sweep", help="table a criterion over a parameter grid as CSV")
    _add_family_args(p_sweep)
    p_sweep.add_argument("--param", required=True, choices=("p", "lambda", "k", "d"))
    p_sweep.add_argument("--range", required=True, help="grid as start:stop:step")
    p_sweep.add_argument("--criteria", default="ppt")
    p_sweep.add_argument("--tol-detect", dest="tol_detect", type=float, default=TOL_DETECT)
    p_sweep.add_argument("-o", "--output", required=True, help="output CSV path")
    p_sweep.set_defaults(func=cmd_sweep)

    p_bip = sub.add_parser("bipartitions", help="list canonical bipartitions of M modes")
    p_bip.add_argument("num_modes", type=int)
    p_bip.set_defaults(func=cmd_bipartitions)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
