"""Command-line interface: ``boolpic {sample,k,tail,quantize,rates}``.

Every table starts with ``# boolpic <command> schema=1`` and a ``# config=``
line echoing the fully resolved parameters, so a file records how it was
made. Outputs do not depend on ``--threads``.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import Sequence, TextIO

from . import __version__
from .effective import (
    TooLargeInstance,
    collection_run,
    essential_indices,
    exact_k,
    exact_k_1d,
    reduce_irreducible,
)
from .geometry import DEFAULT_RESOLUTION, NormKind
from .model import BooleanSample, Constant, ModelConfig, PowerLaw, parse_radius_law, sample_model
from .quantize import distortion_curve, theoretical_quant_rate
from .tails import (
    NoTheoremError,
    ScenarioKind,
    predicted_exponent,
    sample_scenario,
    scenario_log_prob,
    simulate_k_bounds,
    tail_from_bounds,
)

SCHEMA = 1
EXIT_USAGE = 2
EXIT_NO_THEOREM = 3
EXIT_TOO_LARGE = 4

TAIL_COLUMNS = [
    "n", "trials", "hits", "ambiguous", "p_hat", "std_err",
    "log_p_over_nlogn", "scenario_log_prob", "lower_exp", "upper_exp",
]
QUANT_COLUMNS = [
    "r", "trials", "mean_dH", "std_err", "sentinel_count", "theory_log_lower", "theory_log_upper",
]


class UsageError(Exception):
    pass


def fmt(v) -> str:
    """CSV cell: integers verbatim, floats at 12 significant digits, blanks for missing."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, int):
        return str(v)
    v = float(v)
    if math.isnan(v):
        return ""
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return "%.12g" % v


def _coef(v: float | None) -> str:
    return "none" if v is None else "%.12g" % v


# ---------------------------------------------------------------------------
# argument types


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return v


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text!r}")
    return v


def _nonneg_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0: {text!r}")
    return v


def _radius(text: str):
    try:
        return parse_radius_law(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _rates(text: str) -> list[float]:
    try:
        rates = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad rate list {text!r}") from None
    if not rates or any(not (r > 0 and math.isfinite(r)) for r in rates):
        raise argparse.ArgumentTypeError("rates must be positive numbers")
    if any(b <= a for a, b in zip(rates, rates[1:])):
        raise argparse.ArgumentTypeError("rates must be strictly ascending")
    return rates


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dim", type=_positive_int, required=True, help="dimension d")
    p.add_argument("--norm", choices=[n.value for n in NormKind], default="l2")
    p.add_argument("--lambda", dest="lam", type=_positive_float, required=True, help="Poisson intensity")
    p.add_argument("--radius", type=_radius, required=True, help="const:<c> or powerlaw:<alpha>:<rmax>")
    p.add_argument("--seed", type=_nonneg_int, default=0)


def _add_compute_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--trials", type=_positive_int, default=1000)
    p.add_argument("--resolution", type=_positive_float, default=DEFAULT_RESOLUTION, help="grid spacing h")
    p.add_argument("--limit", type=_positive_int, default=20, help="exhaustive-search limit on undecided balls")
    p.add_argument("--threads", type=_positive_int, default=None,
                   help="worker processes (default: $BOOLPIC_THREADS or CPU count)")
    p.add_argument("--out", default="-", help="output file (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="boolpic", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"boolpic {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw one Boolean-model sample as JSON")
    _add_model_flags(p)
    p.add_argument("--stream", type=_nonneg_int, default=0, help="stream index")
    p.add_argument("--out", default="-")

    p = sub.add_parser("k", help="effective number of balls of a sample file")
    p.add_argument("--in", dest="inp", required=True, help="sample JSON file ('-' for stdin)")
    p.add_argument("--method", default="exact", help="exact | exact1d | irreducible | collection:<n>")
    p.add_argument("--resolution", type=_positive_float, default=DEFAULT_RESOLUTION)
    p.add_argument("--limit", type=_positive_int, default=20)

    p = sub.add_parser("tail", help="Monte Carlo tail P[K >= n] with theory columns")
    _add_model_flags(p)
    _add_compute_flags(p)
    p.add_argument("--n-min", type=_nonneg_int, default=None)
    p.add_argument("--n-max", type=_nonneg_int, default=None)
    p.add_argument("--n", type=_nonneg_int, default=None, help="shorthand for --n-min N --n-max N")
    p.add_argument("--scenario", choices=[k.value for k in ScenarioKind], default=None,
                   help="scenario used for scenario_log_prob (default: matched to the model)")
    p.add_argument("--scenario-samples", type=_nonneg_int, default=20,
                   help="conditional samples verified per n when --scenario is given")

    p = sub.add_parser("quantize", help="distortion curve of the constructive codebook")
    _add_model_flags(p)
    _add_compute_flags(p)
    p.add_argument("--rates", type=_rates, required=True, help="comma-separated ascending rates")

    p = sub.add_parser("rates", help="proven exponents for a configuration")
    p.add_argument("--dim", type=_positive_int, required=True)
    p.add_argument("--norm", choices=[n.value for n in NormKind], default="l2")
    p.add_argument("--radius", type=_radius, required=True)
    return parser


# ---------------------------------------------------------------------------
# helpers


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("BOOLPIC_THREADS")
    if env:
        try:
            v = int(env)
        except ValueError:
            raise UsageError(f"BOOLPIC_THREADS must be an integer, got {env!r}") from None
        if v < 1:
            raise UsageError("BOOLPIC_THREADS must be >= 1")
        return v
    return os.cpu_count() or 1


def _config(args) -> ModelConfig:
    return ModelConfig(args.dim, NormKind(args.norm), args.lam, args.radius, args.seed)


def _num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def _law_text(law) -> str:
    if isinstance(law, Constant):
        return f"const:{_num(law.c)}"
    return f"powerlaw:{_num(law.alpha)}:{_num(law.r_max)}"


def _header(out: TextIO, command: str, resolved: dict) -> None:
    out.write(f"# boolpic {command} schema={SCHEMA}\n")
    out.write("# config=" + json.dumps(resolved, separators=(",", ":")) + "\n")


def _open_out(path: str):
    if path == "-":
        return sys.stdout, False
    return open(path, "w", newline="\n", encoding="utf-8"), True


def _default_scenario(config: ModelConfig) -> ScenarioKind | None:
    law = config.radius_law
    if isinstance(law, PowerLaw):
        return ScenarioKind.SMALL_BALLS
    if config.dim < 2 or law.c >= 1:
        return None
    return {
        NormKind.L1: ScenarioKind.L1_CONST,
        NormKind.L2: ScenarioKind.L2_CONST,
        NormKind.LINF: ScenarioKind.LINF_CONST,
    }[config.norm]


def _scenario_allowed(kind: ScenarioKind, config: ModelConfig) -> bool:
    if kind is ScenarioKind.SMALL_BALLS:
        return isinstance(config.radius_law, PowerLaw)
    return kind.norm is config.norm and isinstance(config.radius_law, Constant) and config.dim >= 2


# ---------------------------------------------------------------------------
# commands


def cmd_sample(args) -> int:
    sample = sample_model(_config(args), args.stream)
    text = sample.to_json()
    if args.out == "-":
        sys.stdout.write(text)
        print(f"N={sample.n}", file=sys.stderr)
    else:
        with open(args.out, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(text)
        print(f"N={sample.n}")
    return 0


def _read_sample(path: str) -> BooleanSample:
    try:
        text = sys.stdin.read() if path == "-" else open(path, encoding="utf-8").read()
        return BooleanSample.from_json(text)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot read sample {path!r}: {exc}") from None


def cmd_k(args) -> int:
    sample = _read_sample(args.inp)
    method = args.method
    h = args.resolution
    lines = [f"method={method}", f"N={sample.n}"]
    if method.startswith("collection:"):
        try:
            n = int(method.split(":", 1)[1])
        except ValueError:
            raise UsageError(f"bad collection parameter in {method!r}") from None
        if n < 1:
            raise UsageError("collection parameter must be >= 1")
        tr = collection_run(sample, n)
        lines += [
            f"n_boxes={tr.n_boxes}",
            f"kc={tr.kc}",
            f"s_m={tr.s_m}",
            f"kprime={tr.kprime}",
            f"invariant={'PASS' if tr.invariant_holds else 'FAIL'}",
        ]
    elif method == "exact1d":
        if sample.dim != 1:
            raise UsageError("exact1d requires a one-dimensional sample")
        lines += [f"K={exact_k_1d(sample)}", f"essential={len(essential_indices(sample, h))}"]
    elif method == "exact":
        k = exact_k(sample, h, args.limit)
        lines += [f"K={k}", f"essential={len(essential_indices(sample, h))}"]
    elif method == "irreducible":
        rep = reduce_irreducible(sample, h)
        ess = len(essential_indices(sample, h))
        lines += [f"K_lower={ess}", f"K_upper={len(rep)}", f"essential={ess}",
                  "kept=" + ",".join(map(str, rep.kept))]
    else:
        raise UsageError(f"unknown method {method!r}")
    sys.stdout.write("\n".join(lines) + "\n")
    return 0


def cmd_tail(args) -> int:
    config = _config(args)
    if args.n is not None:
        if args.n_min is not None or args.n_max is not None:
            raise UsageError("--n cannot be combined with --n-min/--n-max")
        n_min = n_max = args.n
    else:
        n_min = 1 if args.n_min is None else args.n_min
        n_max = n_min if args.n_max is None else args.n_max
    if n_max < n_min:
        raise UsageError("--n-max must be >= --n-min")
    scenario = ScenarioKind(args.scenario) if args.scenario else _default_scenario(config)
    if args.scenario and not _scenario_allowed(scenario, config):
        raise UsageError(f"scenario {scenario.value} does not match the model configuration")
    workers = _threads(args)

    try:
        bracket = predicted_exponent(config.dim, config.norm, config.radius_law)
    except NoTheoremError as exc:
        bracket = None
        print(f"warning: no exponent bracket: {exc}", file=sys.stderr)

    resolved = config.to_json()
    resolved["radius"] = _law_text(config.radius_law)
    del resolved["radius_law"]
    resolved.update(
        n_min=n_min, n_max=n_max, trials=args.trials, resolution=args.resolution,
        limit=args.limit, scenario=scenario.value if scenario else None,
        scenario_samples=args.scenario_samples if args.scenario else 0,
    )
    bounds = simulate_k_bounds(config, args.trials, args.resolution, args.limit,
                               n_min=max(n_min, 2), workers=workers)
    out, close = _open_out(args.out)
    try:
        _header(out, "tail", resolved)
        out.write(",".join(TAIL_COLUMNS) + "\n")
        for n in range(n_min, n_max + 1):
            est = tail_from_bounds(bounds, n)
            slp = None
            if scenario is not None and n >= 2:
                try:
                    slp = scenario_log_prob(scenario, config.dim, config.lam, n, config.radius_law)
                except ValueError:
                    slp = None
            row = [
                n, est.trials, est.hits, est.ambiguous, est.p_hat, est.std_err,
                est.log_p_over_nlogn, slp,
                bracket.lower_exp if bracket else None, bracket.upper_exp if bracket else None,
            ]
            out.write(",".join(fmt(v) for v in row) + "\n")
        if args.scenario and args.scenario_samples > 0:
            for n in range(max(n_min, 2), n_max + 1):
                out.write(_verify_scenario(scenario, config, n, args) + "\n")
    finally:
        if close:
            out.close()
    return 0


def _verify_scenario(kind: ScenarioKind, config: ModelConfig, n: int, args) -> str:
    if kind is ScenarioKind.LINF_CONST:
        return f"# scenario={kind.value} n={n} sampling unsupported: SKIP"
    try:
        ks = []
        for s in range(args.scenario_samples):
            sample = sample_scenario(kind, config.dim, n, config.radius_law, s,
                                     norm=config.norm, lam=config.lam, seed=config.seed)
            ks.append(exact_k(sample, args.resolution, max(args.limit, n)))
    except (ValueError, TooLargeInstance) as exc:
        return f"# scenario={kind.value} n={n} unavailable ({exc}): SKIP"
    ok = all(k == n for k in ks)
    shown = n if ok else min(ks)
    return f"# scenario={kind.value} n={n} exact_k={shown}: {'PASS' if ok else 'FAIL'}"


def cmd_quantize(args) -> int:
    config = _config(args)
    workers = _threads(args)
    resolved = config.to_json()
    resolved["radius"] = _law_text(config.radius_law)
    del resolved["radius_law"]
    resolved.update(rates=args.rates, trials=args.trials, resolution=args.resolution, limit=args.limit)
    curve = distortion_curve(config, args.rates, args.trials, args.resolution, args.limit, workers)
    out, close = _open_out(args.out)
    try:
        _header(out, "quantize", resolved)
        out.write(",".join(QUANT_COLUMNS) + "\n")
        for p in curve:
            row = [p.r, p.trials, p.mean_dH, p.std_err, p.sentinel_count, p.theory_log_lower, p.theory_log_upper]
            out.write(",".join(fmt(v) for v in row) + "\n")
    finally:
        if close:
            out.close()
    return 0


def rates_table(dim: int, norm: NormKind, law) -> tuple[list[str], list[str]]:
    """key=value lines for the proven exponents, and the list of missing results."""
    lines = [f"dim={dim}", f"norm={NormKind(norm).value}", f"radius={_law_text(law)}"]
    missing = []
    try:
        b = predicted_exponent(dim, norm, law)
        lines += [f"tail_a_lower={_coef(b.lower_exp)}", f"tail_a_upper={_coef(b.upper_exp)}"]
    except NoTheoremError as exc:
        lines += ["tail_a_lower=none", "tail_a_upper=none"]
        missing.append(f"tail: {exc}")
    try:
        q = theoretical_quant_rate(dim, norm, law, 3.0)
        lines += [
            f"quant_form={q.form}",
            f"quant_coef_in_lower_bound={_coef(q.coef_lower)}",
            f"quant_coef_in_upper_bound={_coef(q.coef_upper)}",
        ]
    except NoTheoremError as exc:
        lines += ["quant_form=none", "quant_coef_in_lower_bound=none", "quant_coef_in_upper_bound=none"]
        missing.append(f"quantization: {exc}")
    return lines, missing


def cmd_rates(args) -> int:
    lines, missing = rates_table(args.dim, NormKind(args.norm), args.radius)
    sys.stdout.write("\n".join(lines) + "\n")
    for m in missing:
        print(f"no theorem for {m}", file=sys.stderr)
    return EXIT_NO_THEOREM if missing else 0


COMMANDS = {
    "sample": cmd_sample,
    "k": cmd_k,
    "tail": cmd_tail,
    "quantize": cmd_quantize,
    "rates": cmd_rates,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"boolpic {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TooLargeInstance as exc:
        print(f"boolpic {args.command}: instance too large: {exc}", file=sys.stderr)
        return EXIT_TOO_LARGE
    except ValueError as exc:
        print(f"boolpic {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
