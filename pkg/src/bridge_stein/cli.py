"""Command-line experiment runner.

Usage::

    bridge-stein [--config FILE] COMMAND [options]

Commands: ``sample``, ``couple``, ``wasserstein``, ``bound``,
``scheme-check`` and ``filtering``.  Parameters resolve in the order
command-line flags, then the ``[COMMAND]`` section (and ``[DEFAULT]``) of
the INI file given by ``--config``, then built-in defaults.

Every output starts with a provenance record holding the tool version,
the command, the resolved configuration and the seed.  JSON outputs
carry it as the first key ``"provenance"``, JSONL outputs as the first
line, and CSV outputs as a leading ``# provenance: {...}`` comment.

Exit status: 0 on success, 2 for configuration errors, 3 for numerical
failures.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import sys
from typing import Callable

import numpy as np

from . import __version__
from .chain_dynamics import (ChainParams, Hypercube, Lattice, MajorantViolation,
                             Nonhomogeneous, PoissonDiag, Scheme, run_ensemble,
                             simulate)
from .config_space import HypercubeConfig, LatticeConfig, config_to_dict
from .coupling import estimate_contraction
from .exact_oracles import (sample_bridge_exact, sample_scheme_bridge_exact)
from .filtering_bounds import (DriftSpec, LinearModel, NumericalFailure, ObservationPath,
                               bound_theorem1, bound_theorem2)
from .rates import RateFamily
from .rng import replica_generator
from .stein_bounds import (bound_constant_speed, bound_homogeneous, bound_reversible,
                           bound_scheme, estimate_bound_nonhomogeneous)
from .wasserstein import SampleSet, empirical_w1

__all__ = ["main", "run_experiment", "build_parser", "ConfigError"]


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


def _floats(text) -> list:
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


# name -> (flags, type, default, help, extra kwargs)
_SPECS: dict[str, list] = {
    "sample": [
        (("--model",), str, "lattice", "chain variant",
         {"choices": ["hypercube", "lattice", "poisson", "scheme", "nonhomogeneous"]}),
        (("--alpha", "--hypercube-rate"), float, 1.0, "hypercube jump rate alpha", {}),
        (("--j-plus", "--up-rate"), float, 1.0, "lattice up rate", {}),
        (("--j-minus", "--down-rate"), float, 1.0, "lattice down rate", {}),
        (("--lam", "--birth-rate"), float, 1.0, "birth rate of the integer chain", {}),
        (("--n", "--steps"), int, 10, "number of scheme steps N", {}),
        (("--rates",), str, "constant-speed", "rate family for the nonhomogeneous chain",
         {"choices": ["unit", "reversible", "constant-speed"]}),
        (("--kappa", "--rate-increment"), float, 0.5, "increment bound of the reversible family", {}),
        (("--ratio",), float, 2.0, "mu/nu of the constant-speed family", {}),
        (("--t-end", "--horizon"), float, 20.0, "time horizon", {}),
        (("--replicas",), int, 1000, "number of independent replicas", {}),
        (("--seed",), int, 0, "master seed", {}),
        (("--format",), str, "csv", "output format", {"choices": ["csv", "jsonl"]}),
        (("--trajectory",), _bool, False, "emit the event log of replica 0 as JSONL", {}),
        (("--exact",), _bool, False, "draw from the exact bridge sampler instead", {}),
    ],
    "couple": [
        (("--model",), str, "hypercube", "chain variant", {"choices": ["hypercube", "lattice"]}),
        (("--alpha", "--hypercube-rate"), float, 1.0, "hypercube jump rate alpha", {}),
        (("--j-plus", "--up-rate"), float, 1.0, "lattice up rate", {}),
        (("--j-minus", "--down-rate"), float, 1.0, "lattice down rate", {}),
        (("--t-grid",), _floats, [0.5, 1.0, 2.0, 4.0], "comma-separated times", {}),
        (("--replicas",), int, 10000, "coupled replicas", {}),
        (("--seed",), int, 0, "master seed", {}),
    ],
    "wasserstein": [
        (("--model",), str, "lattice", "sample laws",
         {"choices": ["hypercube", "lattice", "scheme"]}),
        (("--alpha",), float, 1.2, "hypercube rate of sample A", {}),
        (("--beta",), float, 1.0, "hypercube rate of sample B", {}),
        (("--rates-a",), _floats, [1.2, 1.0], "lattice rates j+,j- of sample A", {}),
        (("--rates-b",), _floats, [1.0, 1.0], "lattice rates h+,h- of sample B", {}),
        (("--n", "--steps"), int, 10, "scheme steps N (sample A; B is the unit lattice bridge)", {}),
        (("--samples",), int, 256, "sample size per law", {}),
        (("--repetitions",), int, 20, "independent repetitions", {}),
        (("--bootstrap",), int, 50, "bootstrap resamples per repetition", {}),
        (("--seed",), int, 0, "master seed", {}),
    ],
    "bound": [
        (("--variant",), str, "scheme", "bound to evaluate",
         {"choices": ["poisson", "hypercube", "lattice", "hypercube-d", "lattice-d",
                      "reversible", "constant-speed", "scheme", "nonhomogeneous"]}),
        (("--lam",), float, 1.0, "first product (poisson)", {}),
        (("--mu",), float, 1.0, "second product (poisson) or upper bound mu (constant-speed)", {}),
        (("--nu",), float, 1.0, "lower bound nu (constant-speed)", {}),
        (("--alpha",), _floats, [1.0], "hypercube rate(s) alpha", {}),
        (("--beta",), _floats, [1.0], "hypercube rate(s) beta", {}),
        (("--j-plus",), _floats, [1.0], "lattice up rate(s)", {}),
        (("--j-minus",), _floats, [1.0], "lattice down rate(s)", {}),
        (("--h-plus",), _floats, [1.0], "comparison up rate(s)", {}),
        (("--h-minus",), _floats, [1.0], "comparison down rate(s)", {}),
        (("--kappa", "--rate-increment"), float, 0.5, "increment bound kappa", {}),
        (("--n", "--steps"), int, 10, "scheme steps N", {}),
        (("--rates",), str, "reversible", "rate family (nonhomogeneous)",
         {"choices": ["unit", "reversible", "constant-speed"]}),
        (("--ratio",), float, 2.0, "mu/nu of the constant-speed family", {}),
        (("--functional",), str, "sup", "inner functional (nonhomogeneous)",
         {"choices": ["sup", "integral"]}),
        (("--samples",), int, 2000, "bridge draws (nonhomogeneous)", {}),
        (("--seed",), int, 0, "master seed", {}),
    ],
    "scheme-check": [
        (("--n", "--steps"), int, 10, "scheme steps N", {}),
        (("--samples",), int, 256, "sample size per law", {}),
        (("--repetitions",), int, 20, "independent repetitions", {}),
        (("--bootstrap",), int, 50, "bootstrap resamples", {}),
        (("--t-end", "--horizon"), float, 20.0, "burn-in horizon of the scheme chain", {}),
        (("--replicas",), int, 2000, "chain replicas for the mean jump count", {}),
        (("--seed",), int, 0, "master seed", {}),
    ],
    "filtering": [
        (("--theorem",), str, "auto", "which bound", {"choices": ["auto", "1", "2"]}),
        (("--alpha",), float, 1.0, "observation strength alpha", {}),
        (("--T", "--horizon"), float, 1.0, "time horizon T", {}),
        (("--gamma", "--decay-exponent"), float, 0.5, "decay exponent gamma of b'", {}),
        (("--K",), float, 1.0, "bound K on b'", {}),
        (("--M",), float, 1.0, "bound M on b''", {}),
        (("--b0",), float, 0.0, "value b(0)", {}),
        (("--observation",), str, "", "two-column t,z CSV (empty: z = 0)", {}),
        (("--grid-size",), int, 256, "grid for the sup moment", {}),
        (("--replicas",), int, 10000, "Monte Carlo paths for the sup moment", {}),
        (("--seed",), int, 0, "master seed", {}),
    ],
}


def _dest(flags) -> str:
    return flags[0].lstrip("-").replace("-", "_")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bridge-stein", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="INI file with one section per command")
    parser.add_argument("--output", "-o", help="output path (default: standard output)")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, specs in _SPECS.items():
        p = sub.add_parser(name, argument_default=argparse.SUPPRESS)
        p.add_argument("--output", "-o", help="output path (default: standard output)")
        for flags, typ, default, help_text, extra in specs:
            shown = ",".join(map(str, default)) if isinstance(default, list) else default
            p.add_argument(*flags, dest=_dest(flags), type=typ,
                           help=f"{help_text} (default: {shown})", **extra)
    return parser


def resolve_config(command: str, flags: dict, config_path: str | None) -> dict:
    """Merge defaults, INI file and flags, in increasing priority."""
    specs = _SPECS[command]
    resolved = {_dest(f): d for f, _, d, _, _ in specs}
    types = {_dest(f): t for f, t, _, _, _ in specs}
    choices = {_dest(f): e.get("choices") for f, _, _, _, e in specs}
    if config_path:
        ini = configparser.ConfigParser()
        try:
            with open(config_path) as fh:
                ini.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        section = ini[command] if ini.has_section(command) else ini.defaults()
        for key, raw in section.items():
            dest = key.replace("-", "_")
            if dest not in resolved:
                if ini.has_section(command) and key in ini[command] and key not in ini.defaults():
                    raise ConfigError(f"unknown key {key!r} in section [{command}]")
                continue
            try:
                value = types[dest](raw)
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise ConfigError(f"bad value for {key!r}: {raw!r}") from exc
            if choices[dest] and value not in choices[dest]:
                raise ConfigError(f"{key!r} must be one of {choices[dest]}")
            resolved[dest] = value
    for key, value in flags.items():
        if key in resolved:
            resolved[key] = value
    return resolved


def _provenance(command: str, cfg: dict) -> dict:
    return {"tool": "bridge-stein", "version": __version__, "command": command,
            "config": cfg, "seed": cfg.get("seed")}


def _dump_json(prov: dict, body: dict) -> str:
    return json.dumps({"provenance": prov, **body}, indent=2, allow_nan=True) + "\n"


def _rate_family(cfg) -> RateFamily:
    name = cfg["rates"]
    if name == "unit":
        return RateFamily.unit()
    if name == "reversible":
        return RateFamily.reversible_step(cfg["kappa"])
    return RateFamily.constant_speed_alternating(cfg["ratio"])


def _positive(cfg, *keys):
    for k in keys:
        if not cfg[k] > 0:
            raise ConfigError(f"{k} must be positive")


def _cmd_sample(cfg, prov) -> str:
    _positive(cfg, "replicas")
    model = cfg["model"]
    if model == "hypercube":
        variant, initial = Hypercube(cfg["alpha"]), HypercubeConfig()
    elif model == "lattice":
        variant, initial = Lattice(cfg["j_plus"], cfg["j_minus"]), LatticeConfig()
    elif model == "poisson":
        variant, initial = PoissonDiag(cfg["lam"]), 0
    elif model == "scheme":
        variant, initial = Scheme(cfg["n"]), LatticeConfig()
    else:
        variant, initial = Nonhomogeneous(_rate_family(cfg)), LatticeConfig()
    if cfg["exact"]:
        if model in ("poisson", "nonhomogeneous"):
            raise ConfigError("--exact supports hypercube, lattice and scheme")
        configs = []
        for k in range(cfg["replicas"]):
            gen = replica_generator(cfg["seed"], k)
            if model == "scheme":
                configs.append(sample_scheme_bridge_exact(cfg["n"], gen))
            else:
                configs.append(sample_bridge_exact(variant, gen))
        lines = [json.dumps({"provenance": prov})]
        lines += [json.dumps(config_to_dict(c)) for c in configs]
        return "\n".join(lines) + "\n"
    params = ChainParams(variant, cfg["t_end"], cfg["seed"])
    if cfg["trajectory"]:
        traj = simulate(ChainParams(variant, cfg["t_end"], replica_generator(cfg["seed"], 0)),
                        initial)
        return json.dumps({"provenance": prov}) + "\n" + traj.to_jsonl()
    keep = cfg["format"] == "jsonl" and model != "poisson"
    summary = run_ensemble(params, initial, cfg["replicas"], keep_states=keep)
    if cfg["format"] == "csv":
        summary.header = prov
        return summary.to_csv()
    lines = [json.dumps({"provenance": prov})]
    if model == "poisson":
        lines += [json.dumps({"n": int(n)}) for n in summary.sizes]
    else:
        lines += [json.dumps(config_to_dict(c)) for c in summary.final_states]
    return "\n".join(lines) + "\n"


def _cmd_couple(cfg, prov) -> str:
    if cfg["model"] == "hypercube":
        variant = Hypercube(cfg["alpha"])
    else:
        variant = Lattice(cfg["j_plus"], cfg["j_minus"])
    if cfg["replicas"] < 100:
        raise ConfigError("replicas must be >= 100")
    curve = estimate_contraction(variant, cfg["t_grid"], cfg["replicas"], cfg["seed"])
    return curve.to_csv(header=prov)


def _w1_repetitions(draw_a: Callable, draw_b: Callable, cfg) -> dict:
    n = cfg["samples"]
    if not 1 <= n <= 512:
        raise ConfigError("samples must be between 1 and 512")
    if cfg["repetitions"] < 1:
        raise ConfigError("repetitions must be >= 1")
    estimates, ses = [], []
    for rep in range(cfg["repetitions"]):
        a = draw_a(replica_generator(cfg["seed"], 3 * rep), n)
        b = draw_b(replica_generator(cfg["seed"], 3 * rep + 1), n)
        res = empirical_w1(SampleSet(a), SampleSet(b), bootstrap=cfg["bootstrap"],
                           seed=replica_generator(cfg["seed"], 3 * rep + 2))
        estimates.append(res.w1)
        ses.append(res.se)
    est = np.array(estimates)
    se = np.array(ses)
    return {"w1": float(est.mean()), "se": float(se.mean()), "n": n,
            "repetitions": cfg["repetitions"], "estimates": estimates, "bootstrap_se": ses,
            "max_estimate_minus_2se": float((est - 2 * se).max())}


def _cmd_wasserstein(cfg, prov) -> str:
    model = cfg["model"]
    if model == "hypercube":
        va, vb = Hypercube(cfg["alpha"]), Hypercube(cfg["beta"])
        bound = bound_homogeneous("hypercube", {"alpha": cfg["alpha"], "beta": cfg["beta"]})
        draw_a = lambda g, n: sample_bridge_exact(va, g, n)
    elif model == "lattice":
        if len(cfg["rates_a"]) != 2 or len(cfg["rates_b"]) != 2:
            raise ConfigError("--rates-a and --rates-b take two values each")
        va, vb = Lattice(*cfg["rates_a"]), Lattice(*cfg["rates_b"])
        bound = bound_homogeneous("lattice", {
            "j_plus": va.j_plus, "j_minus": va.j_minus,
            "h_plus": vb.j_plus, "h_minus": vb.j_minus})
        draw_a = lambda g, n: sample_bridge_exact(va, g, n)
    else:
        vb = Lattice(1.0, 1.0)
        bound = bound_scheme(cfg["n"])
        draw_a = lambda g, n: sample_scheme_bridge_exact(cfg["n"], g, n)
    draw_b = lambda g, n: sample_bridge_exact(vb, g, n)
    body = _w1_repetitions(draw_a, draw_b, cfg)
    body["bound"] = bound.value
    body["bound_holds"] = body["max_estimate_minus_2se"] <= bound.value
    return _dump_json(prov, body)


def _one(values, name):
    if len(values) != 1:
        raise ConfigError(f"--{name.replace('_', '-')} takes a single value for this variant")
    return values[0]


def _cmd_bound(cfg, prov) -> str:
    v = cfg["variant"]
    if v == "poisson":
        rep = bound_homogeneous("poisson", {"lam": cfg["lam"], "mu": cfg["mu"]})
    elif v == "hypercube":
        rep = bound_homogeneous("hypercube", {"alpha": _one(cfg["alpha"], "alpha"),
                                              "beta": _one(cfg["beta"], "beta")})
    elif v == "lattice":
        rep = bound_homogeneous("lattice", {k: _one(cfg[k], k) for k in
                                            ("j_plus", "j_minus", "h_plus", "h_minus")})
    elif v == "hypercube-d":
        rep = bound_homogeneous("hypercube_d", {"alpha": cfg["alpha"], "beta": cfg["beta"]})
    elif v == "lattice-d":
        rep = bound_homogeneous("lattice_d", {k: cfg[k] for k in
                                              ("j_plus", "j_minus", "h_plus", "h_minus")})
    elif v == "reversible":
        rep = bound_reversible(cfg["kappa"])
    elif v == "constant-speed":
        rep = bound_constant_speed(cfg["mu"], cfg["nu"])
    elif v == "scheme":
        rep = bound_scheme(cfg["n"])
    else:
        rep = estimate_bound_nonhomogeneous(_rate_family(cfg), cfg["samples"], cfg["seed"],
                                            functional=cfg["functional"])
    return _dump_json(prov, rep.to_dict())


def _cmd_scheme_check(cfg, prov) -> str:
    N = cfg["n"]
    unit = Lattice(1.0, 1.0)
    body = _w1_repetitions(lambda g, n: sample_scheme_bridge_exact(N, g, n),
                           lambda g, n: sample_bridge_exact(unit, g, n), cfg)
    bound = bound_scheme(N).value
    summary = run_ensemble(ChainParams(Scheme(N), cfg["t_end"], cfg["seed"]), LatticeConfig(),
                           cfg["replicas"])
    mean = float(summary.sizes.mean())
    se = float(summary.sizes.std(ddof=1) / math.sqrt(len(summary.sizes)))
    limit = 1.0 / (1.0 - 2.0 / N)
    body.update({"bound": bound, "bound_holds": body["max_estimate_minus_2se"] <= bound,
                 "mean_up_jumps": mean, "mean_up_jumps_se": se,
                 "mean_up_jumps_limit": limit, "mean_holds": mean <= limit + 3 * se})
    return _dump_json(prov, body)


def _cmd_filtering(cfg, prov) -> str:
    model = LinearModel(cfg["alpha"], cfg["T"])
    drift = DriftSpec(cfg["b0"], cfg["K"], cfg["gamma"], cfg["M"])
    if cfg["observation"]:
        try:
            z = ObservationPath.from_csv(cfg["observation"])
        except OSError as exc:
            raise ConfigError(f"cannot read observation: {exc}") from exc
    else:
        z = ObservationPath.zero(cfg["T"])
    theorem = cfg["theorem"]
    if theorem == "auto":
        theorem = "1" if drift.gamma >= 0.5 else "2"
    mc = {"grid_size": cfg["grid_size"], "replicas": cfg["replicas"], "seed": cfg["seed"]}
    fn = bound_theorem1 if theorem == "1" else bound_theorem2
    return _dump_json(prov, fn(model, z, drift, mc).to_dict())


_COMMANDS = {"sample": _cmd_sample, "couple": _cmd_couple, "wasserstein": _cmd_wasserstein,
             "bound": _cmd_bound, "scheme-check": _cmd_scheme_check,
             "filtering": _cmd_filtering}


def run_experiment(command: str, cfg: dict) -> str:
    """Run ``command`` with a fully resolved configuration; return the output text."""
    prov = _provenance(command, cfg)
    return _COMMANDS[command](cfg, prov)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    ns = vars(args).copy()
    command = ns.pop("command")
    config_path = ns.pop("config", None)
    output = ns.pop("output", None)
    try:
        cfg = resolve_config(command, ns, config_path)
        text = run_experiment(command, cfg)
    except (MajorantViolation, NumericalFailure, ArithmeticError) as exc:
        print(f"bridge-stein: numerical failure: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, ValueError, TypeError, KeyError) as exc:
        print(f"bridge-stein: configuration error: {exc}", file=sys.stderr)
        return 2
    if output:
        with open(output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
