"""Command-line driver.

Every option can also be given in a JSON config file (``--config``) using the
option name with underscores as key, e.g. ``{"n_left": 4, "t_max": 10}``.
Explicit flags override the file.  A JSON result written by this tool can be
passed back as ``--config`` to rerun the same experiment.

Exit codes: 0 success, 2 usage error, 3 I/O error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CapacityError, ExclusivityError, NoPeakError, NumericalError
from .experiments import (NoiseSpec, RouterPlan, asymmetric_sweep, default_jm_grid,
                          default_t_max, optimize_jm, optimize_jm_refined, regime_comparison,
                          route, run_dephasing, run_quench, run_random_field, scaling_study)
from .foursite import FourSpinParams, four_spin_concurrence, four_spin_optimal
from .model import ChainSpec, CompositeSpec, impurity_coupling_for
from .output import FORMATS, emit
from .solver import SolverConfig

log = logging.getLogger(__name__)

COMMANDS = ("four-spin", "quench", "optimize", "scaling", "asymmetric", "regimes", "noise",
            "router")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERICAL = 0, 2, 3, 4

# keys that describe where output goes rather than what is computed
_OUTPUT_KEYS = {"out", "format", "config"}


class UsageError(Exception):
    pass


class InputError(OSError):
    """An input file could not be read."""


@dataclass
class RunConfig:
    command: str
    n_left: int = 4
    n_right: int = 4
    j2: float = 0.0
    j_prime_left: float | None = None
    j_prime_right: float | None = None
    jm: float | None = None
    jm_grid: str | None = None
    refine: float | None = None
    t_max: float | None = None
    dt: float = 0.05
    j1_prime: float = 1.0
    j2_prime: float = 1.0
    ns: str = "8,12,16"
    n: int = 12
    splits: str = "4,6,8"
    j2_kondo: float = 0.0
    j2_dimer: float = 0.42
    alpha: float | None = None
    kind: str = "dephasing"
    gamma: float = 0.005
    h_mag: float = 0.05
    samples: int = 100
    field_distribution: str = "fixed"
    nodes: str = "A=4,B=4,C=4,D=4"
    pairs: str = "A-B,C-D"
    seed: int = 0
    threads: int = 1
    format: str = "csv"
    out: str | None = None
    config: str | None = None
    extra: dict = field(default_factory=dict, repr=False)

    def reproducible_dict(self) -> dict:
        return {k: v for k, v in dataclasses.asdict(self).items()
                if k not in _OUTPUT_KEYS and k != "extra"}

    # derived, validated views -------------------------------------------------
    def int_list(self, name: str) -> list[int]:
        raw = getattr(self, name)
        try:
            return [int(x) for x in str(raw).split(",") if x.strip()]
        except ValueError:
            raise UsageError(f"--{name.replace('_', '-')} expects comma-separated integers") from None

    def grid(self) -> list[float]:
        if self.jm_grid is None:
            return [float(x) for x in default_jm_grid()]
        text = str(self.jm_grid)
        try:
            if ":" in text:
                lo, hi, step = (float(x) for x in text.split(":"))
                if step <= 0 or hi < lo:
                    raise ValueError
                return [float(x) for x in np.round(np.arange(lo, hi + step * 1e-6, step), 10)]
            return [float(x) for x in text.split(",") if x.strip()]
        except ValueError:
            raise UsageError("--jm-grid expects LO:HI:STEP or a comma-separated list") from None

    def chain(self, n_sites: int, j_prime: float | None, j2: float | None = None) -> ChainSpec:
        j2 = self.j2 if j2 is None else j2
        if n_sites % 2 or n_sites < 2:
            raise UsageError(f"chain lengths must be even and >= 2, got {n_sites}")
        if j_prime is None:
            try:
                j_prime = impurity_coupling_for(n_sites)
            except KeyError as exc:
                raise UsageError(f"{exc.args[0]}; pass the impurity coupling explicitly") from None
        try:
            return ChainSpec(n_sites, j_prime, j2)
        except ValueError as exc:
            raise UsageError(str(exc)) from None

    def composite(self) -> CompositeSpec:
        if self.jm is None:
            raise UsageError("--jm is required for this command")
        left = self.chain(self.n_left, self.j_prime_left)
        right = self.chain(self.n_right, self.j_prime_right)
        try:
            return CompositeSpec(left, right, self.jm)
        except ValueError as exc:
            raise UsageError(str(exc)) from None

    def solver(self) -> SolverConfig:
        try:
            return SolverConfig(dt=self.dt)
        except ValueError as exc:
            raise UsageError(str(exc)) from None

    def horizon(self, n_sites: int) -> float:
        t = default_t_max(n_sites, self.j2) if self.t_max is None else self.t_max
        if not t > 0:
            raise UsageError("--t-max must be positive")
        return t


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    common = argparse.ArgumentParser(add_help=False, argument_default=S)
    g = common.add_argument_group("common options")
    g.add_argument("--config", help="JSON file with option values (flags take precedence)")
    g.add_argument("--format", choices=FORMATS, help="output format (default csv)")
    g.add_argument("--out", help="output path (default: standard output)")
    g.add_argument("--seed", type=int, help="64-bit seed for stochastic runs (default 0)")
    g.add_argument("--threads", type=int, help="worker processes, 0 = one per CPU (default 1)")
    g.add_argument("--dt", type=float, help="trace sampling interval in 1/J1 (default 0.05)")
    g.add_argument("--t-max", type=float, help="evolution horizon in 1/J1 (default: size based)")
    g.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    chain = argparse.ArgumentParser(add_help=False, argument_default=S)
    c = chain.add_argument_group("chain options")
    c.add_argument("--n-left", type=int, help="left chain length (default 4)")
    c.add_argument("--n-right", type=int, help="right chain length (default 4)")
    c.add_argument("--j2", type=float, help="next-nearest coupling J2/J1 (default 0)")
    c.add_argument("--j-prime-left", type=float, help="left impurity coupling (default: table)")
    c.add_argument("--j-prime-right", type=float, help="right impurity coupling (default: table)")

    grid = argparse.ArgumentParser(add_help=False, argument_default=S)
    grid.add_argument("--jm-grid", help="LO:HI:STEP or list of couplings (default 0.4:1.6:0.02)")
    grid.add_argument("--refine", type=float,
                      help="after the sweep, rescan around the optimum with this step")

    parser = argparse.ArgumentParser(prog="kondo-router", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("four-spin", parents=[common], argument_default=S,
                       help="resonant two-singlet model against its closed form")
    p.add_argument("--j1-prime", type=float, help="coupling of spins 1,2 (default 1)")
    p.add_argument("--j2-prime", type=float, help="coupling of spins 3,4 (default 1)")

    p = sub.add_parser("quench", parents=[common, chain], argument_default=S,
                       help="boundary concurrence after switching on the junction")
    p.add_argument("--jm", type=float, help="junction coupling J_m (required)")

    sub.add_parser("optimize", parents=[common, chain, grid], argument_default=S,
                   help="sweep J_m and report the best first peak")

    p = sub.add_parser("scaling", parents=[common, grid], argument_default=S,
                       help="optimal J_m, Phi(N) and t* for symmetric chains")
    p.add_argument("--ns", help="total lengths, comma separated (default 8,12,16)")
    p.add_argument("--alpha", type=float, help="cloud constant for the asymptotic coupling")

    p = sub.add_parser("asymmetric", parents=[common, grid], argument_default=S,
                       help="optimum for unequal left/right lengths")
    p.add_argument("--n", type=int, help="total length (default 12)")
    p.add_argument("--splits", help="left lengths, comma separated (default 4,6,8)")
    p.add_argument("--j2", type=float, help="next-nearest coupling J2/J1 (default 0)")

    p = sub.add_parser("regimes", parents=[common, grid], argument_default=S,
                       help="Kondo vs dimer comparison table")
    p.add_argument("--ns", help="total lengths, comma separated (default 8,12,16)")
    p.add_argument("--j2-kondo", type=float, help="J2 in the Kondo regime (default 0)")
    p.add_argument("--j2-dimer", type=float, help="J2 in the dimer regime (default 0.42)")

    p = sub.add_parser("noise", parents=[common, chain], argument_default=S,
                       help="quench under dephasing or random local fields")
    p.add_argument("--jm", type=float, help="junction coupling J_m (required)")
    p.add_argument("--kind", choices=("dephasing", "random_field"), help="default dephasing")
    p.add_argument("--gamma", type=float, help="dephasing rate per site (default 0.005)")
    p.add_argument("--h-mag", type=float, help="local field magnitude (default 0.05)")
    p.add_argument("--samples", type=int, help="trajectories or realizations (default 100)")
    p.add_argument("--field-distribution", choices=("fixed", "gaussian"),
                   help="field magnitudes: fixed or gaussian components (default fixed)")

    p = sub.add_parser("router", parents=[common, grid], argument_default=S,
                       help="connect disjoint node pairs simultaneously")
    p.add_argument("--nodes", help="NAME=LENGTH list (default A=4,B=4,C=4,D=4)")
    p.add_argument("--pairs", help="NAME-NAME list (default A-B,C-D)")
    p.add_argument("--jm", type=float, help="fixed junction coupling for every pair")
    p.add_argument("--j2", type=float, help="next-nearest coupling J2/J1 (default 0)")
    return parser


def _load_config_file(path: str) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read config file {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path} is not valid JSON: {exc}") from None
    if isinstance(data, dict) and isinstance(data.get("config"), dict) and "type" in data:
        data = data["config"]  # a result document written by this tool
    if not isinstance(data, dict):
        raise UsageError("config file must contain a JSON object")
    return {k.replace("-", "_"): v for k, v in data.items()}


def parse_config(argv: list[str] | None = None) -> RunConfig:
    """Flags > config file > defaults.  Raises :class:`UsageError`."""
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code == 0:
            raise
        raise UsageError("invalid command line") from None
    flags = {k: v for k, v in vars(ns).items() if k != "verbose"}
    known = {f.name for f in dataclasses.fields(RunConfig)} - {"extra"}
    values: dict = {}
    if "config" in flags:
        file_values = _load_config_file(flags["config"])
        unknown = sorted(set(file_values) - known)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        if file_values.get("command", flags["command"]) != flags["command"]:
            raise UsageError(
                f"config file is for command {file_values['command']!r}, not {flags['command']!r}"
            )
        values.update(file_values)
    values.update(flags)
    cfg = RunConfig(**values)
    _validate(cfg)
    logging.basicConfig(level=logging.INFO if getattr(ns, "verbose", False) else logging.WARNING,
                        format="%(message)s", stream=sys.stderr)
    return cfg


def _validate(cfg: RunConfig) -> None:
    if cfg.command not in COMMANDS:
        raise UsageError(f"unknown command {cfg.command!r}")
    if cfg.format not in FORMATS:
        raise UsageError(f"unknown format {cfg.format!r}")
    if cfg.threads < 0:
        raise UsageError("--threads must be >= 0")
    if not (0 <= cfg.seed < 2**64):
        raise UsageError("--seed must be an unsigned 64-bit integer")
    cfg.solver()
    if cfg.command in ("quench", "noise"):
        cfg.composite()
    if cfg.command == "optimize":
        cfg.chain(cfg.n_left, cfg.j_prime_left)
        cfg.chain(cfg.n_right, cfg.j_prime_right)
        cfg.grid()
    if cfg.command == "four-spin" and (cfg.j1_prime <= 0 or cfg.j2_prime <= 0):
        raise UsageError("four-spin couplings must be positive")
    if cfg.command in ("scaling", "regimes"):
        ns = cfg.int_list("ns")
        if any(n % 4 for n in ns):
            raise UsageError("--ns entries must be multiples of 4 (two equal even chains)")
        if cfg.command == "scaling" and len(ns) < 3:
            raise UsageError("scaling needs at least 3 lengths")
        for n in ns:
            cfg.chain(n // 2, None, 0.0)
    if cfg.command == "asymmetric":
        for nl in cfg.int_list("splits"):
            if nl % 2 or not 2 <= nl <= cfg.n - 2:
                raise UsageError(f"invalid split {nl} for N={cfg.n}")
            cfg.chain(nl, None)
            cfg.chain(cfg.n - nl, None)
    if cfg.command == "noise":
        if cfg.samples < 1:
            raise UsageError("--samples must be >= 1")
        try:
            _noise_spec(cfg)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    if cfg.command == "router":
        _router_plan(cfg)


def _noise_spec(cfg: RunConfig) -> NoiseSpec:
    if cfg.kind == "dephasing":
        return NoiseSpec("dephasing", gamma=cfg.gamma, n_samples=cfg.samples, seed=cfg.seed)
    return NoiseSpec("random_field", h_mag=cfg.h_mag, n_samples=cfg.samples, seed=cfg.seed,
                     field_distribution=cfg.field_distribution)


def _router_plan(cfg: RunConfig) -> RouterPlan:
    nodes = {}
    for item in str(cfg.nodes).split(","):
        name, _, length = item.partition("=")
        try:
            nodes[name.strip()] = cfg.chain(int(length), None)
        except ValueError:
            raise UsageError(f"bad node entry {item!r}; expected NAME=LENGTH") from None
    pairs = []
    for item in str(cfg.pairs).split(","):
        a, sep, b = item.partition("-")
        if not sep:
            raise UsageError(f"bad pair entry {item!r}; expected NAME-NAME")
        pairs.append((a.strip(), b.strip()))
    jm = {p: cfg.jm for p in pairs} if cfg.jm is not None else {p: cfg.grid() for p in pairs}
    plan = RouterPlan(nodes, pairs, jm)
    try:
        plan.validate()
    except ExclusivityError as exc:
        raise UsageError(str(exc)) from None
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None
    return plan


def _optimize(cfg: RunConfig, left: ChainSpec, right: ChainSpec, t_max: float, solver):
    if cfg.refine:
        return optimize_jm_refined(left, right, cfg.grid(), t_max, solver, fine_step=cfg.refine,
                                   workers=cfg.threads)
    return optimize_jm(left, right, cfg.grid(), t_max, solver, workers=cfg.threads)


def run(cfg: RunConfig):
    """Dispatch a validated configuration and return the experiment result."""
    solver = cfg.solver()
    cmd = cfg.command
    log.info("running %s", cmd)
    if cmd == "four-spin":
        params = FourSpinParams.resonant(cfg.j1_prime, cfg.j2_prime)
        jm, t_star = four_spin_optimal(cfg.j1_prime, cfg.j2_prime)
        trace = run_quench(params.composite(), cfg.t_max or 4 * t_star, solver)
        exact = np.array([four_spin_concurrence(jm, t) for t in trace.times])
        trace.metadata.update(t_star_exact=t_star,
                              max_deviation_from_closed_form=float(
                                  np.max(np.abs(exact - trace.concurrence))))
        return trace
    if cmd == "quench":
        comp = cfg.composite()
        return run_quench(comp, cfg.horizon(comp.n_sites), solver)
    if cmd == "optimize":
        left = cfg.chain(cfg.n_left, cfg.j_prime_left)
        right = cfg.chain(cfg.n_right, cfg.j_prime_right)
        return _optimize(cfg, left, right, cfg.horizon(left.n_sites + right.n_sites), solver)
    if cmd == "scaling":
        return scaling_study(cfg.int_list("ns"), solver, jm_grid=cfg.grid(),
                             fine_step=cfg.refine, alpha=cfg.alpha, workers=cfg.threads)
    if cmd == "asymmetric":
        return asymmetric_sweep(cfg.n, cfg.int_list("splits"), solver, jm_grid=cfg.grid(),
                                t_max=cfg.t_max, fine_step=cfg.refine, j2=cfg.j2,
                                workers=cfg.threads)
    if cmd == "regimes":
        return regime_comparison(cfg.int_list("ns"), cfg.j2_kondo, cfg.j2_dimer, solver,
                                 jm_grid=cfg.grid(), fine_step=cfg.refine, workers=cfg.threads)
    if cmd == "noise":
        comp = cfg.composite()
        noise = _noise_spec(cfg)
        fn = run_dephasing if noise.kind == "dephasing" else run_random_field
        return fn(comp, noise, cfg.horizon(comp.n_sites), solver, workers=cfg.threads)
    if cmd == "router":
        plan = _router_plan(cfg)
        n_max = max(plan.nodes[a].n_sites + plan.nodes[b].n_sites for a, b in plan.pairs)
        return route(plan, cfg.horizon(n_max), solver, workers=cfg.threads)
    raise UsageError(f"unknown command {cmd!r}")


def main(argv: list[str] | None = None) -> int:
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        print(f"kondo-router: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputError as exc:
        print(f"kondo-router: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        result = run(cfg)
    except (UsageError, CapacityError) as exc:
        print(f"kondo-router: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, NoPeakError) as exc:
        print(f"kondo-router: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    try:
        text = emit(result, cfg.format, cfg.out, config=cfg.reproducible_dict())
    except OSError as exc:
        print(f"kondo-router: cannot write {cfg.out}: {exc.strerror}", file=sys.stderr)
        return EXIT_IO
    if cfg.out is None:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
