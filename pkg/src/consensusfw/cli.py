"""Configuration-driven command line entry point.

Three subcommands:

* ``run <config>``            -- build a problem from a config file, run
  the solver, write the trace CSV and print a final-record summary.
* ``gen <seed> <n> <radius> <out>`` -- generate a matrix-completion
  instance dump (deterministic for a fixed seed).
* ``check <suite>``           -- run the built-in oracle/bound
  verification suites (``oracles``, ``bounds`` or ``all``).

Exit codes: 0 success, 1 check-suite failure, 2 configuration error,
3 solver or generation error.  Set ``CONSENSUSFW_LOG`` (e.g. ``debug``)
for logging verbosity.

Config files are line-oriented ``key = value`` text under ``[section]``
headers; unknown sections or keys are rejected.  See the README for the
full schema and an example.
"""

import argparse
import configparser
import io
import logging
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import diagnostics, matcomp, problems, solvers
from .graph import GraphError, read_graph
from .sets import Box, L1Ball, NuclearBallSym

log = logging.getLogger("consensusfw")


class ConfigError(ValueError):
    """Invalid run configuration (reported with exit code 2)."""


_SCHEMA = {
    "problem": {"kind", "n_nodes", "radius", "noise_std", "theta",
                "graph_file", "x_set", "y_set", "targets_seed"},
    "run": {"algorithm", "r0", "max_iter", "mode", "kappa", "log_every",
            "init", "seed"},
    "output": {"path"},
    "bounds": {"rho", "reference"},
}


@dataclass(frozen=True)
class RunConfig:
    kind: str
    algorithm: str
    r0: float = 1.0
    max_iter: int = 1000
    mode: str = "exact"
    kappa: float | None = None
    log_every: int = 1
    init: str = "canonical"
    seed: int = 0
    out_path: str = "trace.csv"
    rho: float = 0.0
    reference: object = "auto"
    n_nodes: int = 10
    radius: float = 0.6
    noise_std: float = 0.1
    theta: float | None = None
    graph_file: str | None = None
    x_set: str | None = None
    y_set: str | None = None
    targets_seed: int = 0


def parse_config(text):
    """Parse and validate a config file into a :class:`RunConfig`."""
    parser = configparser.ConfigParser(interpolation=None,
                                       inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unparseable config: {exc}")
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key in parser[section]:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")

    def get(section, key, default=None):
        return parser.get(section, key, fallback=default)

    def get_typed(section, key, cast, default):
        raw = get(section, key)
        if raw is None:
            return default
        try:
            return cast(raw)
        except ValueError:
            raise ConfigError(f"{key} must be a {cast.__name__}, got {raw!r}")

    kind = get("problem", "kind")
    if kind not in ("quadratic-toy", "matcomp", "custom"):
        raise ConfigError(
            "problem kind must be quadratic-toy, matcomp or custom")
    mode = get("run", "mode", "exact")
    if mode not in ("exact", "inexact"):
        raise ConfigError("mode must be exact or inexact")
    kappa = get_typed("run", "kappa", float, None)
    if mode == "inexact" and (kappa is None or kappa <= 0):
        raise ConfigError("inexact mode requires kappa > 0")
    if mode == "exact" and kappa is not None:
        raise ConfigError("kappa is only meaningful in inexact mode")
    r0 = get_typed("run", "r0", float, 1.0)
    if r0 <= 0:
        raise ConfigError("r0 must be positive")
    max_iter = get_typed("run", "max_iter", int, 1000)
    if max_iter < 0:
        raise ConfigError("max_iter must be nonnegative")
    log_every = get_typed("run", "log_every", int, 1)
    if log_every < 1:
        raise ConfigError("log_every must be a positive integer")
    init = get("run", "init", "canonical")
    if init not in ("canonical", "lmo-of-ones"):
        raise ConfigError("init must be canonical or lmo-of-ones")
    algorithm = get("run", "algorithm")
    if algorithm not in ("rc", "rc-co"):
        raise ConfigError("algorithm must be rc or rc-co")

    theta_raw = get("problem", "theta", "auto")
    if theta_raw == "auto":
        theta = None
    else:
        try:
            theta = float(theta_raw)
        except ValueError:
            raise ConfigError(f"theta must be auto or a float, "
                              f"got {theta_raw!r}")
        if theta <= 0:
            raise ConfigError("theta must be positive")
    noise_std = get_typed("problem", "noise_std", float, 0.1)
    if noise_std < 0:
        raise ConfigError("noise_std must be nonnegative")

    reference = get("bounds", "reference", "auto")
    if reference not in ("auto", "none"):
        try:
            reference = float(reference)
        except ValueError:
            raise ConfigError(
                f"reference must be auto, none or a float, got {reference!r}")
    rho = get_typed("bounds", "rho", float, 0.0)
    if rho < 0:
        raise ConfigError("rho must be nonnegative")

    cfg = RunConfig(
        kind=kind,
        algorithm=algorithm,
        r0=r0,
        max_iter=max_iter,
        mode=mode,
        kappa=kappa,
        log_every=log_every,
        init=init,
        seed=get_typed("run", "seed", int, 0),
        out_path=get("output", "path", "trace.csv"),
        rho=rho,
        reference=reference,
        n_nodes=get_typed("problem", "n_nodes", int, 10),
        radius=get_typed("problem", "radius", float, 0.6),
        noise_std=noise_std,
        theta=theta,
        graph_file=get("problem", "graph_file"),
        x_set=get("problem", "x_set"),
        y_set=get("problem", "y_set"),
        targets_seed=get_typed("problem", "targets_seed", int, 0),
    )
    _check_problem_compatibility(cfg)
    return cfg


def _check_problem_compatibility(cfg):
    if cfg.kind == "custom":
        if cfg.graph_file is None or cfg.x_set is None:
            raise ConfigError("custom problems need graph_file and x_set")
    composite = (cfg.kind == "matcomp"
                 or (cfg.kind == "custom" and cfg.y_set is not None))
    if composite and cfg.algorithm != "rc-co":
        raise ConfigError(
            "composite problems (matcomp, custom with y_set) need "
            "algorithm = rc-co")
    if not composite and cfg.algorithm != "rc":
        raise ConfigError(
            "algorithm rc-co needs a composite problem (matcomp or "
            "custom with y_set)")


def serialize_config(cfg):
    """Canonical text form; parse(serialize(parse(t))) == parse(t)."""
    out = io.StringIO()
    out.write("[problem]\n")
    out.write(f"kind = {cfg.kind}\n")
    if cfg.kind == "matcomp":
        out.write(f"n_nodes = {cfg.n_nodes}\n")
        out.write(f"radius = {cfg.radius!r}\n")
        out.write(f"noise_std = {cfg.noise_std!r}\n")
        theta = "auto" if cfg.theta is None else repr(cfg.theta)
        out.write(f"theta = {theta}\n")
    if cfg.kind == "custom":
        out.write(f"graph_file = {cfg.graph_file}\n")
        out.write(f"x_set = {cfg.x_set}\n")
        if cfg.y_set is not None:
            out.write(f"y_set = {cfg.y_set}\n")
        out.write(f"targets_seed = {cfg.targets_seed}\n")
    out.write("\n[run]\n")
    out.write(f"algorithm = {cfg.algorithm}\n")
    out.write(f"r0 = {cfg.r0!r}\n")
    out.write(f"max_iter = {cfg.max_iter}\n")
    out.write(f"mode = {cfg.mode}\n")
    if cfg.kappa is not None:
        out.write(f"kappa = {cfg.kappa!r}\n")
    out.write(f"log_every = {cfg.log_every}\n")
    out.write(f"init = {cfg.init}\n")
    out.write(f"seed = {cfg.seed}\n")
    out.write("\n[output]\n")
    out.write(f"path = {cfg.out_path}\n")
    out.write("\n[bounds]\n")
    out.write(f"rho = {cfg.rho!r}\n")
    ref = cfg.reference if isinstance(cfg.reference, str) \
        else repr(cfg.reference)
    out.write(f"reference = {ref}\n")
    return out.getvalue()


def build_problem(cfg):
    if cfg.kind == "quadratic-toy":
        problem, _ = problems.quadratic_toy()
        return problem
    if cfg.kind == "matcomp":
        inst = matcomp.build_instance(cfg.seed, n_nodes=cfg.n_nodes,
                                      radius=cfg.radius,
                                      noise_std=cfg.noise_std,
                                      theta=cfg.theta)
        return matcomp.assemble_problem(inst)
    graph = read_graph(cfg.graph_file)
    return problems.custom_quadratic(graph, cfg.x_set, y_spec=cfg.y_set,
                                     targets_seed=cfg.targets_seed)


def _resolve_reference(cfg, problem):
    if cfg.reference == "none":
        return None
    if isinstance(cfg.reference, float):
        return cfg.reference
    try:
        ref = solvers.centralized_reference(problem)
    except (ValueError, NotImplementedError) as exc:
        log.warning("no reference available (%s); lemma residual is NaN",
                    exc)
        return None
    log.info("reference f* = %.12g (%s, certificate %.3g)", ref.f_star,
             ref.method, ref.certificate)
    return ref.f_star


def cmd_run(config_path):
    try:
        with open(config_path) as fh:
            text = fh.read()
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        cfg = parse_config(text)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        problem = build_problem(cfg)
        f_star = _resolve_reference(cfg, problem)
    except (GraphError, ValueError, RuntimeError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3
    solver_cfg = solvers.SolverConfig(
        r0=cfg.r0, max_iter=cfg.max_iter, kappa=cfg.kappa,
        init=cfg.init.replace("-", "_"), log_every=cfg.log_every,
        seed=cfg.seed)
    trace = solvers.run(problem, solver_cfg, rho=cfg.rho, f_star=f_star)
    trace.write_csv(cfg.out_path)
    if trace.error is not None:
        print(f"solver error: {trace.error}", file=sys.stderr)
        print(f"partial trace written to {cfg.out_path}", file=sys.stderr)
        return 3
    last = trace.records[-1]
    print(f"wrote {cfg.out_path} ({len(trace.records)} records)")
    print(f"final: k={last.k} f={last.f_value:.12g} "
          f"consensus_err={last.consensus_err:.6g} "
          f"feas_err={last.feas_err:.6g} "
          f"lemma1_residual={last.lemma1_residual:.6g}")
    return 0


def cmd_gen(seed, n_nodes, radius, out_path):
    try:
        inst = matcomp.build_instance(seed, n_nodes=n_nodes, radius=radius)
    except GraphError as exc:
        print(f"generation error: {exc}", file=sys.stderr)
        return 3
    matcomp.write_instance(inst, out_path)
    print(f"wrote {out_path} ({inst.graph.node_count} nodes, "
          f"{inst.graph.edge_count} edges, theta={inst.theta:.12g})")
    return 0


def _check_oracles(lmo_override=None):
    """Oracle verification suite; yields (name, passed, detail)."""
    rng = np.random.default_rng(2024)

    def call_lmo(s, c):
        return s.lmo(c) if lmo_override is None else lmo_override(s, c)

    box = Box(-1.0, 2.0, dim=6)
    vertices = np.array(np.meshgrid(*[[-1.0, 2.0]] * 6)).reshape(6, -1).T
    worst = 0.0
    for _ in range(1000):
        c = rng.standard_normal(6)
        worst = max(worst, float(c @ call_lmo(box, c))
                    - float(np.min(vertices @ c)))
    yield ("box lmo matches vertex enumeration (d=6, 1000 dirs)",
           worst <= 1e-9, f"worst gap {worst:.3e}")

    l1 = L1Ball(1.5, 7)
    verts = np.concatenate([1.5 * np.eye(7), -1.5 * np.eye(7)])
    worst = 0.0
    for _ in range(1000):
        c = rng.standard_normal(7)
        worst = max(worst, float(c @ call_lmo(l1, c))
                    - float(np.min(verts @ c)))
    yield ("l1 lmo matches vertex enumeration (d=7, 1000 dirs)",
           worst <= 1e-9, f"worst gap {worst:.3e}")

    ball = NuclearBallSym(1.0, 5)
    worst = 0.0
    for _ in range(200):
        a = rng.standard_normal((5, 5))
        sym = 0.5 * (a + a.T)
        lams, vecs = np.linalg.eigh(sym)
        best = -np.max(np.abs(lams))
        worst = max(worst, float(np.sum(sym * call_lmo(
            ball, sym.ravel()).reshape(5, 5))) - best)
    yield ("nuclear lmo matches dense eigendecomposition (n=5)",
           worst <= 1e-7, f"worst gap {worst:.3e}")

    feasible = True
    for s in (box, l1, ball):
        for _ in range(200):
            y = call_lmo(s, rng.standard_normal(s.dim))
            feasible = feasible and s.contains(y, 1e-9)
    yield ("lmo outputs are feasible", feasible, "membership at 1e-9")

    worst = 0.0
    for _ in range(200):
        c = rng.standard_normal(25)
        sym = c.reshape(5, 5)
        sym = 0.5 * (sym + sym.T)
        y, cert = ball.lmo_certified(sym.ravel(), 1e-4)
        lams = np.linalg.eigvalsh(sym)
        true_gap = float(np.sum(sym * y.reshape(5, 5))) \
            + np.max(np.abs(lams))
        worst = max(worst, true_gap - 1e-4)
    yield ("inexact nuclear lmo honors its certified budget",
           worst <= 1e-9, f"worst excess {worst:.3e}")


def _check_bounds():
    """Bound verification suite on the hand-solvable toy."""
    problem, info = problems.quadratic_toy()
    rho = diagnostics.two_node_dual_norm(
        [problem.gradients[0], problem.gradients[1]],
        info["x_bounds"], info["z_star"])
    trace = solvers.run(problem,
                        solvers.SolverConfig(r0=1.0, max_iter=2000),
                        rho=rho, f_star=info["f_star"])
    ks = trace.column("k")
    cons_ok = np.all(trace.column("consensus_err")
                     <= trace.column("consensus_bound") + 1e-9)
    yield (f"consensus error within bound on the toy (k<= {int(ks[-1])})",
           bool(cons_ok), "rho from brute-force duals")
    gap_ok = np.all(np.abs(trace.column("f_value") - info["f_star"])
                    <= trace.column("gap_bound") + 1e-9)
    yield ("objective gap within bound on the toy", bool(gap_ok),
           "delta-linear variant")
    lem_ok = np.all(trace.column("lemma1_residual") <= 1e-6)
    yield ("per-iteration certificate nonpositive on the toy",
           bool(lem_ok), "closed-form reference")


def run_checks(suite, lmo_override=None, stream=None):
    """Run the named verification suites; returns the number of failures."""
    stream = stream or sys.stdout
    suites = []
    if suite in ("oracles", "all"):
        suites.append(_check_oracles(lmo_override=lmo_override))
    if suite in ("bounds", "all"):
        suites.append(_check_bounds())
    if not suites:
        raise ConfigError(f"unknown suite {suite!r} "
                          "(choose oracles, bounds or all)")
    failures = 0
    for gen in suites:
        for name, passed, detail in gen:
            tag = "PASS" if passed else "FAIL"
            print(f"{tag}: {name} ({detail})", file=stream)
            failures += 0 if passed else 1
    return failures


def cmd_check(suite):
    try:
        failures = run_checks(suite)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if failures:
        print(f"{failures} check(s) failed", file=sys.stderr)
        return 1
    return 0


def main(argv=None):
    level = os.environ.get("CONSENSUSFW_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = argparse.ArgumentParser(
        prog="consensusfw",
        description="penalty-based conditional gradient consensus solver")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run a solver from a config file")
    p_run.add_argument("config")
    p_gen = sub.add_parser("gen", help="generate a matrix-completion "
                                       "instance dump")
    p_gen.add_argument("seed", type=int)
    p_gen.add_argument("n_nodes", type=int)
    p_gen.add_argument("radius", type=float)
    p_gen.add_argument("out")
    p_check = sub.add_parser("check", help="run verification suites")
    p_check.add_argument("suite", choices=["oracles", "bounds", "all"])
    args = parser.parse_args(argv)
    if args.command == "run":
        return cmd_run(args.config)
    if args.command == "gen":
        return cmd_gen(args.seed, args.n_nodes, args.radius, args.out)
    return cmd_check(args.suite)


if __name__ == "__main__":
    sys.exit(main())
