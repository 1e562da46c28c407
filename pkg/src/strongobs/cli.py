"""Command-line front end.

Exit codes: 0 success, 1 negative result (assumptions fail, pair not
detectable, synthesis refused, simulation failed), 2 usage or config error.
Every CSV written is accompanied by a ``manifest.json`` holding all resolved
parameters; nothing time-dependent goes into it, so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .exceptions import (ConfigError, ContractError, IntegrationError,
                         RankConditionError, SimulationError, StrongObsError,
                         SynthesisInconsistencyError, SynthesisUnavailableError)
from .io import write_csv, write_json
from .lorenz96 import INPUTS
from .observer import synthesize
from .scenarios import BUILTINS, analyze, make_scenario, run_simulation
from .system_model import check_assumptions

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Stop(Exception):
    def __init__(self, code):
        self.code = code


def _say(msg=""):
    print(msg, flush=True)


def _err(msg):
    print(f"error: {msg}", file=sys.stderr, flush=True)


def _common(p):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--config", metavar="PATH", help="JSON system config")
    src.add_argument("--builtin", metavar="NAME", choices=sorted(BUILTINS),
                     help="builtin fixture: " + ", ".join(sorted(BUILTINS)))
    p.add_argument("--out", metavar="DIR", default="out",
                   help="output directory (default: %(default)s)")
    p.add_argument("--seed", type=int, help="seed for the initial estimation error")
    p.add_argument("--step", type=float, help="grid step [s]")
    p.add_argument("--horizon", type=float, help="horizon length [s]")
    p.add_argument("--gamma-floor", type=float,
                   help="lower bound for lambda_min(Gamma^T Gamma)")
    pair = p.add_mutually_exclusive_group()
    pair.add_argument("--reduced-pair", dest="reduced", action="store_const",
                      const=True, help="design on (Atilde, C)")
    pair.add_argument("--full-pair", dest="reduced", action="store_const",
                      const=False, help="design on (Atilde, Ctilde)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="strongobs",
        description="Unknown-input observers for linear time-varying systems.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
            ("check", "check boundedness and rank assumptions"),
            ("analyze", "Riccati detectability analysis; writes the sigma trace"),
            ("synthesize", "assemble the observer; writes gains and residuals"),
            ("simulate", "simulate the estimation error; writes error CSVs"),
            ("repro-paper", "Lorenz'96 benchmark: fig1.csv, fig2.csv, fig3.csv")):
        p = sub.add_parser(name, help=text, description=text)
        _common(p)
        if name in ("simulate", "repro-paper"):
            p.add_argument("--input", choices=INPUTS,
                           help="unknown input profile")
            p.add_argument("--coordinates", choices=("error", "plant"),
                           default="error",
                           help="integrate the error system directly or "
                                "co-simulate plant and observer")
    return parser


def _scenario(args):
    builtin = args.builtin
    if args.command == "repro-paper":
        if args.config:
            raise ConfigError("repro-paper always runs the lorenz96 builtin")
        builtin = "lorenz96"
    elif builtin is None and args.config is None:
        raise ConfigError("one of --config or --builtin is required")
    if args.config is not None and not Path(args.config).is_file():
        raise ConfigError(f"config file not found: {args.config}")
    return make_scenario(builtin=builtin, config=args.config, step=args.step,
                         horizon=args.horizon, gamma_floor=args.gamma_floor,
                         seed=args.seed, reduced=args.reduced,
                         input_profile=getattr(args, "input", None))


class _Run:
    """Collects outputs and summary for the manifest."""

    def __init__(self, args, scn):
        self.args, self.scn = args, scn
        self.out = Path(args.out)
        self.outputs = []
        self.summary = {}

    def csv(self, name, header, rows):
        write_csv(self.out / name, header, rows)
        self.outputs.append(name)

    def manifest(self):
        a = self.args
        payload = {
            "tool": "strongobs",
            "version": __version__,
            "subcommand": a.command,
            "config": a.config,
            "builtin": self.scn.name if a.config is None else None,
            "output_dir": str(a.out),
            "seed": self.scn.seed,
            "outputs": self.outputs,
            "resolved": self.scn.resolved(),
            "summary": self.summary,
        }
        if hasattr(a, "coordinates"):
            payload["resolved"]["coordinates"] = a.coordinates
        write_json(self.out / "manifest.json", payload)


def _stage_check(run):
    scn = run.scn
    rep = check_assumptions(scn.system, scn.grid, scn.gamma_floor)
    for line in rep.lines():
        _say(line)
    run.summary["assumptions"] = {
        "passed": rep.passed, "bounds": {**rep.a1_bounds, **rep.a2_bounds},
        "min_eig_gamma": rep.a3_min_eig, "worst_t": rep.a3_worst_t}
    if not rep.passed:
        raise _Stop(EXIT_FAIL)
    return rep


def _stage_analyze(run, sigma_name="sigma.csv"):
    scn = run.scn
    aux, verdict = analyze(scn)
    pair = "(Atilde, C)" if scn.reduced else "(Atilde, Ctilde)"
    _say(f"pair {pair}: {verdict.status} ({verdict.reason})")
    if verdict.pbh is not None:
        _say(f"PBH test: {'detectable' if verdict.pbh else 'not detectable'}"
             + ("" if verdict.pbh_agrees else " (DISAGREES with Riccati probe)"))
    run.csv(sigma_name, ["t", "sigma_min", "sigma_max"], verdict.sigma_trace)
    sig = verdict.solution.sigma_max
    run.summary["detectability"] = {
        "status": verdict.status, "reason": verdict.reason,
        "riccati_verdict": verdict.solution.verdict,
        "event_time": verdict.solution.event_time,
        "sigma_max_peak": float(np.max(sig)),
        "threshold": verdict.threshold, "pbh": verdict.pbh}
    if not verdict.detectable:
        raise _Stop(EXIT_FAIL)
    return aux, verdict


def _stage_synthesize(run, aux, verdict):
    scn = run.scn
    try:
        obs = synthesize(scn.system, aux, verdict.solution)
    except (SynthesisUnavailableError, SynthesisInconsistencyError) as exc:
        _err(f"synthesis refused: {exc}")
        run.summary["synthesis"] = {"refused": str(exc)}
        raise _Stop(EXIT_FAIL) from None
    r2, r3 = float(np.max(obs.r2_residual)), float(np.max(obs.r3_residual))
    _say(f"observer ({obs.design} design): max r2 residual {r2:.3e} "
         f"(tol {obs.r2_tol:.3e}), max r3 residual {r3:.3e} "
         f"(tol {obs.r3_tol:.3e})")
    run.summary["synthesis"] = {"design": obs.design, "r2_max": r2,
                                "r2_tol": obs.r2_tol, "r3_max": r3,
                                "r3_tol": obs.r3_tol}
    return obs


def _stage_simulate(run, obs, norm_name, comp_name):
    a, scn = run.args, run.scn
    try:
        res = run_simulation(scn, obs, coordinates=a.coordinates)
    except (SimulationError, IntegrationError) as exc:
        _err(f"simulation failed: {exc}")
        raise _Stop(EXIT_FAIL) from None
    run.csv(norm_name, ["t", "error_norm"], res.error_norm_table())
    n = res.e.shape[1]
    run.csv(comp_name, ["t"] + [f"e{i + 1}" for i in range(n)],
            res.error_components_table())
    f = res.fit
    _say(f"decay fit: mu_hat = {f.mu_hat:.6g} 1/s, M_hat = {f.M_hat:.6g}, "
         f"R^2 = {f.r_squared:.6f} (window to t = {f.t_window_end:.6g})")
    e0, eT = float(res.error_norm[0]), float(res.error_norm[-1])
    _say(f"||e(0)|| = {e0:.6g}, ||e(T)|| = {eT:.6g}")
    run.summary["simulation"] = {
        "mu_hat": f.mu_hat, "M_hat": f.M_hat, "r_squared": f.r_squared,
        "fit_window_end": f.t_window_end, "error_norm_initial": e0,
        "error_norm_final": eT}
    return res


def _cmd_synthesize_outputs(run, obs):
    ts = obs.grid.times
    k = len(ts)
    cols, header = [ts], ["t"]
    for name in ("N", "R", "S"):
        v = getattr(obs, name).values
        r, c = v.shape[1:]
        cols.append(v.reshape(k, r * c))
        header += [f"{name}_{i + 1}_{j + 1}" for i in range(r) for j in range(c)]
    run.csv("observer.csv", header, np.column_stack(cols))
    run.csv("relations.csv", ["t", "r2_residual", "r3_residual"],
            np.column_stack([ts, obs.r2_residual, obs.r3_residual]))


def _dispatch(run):
    cmd = run.args.command
    _stage_check(run)
    if cmd == "check":
        return
    if cmd == "repro-paper":
        aux, verdict = _stage_analyze(run, "fig1.csv")
        obs = _stage_synthesize(run, aux, verdict)
        _stage_simulate(run, obs, "fig2.csv", "fig3.csv")
        return
    aux, verdict = _stage_analyze(run)
    if cmd == "analyze":
        return
    obs = _stage_synthesize(run, aux, verdict)
    if cmd == "synthesize":
        _cmd_synthesize_outputs(run, obs)
        return
    _stage_simulate(run, obs, "error_norm.csv", "error_components.csv")


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        scn = _scenario(args)
    except (ConfigError, ContractError) as exc:
        _err(str(exc))
        return EXIT_USAGE
    run = _Run(args, scn)
    code = EXIT_OK
    try:
        _dispatch(run)
    except _Stop as stop:
        code = stop.code
    except RankConditionError as exc:
        _err(str(exc))
        code = EXIT_FAIL
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_USAGE
    except StrongObsError as exc:
        _err(f"{type(exc).__name__}: {exc}")
        code = EXIT_FAIL
    run.summary["exit_code"] = code
    try:
        run.manifest()
    except OSError as exc:
        _err(f"cannot write manifest: {exc}")
        return EXIT_USAGE
    return code


if __name__ == "__main__":
    sys.exit(main())
