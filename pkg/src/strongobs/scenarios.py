"""Named fixtures, JSON system configs and the end-to-end design pipeline.

A :class:`Scenario` bundles a plant with everything needed to run the
check -> analyze -> synthesize -> simulate chain: grid, rank floor, Riccati
tuning, design mode, unknown-input profile and seed.

JSON config layout::

    {
      "name": "my-plant",
      "dimensions": {"n": 2, "p": 2, "q": 1},
      "grid": {"t_start": 0.0, "t_end": 20.0, "step": 0.001},
      "gamma_floor": 1e-6,
      "signals": {
        "A": {"constant": [[-1, 0], [1, -2]]},
        "D": {"builtin": "sinusoid", "params": {"sin": [[1], [0]]}},
        "C": {"csv": "C.csv", "interp": "linear"}
      },
      "riccati": {"q_scale": 10.0, "p0_scale": 1.0, "blow_up_threshold": 1e6},
      "design": "full",
      "input": {"profile": "exp", "rate": 0.5},
      "seed": 7
    }

or ``{"builtin": "lorenz96", "lorenz96": {...}}`` plus optional top-level
overrides.  CSV paths are resolved relative to the config file.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import lorenz96 as l96
from .exceptions import ConfigError, ContractError
from .linalg import DEFAULT_GAMMA_FLOOR
from .observer import simulate, synthesize
from .riccati import RiccatiConfig
from .signals import MatrixSignal, TimeGrid, load_signal_csv
from .system_model import (LtvSystem, build_auxiliary, check_assumptions,
                           is_detectable_pair)

__all__ = [
    "Scenario",
    "BUILTINS",
    "make_scenario",
    "load_config",
    "run_design",
    "DesignOutcome",
]


@dataclass
class Scenario:
    name: str
    system: LtvSystem
    grid: TimeGrid
    gamma_floor: float = DEFAULT_GAMMA_FLOOR
    riccati: RiccatiConfig = field(default_factory=RiccatiConfig)
    reduced: bool = False
    input_profile: str = "exp"
    input_rate: float = 0.5
    seed: int = 7
    extra: dict = field(default_factory=dict)

    def input_signal(self, profile=None):
        profile = profile or self.input_profile
        if self.system.q == 0:
            return None
        w = l96.make_input(profile, self.input_rate)
        if self.system.q == 1:
            return w
        q = self.system.q
        return lambda t: np.multiply.outer(np.asarray(w(t)), np.ones(q))

    def initial_error(self):
        return l96.initial_error(self.system.n, self.seed)

    def resolved(self):
        """JSON-friendly snapshot of every resolved parameter."""
        rc = self.riccati
        P0 = None if rc.P0 is None else np.asarray(rc.P0).tolist()
        return {
            "name": self.name,
            "dimensions": {"n": self.system.n, "p": self.system.p,
                           "q": self.system.q},
            "grid": {"t_start": self.grid.t_start, "t_end": self.grid.t_end,
                     "step": self.grid.step, "count": self.grid.count},
            "gamma_floor": self.gamma_floor,
            "riccati": {"q_scale": rc.q_scale, "P0": P0 if P0 is not None else "identity",
                        "blow_up_threshold": rc.blow_up_threshold,
                        "clip_floor": rc.clip_floor,
                        "growth_ratio": rc.growth_ratio,
                        "growth_rtol": rc.growth_rtol,
                        "near_threshold_fraction": rc.near_threshold_fraction},
            "design": "reduced" if self.reduced else "full",
            "input": {"profile": self.input_profile, "rate": self.input_rate},
            "seed": self.seed,
            "rng": "numpy.random.default_rng (PCG64), uniform(-1, 1) per component",
            **self.extra,
        }


# -- builtin fixtures -------------------------------------------------------

def _lorenz96(step=None, horizon=None, options=None):
    opts = dict(options or {})
    if step is not None:
        opts["step"] = step
    if horizon is not None:
        opts["horizon"] = horizon
    cfg = l96.Lorenz96Config.from_dict(opts)
    sys = l96.build_benchmark_system(cfg)
    rc = RiccatiConfig(q_scale=cfg.q_scale, P0=cfg.p0_scale * np.eye(cfg.n))
    # the benchmark uses the reduced pair (Atilde, C)
    return Scenario("lorenz96", sys, cfg.grid, gamma_floor=0.5, riccati=rc,
                    reduced=True, input_profile=cfg.w_profile,
                    input_rate=cfg.w_rate, seed=cfg.seed,
                    extra={"lorenz96": cfg.to_dict()})


def _lti_2state(step=None, horizon=None, options=None):
    sys = LtvSystem.from_matrices([[-1.0, 0.0], [1.0, -2.0]], [[1.0], [0.0]],
                                  np.eye(2), name="lti-2state")
    grid = TimeGrid.from_span(0.0, horizon or 20.0, step or 1e-3)
    # P0 = I starts a fast Riccati transient whose S' the three-point
    # stencil cannot resolve at step 1e-3; P0 = 0 keeps S smooth.
    rc = RiccatiConfig(q_scale=1.0, P0=np.zeros((2, 2)))
    return Scenario("lti-2state", sys, grid, riccati=rc)


def _counterexample_scalar(step=None, horizon=None, options=None):
    # x' = -x/(t+1), y = 0: asymptotically stable, yet no UES observer exists.
    A = MatrixSignal.analytic(
        lambda t: np.reshape(-1.0 / (np.asarray(t) + 1.0), np.shape(t) + (1, 1)),
        (1, 1),
        derivative=lambda t: np.reshape(1.0 / (np.asarray(t) + 1.0) ** 2,
                                        np.shape(t) + (1, 1)),
        vectorized=True, domain=(0.0, math.inf), name="A")
    sys = LtvSystem(A, MatrixSignal.constant(np.zeros((1, 0)), name="D"),
                    MatrixSignal.constant([[0.0]], name="C"),
                    name="counterexample-scalar")
    grid = TimeGrid.from_span(0.0, horizon or 200.0, step or 1e-2)
    return Scenario("counterexample-scalar", sys, grid,
                    riccati=RiccatiConfig(q_scale=1.0), input_profile="zero")


def _counterexample_2state(step=None, horizon=None, options=None):
    # A = [[0, 0], [0, -1/t]], D = e1, C = e1^T on t >= 1; Atilde = A.
    def a(t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape + (2, 2))
        out[..., 1, 1] = -1.0 / t
        return out

    def da(t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape + (2, 2))
        out[..., 1, 1] = 1.0 / t ** 2
        return out

    A = MatrixSignal.analytic(a, (2, 2), derivative=da, vectorized=True,
                              domain=(1.0, math.inf), name="A")
    sys = LtvSystem(A, MatrixSignal.constant([[1.0], [0.0]], name="D"),
                    MatrixSignal.constant([[1.0, 0.0]], name="C"),
                    name="counterexample-2state")
    grid = TimeGrid.from_span(1.0, 1.0 + (horizon or 200.0), step or 1e-2)
    return Scenario("counterexample-2state", sys, grid,
                    riccati=RiccatiConfig(q_scale=1.0))


def _double_integrator(step=None, horizon=None, options=None):
    # p = q = 1; the unobservable mode sits at 0, so (Atilde, C) is not detectable.
    sys = LtvSystem.from_matrices([[0.0, 1.0], [0.0, 0.0]], [[0.0], [1.0]],
                                  [[0.0, 1.0]], name="double-integrator")
    grid = TimeGrid.from_span(0.0, horizon or 100.0, step or 1e-2)
    return Scenario("double-integrator", sys, grid,
                    riccati=RiccatiConfig(q_scale=1.0))


def _ltv_square(step=None, horizon=None, options=None):
    # p = q = 1 with time-varying input and output maps.
    def c(t):
        t = np.asarray(t, dtype=float)
        out = np.empty(t.shape + (1, 2))
        out[..., 0, 0] = 0.5 * np.sin(t)
        out[..., 0, 1] = 1.0
        return out

    def dc(t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape + (1, 2))
        out[..., 0, 0] = 0.5 * np.cos(t)
        return out

    def d(t):
        t = np.asarray(t, dtype=float)
        out = np.ones(t.shape + (2, 1))
        out[..., 0, 0] = 0.3 * np.cos(t)
        return out

    def dd(t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape + (2, 1))
        out[..., 0, 0] = -0.3 * np.sin(t)
        return out

    sys = LtvSystem(MatrixSignal.constant([[-1.0, 1.0], [0.5, -0.5]], name="A"),
                    MatrixSignal.analytic(d, (2, 1), derivative=dd,
                                          vectorized=True, name="D"),
                    MatrixSignal.analytic(c, (1, 2), derivative=dc,
                                          vectorized=True, name="C"),
                    name="ltv-square")
    grid = TimeGrid.from_span(0.0, horizon or 20.0, step or 1e-3)
    return Scenario("ltv-square", sys, grid, riccati=RiccatiConfig(q_scale=1.0))


BUILTINS = {
    "lorenz96": _lorenz96,
    "lti-2state": _lti_2state,
    "counterexample-scalar": _counterexample_scalar,
    "counterexample-2state": _counterexample_2state,
    "double-integrator": _double_integrator,
    "ltv-square": _ltv_square,
}


# -- JSON configs -----------------------------------------------------------

def _matrix(value, shape, what):
    m = np.array(value, dtype=float, ndmin=2)
    if shape[1] == 0:
        m = np.zeros(shape)
    if m.shape != shape:
        raise ConfigError(f"{what}: expected shape {shape}, got {m.shape}")
    return m


def _sinusoid(params, shape, what):
    offset = _matrix(params.get("offset", np.zeros(shape)), shape, what)
    s = _matrix(params.get("sin", np.zeros(shape)), shape, what)
    c = _matrix(params.get("cos", np.zeros(shape)), shape, what)
    w = float(params.get("omega", 1.0))
    ph = float(params.get("phase", 0.0))

    def f(t):
        a = w * np.asarray(t, dtype=float)[..., None, None] + ph
        return offset + s * np.sin(a) + c * np.cos(a)

    def df(t):
        a = w * np.asarray(t, dtype=float)[..., None, None] + ph
        return w * (s * np.cos(a) - c * np.sin(a))

    return MatrixSignal.analytic(f, shape, derivative=df, vectorized=True,
                                 name=what)


def _reciprocal_time(params, shape, what):
    offset = _matrix(params.get("offset", np.zeros(shape)), shape, what)
    scale = _matrix(params["scale"], shape, what)
    shift = float(params.get("shift", 0.0))

    def f(t):
        t = np.asarray(t, dtype=float)[..., None, None]
        return offset + scale / (t + shift)

    def df(t):
        t = np.asarray(t, dtype=float)[..., None, None]
        return -scale / (t + shift) ** 2

    return MatrixSignal.analytic(f, shape, derivative=df, vectorized=True,
                                 domain=(-shift + 1e-12, math.inf), name=what)


_ANALYTIC = {"sinusoid": _sinusoid, "reciprocal_time": _reciprocal_time}


def _signal(entry, shape, what, base):
    if not isinstance(entry, dict) or len(set(entry) & {"constant", "builtin", "csv"}) != 1:
        raise ConfigError(
            f"signal {what}: need exactly one of 'constant', 'builtin', 'csv'")
    if "constant" in entry:
        return MatrixSignal.constant(_matrix(entry["constant"], shape, what),
                                     name=what)
    if "builtin" in entry:
        kind = entry["builtin"]
        if kind not in _ANALYTIC:
            raise ConfigError(f"signal {what}: unknown builtin {kind!r}; "
                              f"choose from {sorted(_ANALYTIC)}")
        try:
            return _ANALYTIC[kind](entry.get("params", {}), shape, what)
        except KeyError as exc:
            raise ConfigError(f"signal {what}: missing parameter {exc}") from None
    path = Path(entry["csv"])
    if not path.is_absolute():
        path = base / path
    try:
        return load_signal_csv(path, *shape, interp=entry.get("interp", "linear"),
                               name=what)
    except (OSError, ContractError) as exc:
        raise ConfigError(f"signal {what}: {exc}") from exc


def _riccati_cfg(d, n):
    d = dict(d or {})
    allowed = {"q_scale", "p0_scale", "P0", "blow_up_threshold", "clip_floor",
               "growth_ratio", "growth_rtol", "near_threshold_fraction"}
    extra = set(d) - allowed
    if extra:
        raise ConfigError(f"unknown riccati options: {sorted(extra)}")
    P0 = d.pop("P0", None)
    p0_scale = d.pop("p0_scale", None)
    if P0 is None and p0_scale is not None:
        P0 = float(p0_scale) * np.eye(n)
    return RiccatiConfig(P0=None if P0 is None else np.array(P0, dtype=float), **d)


def _scenario_from_dict(d, base, step=None, horizon=None):
    if "builtin" in d:
        name = d["builtin"]
        if name not in BUILTINS:
            raise ConfigError(f"unknown builtin {name!r}")
        scn = BUILTINS[name](step=step, horizon=horizon,
                             options=d.get(name.replace("-", "_")))
        if "riccati" in d:
            scn.riccati = _riccati_cfg(d["riccati"], scn.system.n)
        return _apply_common(scn, d)
    try:
        dims = d["dimensions"]
        n, p, q = int(dims["n"]), int(dims["p"]), int(dims["q"])
        sigs = d["signals"]
        g = d["grid"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"config missing field: {exc}") from None
    A = _signal(sigs.get("A"), (n, n), "A", base)
    D = _signal(sigs.get("D", {"constant": np.zeros((n, q)).tolist()}), (n, q), "D", base)
    C = _signal(sigs.get("C"), (p, n), "C", base)
    try:
        system = LtvSystem(A, D, C, name=d.get("name", "config"))
    except ContractError as exc:
        raise ConfigError(str(exc)) from exc
    t0 = float(g.get("t_start", 0.0))
    t_end = t0 + horizon if horizon is not None else float(g["t_end"])
    try:
        grid = TimeGrid.from_span(t0, t_end, step or float(g["step"]))
    except ContractError as exc:
        raise ConfigError(str(exc)) from exc
    scn = Scenario(d.get("name", "config"), system, grid,
                   riccati=_riccati_cfg(d.get("riccati"), n))
    return _apply_common(scn, d)


def _apply_common(scn, d):
    if "gamma_floor" in d:
        scn.gamma_floor = float(d["gamma_floor"])
    if "design" in d:
        if d["design"] not in ("full", "reduced"):
            raise ConfigError("design must be 'full' or 'reduced'")
        scn.reduced = d["design"] == "reduced"
    inp = d.get("input", {})
    if "profile" in inp:
        if inp["profile"] not in l96.INPUTS:
            raise ConfigError(f"unknown input profile {inp['profile']!r}")
        scn.input_profile = inp["profile"]
    if "rate" in inp:
        scn.input_rate = float(inp["rate"])
    if "seed" in d:
        scn.seed = int(d["seed"])
    return scn


def load_config(path, step=None, horizon=None):
    """Read a JSON system config into a :class:`Scenario`."""
    path = Path(path)
    try:
        d = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(d, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return _scenario_from_dict(d, path.parent, step=step, horizon=horizon)


def make_scenario(builtin=None, config=None, step=None, horizon=None,
                  gamma_floor=None, seed=None, reduced=None, input_profile=None):
    """Scenario from a builtin name or a config path, with CLI-style overrides."""
    if (builtin is None) == (config is None):
        raise ConfigError("give exactly one of builtin or config")
    if builtin is not None:
        if builtin not in BUILTINS:
            raise ConfigError(f"unknown builtin {builtin!r}; choose from "
                              f"{sorted(BUILTINS)}")
        scn = BUILTINS[builtin](step=step, horizon=horizon)
    else:
        scn = load_config(config, step=step, horizon=horizon)
    if gamma_floor is not None:
        scn.gamma_floor = gamma_floor
    if seed is not None:
        scn.seed = seed
    if reduced is not None:
        scn.reduced = reduced
    if input_profile is not None:
        scn.input_profile = input_profile
    return scn


# -- pipeline ---------------------------------------------------------------

@dataclass
class DesignOutcome:
    report: object
    aux: Optional[object] = None
    verdict: Optional[object] = None
    observer: Optional[object] = None


def analyze(scn, aux=None):
    """Detectability verdict for ``(Atilde, Ctilde)``, or ``(Atilde, C)``
    when the scenario uses the reduced design."""
    aux = aux or build_auxiliary(scn.system, scn.grid, scn.gamma_floor)
    Cpair = scn.system.C if scn.reduced else aux.Ctilde
    return aux, is_detectable_pair(aux.Atilde, Cpair, scn.grid, scn.riccati)


def run_design(scn):
    """check -> build auxiliary -> Riccati -> synthesize.

    Stops at the first failing stage; the returned outcome carries whatever
    was computed.  Synthesis errors propagate.
    """
    report = check_assumptions(scn.system, scn.grid, scn.gamma_floor)
    out = DesignOutcome(report)
    if not report.passed:
        return out
    out.aux, out.verdict = analyze(scn)
    out.observer = synthesize(scn.system, out.aux, out.verdict.solution)
    return out


def run_simulation(scn, obs, input_profile=None, coordinates="error"):
    e0 = scn.initial_error()
    return simulate(scn.system, obs, x0=e0, xhat0=np.zeros(scn.system.n),
                    w=scn.input_signal(input_profile), coordinates=coordinates)
