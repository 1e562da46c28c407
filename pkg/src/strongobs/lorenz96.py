"""Lorenz'96 benchmark: nonlinear model, tangent linearization, experiment setup.

Model (cyclic indices)::

    z_i' = (z_{i+1} - z_{i-2}) z_{i-1} - z_i + f_i(t)

The LTV benchmark plant is the linearization along the unforced trajectory
from ``z_i(0) = sin(2 pi (i - 1) / n)``.  The scalar unknown input enters the
forcing of two states through ``D(t)``; outputs are a fixed selection of
states.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from .exceptions import ConfigError
from .integrate import rk4
from .signals import MatrixSignal, TimeGrid
from .system_model import LtvSystem

__all__ = [
    "Lorenz96Config",
    "l96_rhs",
    "l96_jacobian",
    "reference_trajectory",
    "build_benchmark_system",
    "make_input",
    "initial_error",
]

_PROFILES = {
    "sin": (np.sin, np.cos),
    "cos": (np.cos, lambda t: -np.sin(t)),
}

INPUTS = ("exp", "zero", "sin")


@dataclass
class Lorenz96Config:
    """Benchmark configuration; indices are 1-based as in the model equations.

    ``seed`` drives ``numpy.random.default_rng`` (PCG64) for the initial
    estimation error, drawn uniformly from (-1, 1) per component.
    """

    n: int = 18
    f0: float = 8.0
    output_indices: tuple = (1, 5, 9, 12, 15)
    d_profile: dict = field(default_factory=lambda: {5: "sin", 12: "cos"})
    w_profile: str = "exp"
    w_rate: float = 0.5
    horizon: float = 20.0
    step: float = 1e-3
    spin_up: float = 0.0
    interp: str = "linear"
    p0_scale: float = 1.0
    q_scale: float = 10.0
    seed: int = 7

    def __post_init__(self):
        self.output_indices = tuple(int(i) for i in self.output_indices)
        self.d_profile = {int(k): v for k, v in dict(self.d_profile).items()}
        self.validate()

    def validate(self):
        if self.n < 4:
            raise ConfigError("Lorenz'96 needs n >= 4 for cyclic indexing")
        idx = self.output_indices
        if len(set(idx)) != len(idx) or not all(1 <= i <= self.n for i in idx):
            raise ConfigError(f"output indices {idx} must be distinct and in [1, {self.n}]")
        for i, prof in self.d_profile.items():
            if not 1 <= i <= self.n:
                raise ConfigError(f"input channel index {i} out of range")
            if prof not in _PROFILES:
                raise ConfigError(f"unknown input-channel profile {prof!r}")
        if self.w_profile not in INPUTS:
            raise ConfigError(f"unknown input profile {self.w_profile!r}")
        if self.horizon <= 0 or self.step <= 0 or self.spin_up < 0:
            raise ConfigError("horizon and step must be positive, spin_up >= 0")

    @property
    def grid(self):
        return TimeGrid.from_span(0.0, self.horizon, self.step)

    def to_dict(self):
        d = asdict(self)
        d["output_indices"] = list(self.output_indices)
        d["d_profile"] = {str(k): v for k, v in sorted(self.d_profile.items())}
        return d

    @classmethod
    def from_dict(cls, d):
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown lorenz96 options: {sorted(extra)}")
        return cls(**d)


def l96_rhs(z, f):
    """Right-hand side of the Lorenz'96 model for state ``z`` and forcing ``f``."""
    z = np.asarray(z, dtype=float)
    return ((np.roll(z, -1, axis=-1) - np.roll(z, 2, axis=-1))
            * np.roll(z, 1, axis=-1) - z + f)


def l96_jacobian(z):
    """Jacobian of :func:`l96_rhs` with respect to ``z``.

    Accepts a single state ``(n,)`` or a stack ``(k, n)``.
    """
    z = np.asarray(z, dtype=float)
    single = z.ndim == 1
    Z = z[None] if single else z
    k, n = Z.shape
    i = np.arange(n)
    im2, im1, ip1 = (i - 2) % n, (i - 1) % n, (i + 1) % n
    J = np.zeros((k, n, n))
    J[:, i, i] = -1.0
    J[:, i, im1] += Z[:, ip1] - Z[:, im2]
    J[:, i, ip1] += Z[:, im1]
    J[:, i, im2] += -Z[:, im1]
    return J[0] if single else J


def initial_state(n):
    return np.sin(2.0 * np.pi * np.arange(n) / n)


def integrate_model(z0, f, grid):
    """RK4 trajectory of the autonomous model, shape ``(grid.count, n)``."""
    return rk4(lambda k, stage, z: l96_rhs(z, f), z0, grid)


def reference_trajectory(cfg):
    """Unforced trajectory sampled on the benchmark grid (an ``n x 1`` signal).

    With ``spin_up > 0`` the model is first integrated for that long from
    the sine initial condition and the end state becomes ``z(0)``.
    """
    z0 = initial_state(cfg.n)
    if cfg.spin_up > 0:
        z0 = integrate_model(z0, cfg.f0,
                             TimeGrid.from_span(0.0, cfg.spin_up, cfg.step))[-1]
    Z = integrate_model(z0, cfg.f0, cfg.grid)
    return MatrixSignal.sampled(cfg.grid, Z[:, :, None], interp=cfg.interp,
                                name="z_ref")


def output_matrix(cfg):
    C = np.zeros((len(cfg.output_indices), cfg.n))
    for r, i in enumerate(cfg.output_indices):
        C[r, i - 1] = 1.0
    return C


def input_matrix_signal(cfg):
    n = cfg.n
    chans = sorted(cfg.d_profile.items())

    def build(t, deriv):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape + (n, 1))
        for i, prof in chans:
            fn = _PROFILES[prof][1 if deriv else 0]
            out[..., i - 1, 0] = fn(t)
        return out

    return MatrixSignal.analytic(lambda t: build(t, False), (n, 1),
                                 derivative=lambda t: build(t, True),
                                 vectorized=True, name="D")


def build_benchmark_system(cfg, trajectory=None):
    """Linearized benchmark plant ``(A(t), D(t), C)``.

    ``A(t)`` is the Jacobian along the reference trajectory, sampled on the
    benchmark grid.
    """
    traj = trajectory if trajectory is not None else reference_trajectory(cfg)
    A = MatrixSignal.sampled(traj.grid, l96_jacobian(traj.values[:, :, 0]),
                             interp=cfg.interp, name="A")
    C = MatrixSignal.constant(output_matrix(cfg), name="C")
    return LtvSystem(A, input_matrix_signal(cfg), C, name="lorenz96")


def make_input(profile="exp", rate=0.5):
    """Scalar unknown input: ``exp(rate t)``, zero, or ``10 sin(3 t)``."""
    if profile == "exp":
        return lambda t: np.exp(rate * np.asarray(t, dtype=float))
    if profile == "zero":
        return lambda t: np.zeros_like(np.asarray(t, dtype=float))
    if profile == "sin":
        return lambda t: 10.0 * np.sin(3.0 * np.asarray(t, dtype=float))
    raise ConfigError(f"unknown input profile {profile!r}")


def initial_error(n, seed):
    return np.random.default_rng(seed).uniform(-1.0, 1.0, n)
