"""Scenario types and closed-form link quantities for the secrecy planner.

Conventions used throughout the package:
  - powers in watts, distances in meters, time in seconds;
  - SNRs and the reference SNR ``xi0`` are linear ratios (not dB);
  - rates are in bits per channel use (BPCU);
  - ground nodes live at altitude 0, the UAV at fixed altitude ``H``, so a
    3-D distance is always ``sqrt(|xy offset|^2 + H^2)``.

Everything in this module is a pure function of its inputs and safe for
concurrent use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

LN2 = math.log(2.0)
_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)

# Numerical slack on the per-step speed check (meters).
SPEED_SLACK = 1e-9
# Numerical slack on the average-power check (watts).
AVG_POWER_SLACK = 1e-12


# ---------------------------------------------------------------------------
# Unit conversions
# ---------------------------------------------------------------------------

def dbm_to_watt(x_dbm: float) -> float:
    """Convert a power from dBm to watts: 10^((x - 30) / 10)."""
    return 10.0 ** ((x_dbm - 30.0) / 10.0)


def watt_to_dbm(p_watt: float) -> float:
    """Convert a power from watts to dBm. Zero maps to -inf."""
    if p_watt < 0.0:
        raise ValueError(f"negative power {p_watt} W has no dBm value")
    if p_watt == 0.0:
        return -math.inf
    return 10.0 * math.log10(p_watt) + 30.0


def db_to_linear(x_db: float) -> float:
    """Convert a ratio from dB to linear scale: 10^(x / 10)."""
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    """Convert a linear ratio to dB."""
    if x <= 0.0:
        raise ValueError(f"non-positive ratio {x} has no dB value")
    return 10.0 * math.log10(x)


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

def _as_vec3(name: str, v) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector, got shape {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    """All physical and algorithmic parameters of one scenario.

    ``N`` is derived from ``T`` and ``delta_t`` and validated to be exact.
    ``L`` may be ``math.inf`` to describe the long-packet limit used by the
    fixed-design benchmark.
    """

    w_b: np.ndarray          # Bob position (m), altitude 0
    w_e: np.ndarray          # Eve position (m), altitude 0
    q_I: np.ndarray          # initial UAV position (m), altitude H
    q_F: np.ndarray          # final UAV position (m), altitude H
    H: float                 # flight altitude (m)
    T: float                 # flight period (s)
    delta_t: float           # slot duration (s)
    V_max: float             # maximum speed (m/s)
    P_max: float             # instantaneous power cap (W)
    P_bar: float             # average power cap (W)
    xi0: float               # reference SNR at 1 m (linear)
    L: float                 # blocklength (channel uses)
    eps_b: float             # decoding error probability at Bob
    eps_e: float             # information leakage at Eve
    tau: float               # convergence threshold (fractional increase)
    max_iter: int = 100      # iteration cap for the alternating loop
    N: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "w_b", _as_vec3("w_b", self.w_b))
        object.__setattr__(self, "w_e", _as_vec3("w_e", self.w_e))
        object.__setattr__(self, "q_I", _as_vec3("q_I", self.q_I))
        object.__setattr__(self, "q_F", _as_vec3("q_F", self.q_F))
        if self.delta_t <= 0.0:
            raise ValueError(f"delta_t must be positive, got {self.delta_t}")
        if self.T <= 0.0:
            raise ValueError(f"T must be positive, got {self.T}")
        n = int(round(self.T / self.delta_t))
        if n < 1:
            raise ValueError(f"T/delta_t yields no slots: T={self.T}, delta_t={self.delta_t}")
        if abs(self.T - n * self.delta_t) > 1e-9 * max(1.0, abs(self.T)):
            raise ValueError(
                f"T must equal N*delta_t exactly: T={self.T}, delta_t={self.delta_t}"
            )
        object.__setattr__(self, "N", n)
        if self.H <= 0.0:
            raise ValueError(f"H must be positive, got {self.H}")
        if self.V_max <= 0.0:
            raise ValueError(f"V_max must be positive, got {self.V_max}")
        if not (0.0 < self.P_bar <= self.P_max):
            raise ValueError(
                f"need 0 < P_bar <= P_max, got P_bar={self.P_bar}, P_max={self.P_max}"
            )
        if not (0.0 < self.eps_b < 0.5):
            raise ValueError(f"eps_b must lie in (0, 0.5), got {self.eps_b}")
        if not (0.0 < self.eps_e < 0.5):
            raise ValueError(f"eps_e must lie in (0, 0.5), got {self.eps_e}")
        if not self.L >= 1.0:
            raise ValueError(f"blocklength L must be >= 1, got {self.L}")
        if self.xi0 <= 0.0:
            raise ValueError(f"xi0 must be positive, got {self.xi0}")
        if self.tau <= 0.0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        for name, w in (("w_b", self.w_b), ("w_e", self.w_e)):
            if abs(w[2]) > 1e-9:
                raise ValueError(f"{name} must have altitude 0, got {w[2]}")
        for name, q in (("q_I", self.q_I), ("q_F", self.q_F)):
            if abs(q[2] - self.H) > 1e-9:
                raise ValueError(f"{name} must have altitude H={self.H}, got {q[2]}")
        reach = self.V_max * self.delta_t * (n - 1)
        dist = float(np.linalg.norm(self.q_I - self.q_F))
        if dist > reach + SPEED_SLACK:
            raise ValueError(
                f"endpoints unreachable: |q_I - q_F| = {dist:.3f} m exceeds "
                f"V_max*delta_t*(N-1) = {reach:.3f} m"
            )


def baseline_scenario(
    *,
    H: float = 100.0,
    T: float = 60.0,
    delta_t: float = 1.0,
    V_max: float = 10.0,
    P_max: float = 0.1,
    P_bar: Optional[float] = None,
    xi0: float = 1e6,
    L: float = 400.0,
    eps_b: float = 1e-5,
    eps_e: float = 1e-2,
    tau: float = 1e-6,
    max_iter: int = 100,
    w_b=None,
    w_e=None,
    q_I=None,
    q_F=None,
) -> ScenarioConfig:
    """Standard two-receiver scenario with defaults resolved in order.

    ``P_bar`` defaults to half of ``P_max`` and the UAV endpoints default to
    mirrored points at the resolved altitude, so overriding ``P_max`` or ``H``
    propagates into the dependent defaults.
    """
    if P_bar is None:
        P_bar = P_max / 2.0
    if w_b is None:
        w_b = (0.0, 0.0, 0.0)
    if w_e is None:
        w_e = (400.0, 0.0, 0.0)
    if q_I is None:
        q_I = (200.0, 100.0, H)
    if q_F is None:
        q_F = (200.0, -100.0, H)
    return ScenarioConfig(
        w_b=w_b, w_e=w_e, q_I=q_I, q_F=q_F, H=H, T=T, delta_t=delta_t,
        V_max=V_max, P_max=P_max, P_bar=P_bar, xi0=xi0, L=L,
        eps_b=eps_b, eps_e=eps_e, tau=tau, max_iter=max_iter,
    )


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Horizontal UAV positions per slot; altitude comes from the scenario."""

    points: np.ndarray  # (N, 2) meters

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 1:
            raise ValueError(f"trajectory points must have shape (N, 2), got {pts.shape}")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    def speeds(self, delta_t: float) -> np.ndarray:
        """Per-slot speeds |q[n+1] - q[n]| / delta_t; the last slot gets 0."""
        if len(self) == 1:
            return np.zeros(1)
        steps = np.linalg.norm(np.diff(self.points, axis=0), axis=1)
        return np.concatenate([steps / delta_t, [0.0]])


@dataclass(frozen=True, eq=False)
class PowerProfile:
    """Per-slot transmit powers in watts."""

    p: np.ndarray  # (N,)

    def __post_init__(self):
        arr = np.asarray(self.p, dtype=float)
        if arr.ndim != 1 or arr.shape[0] < 1:
            raise ValueError(f"power profile must be a 1-D sequence, got shape {arr.shape}")
        object.__setattr__(self, "p", arr)

    def __len__(self) -> int:
        return self.p.shape[0]


@dataclass(frozen=True, eq=False)
class SlackState:
    """Per-slot slack values: SNR upper bounds ``u``, dispersion roots ``z``,
    and (in the trajectory subproblem) squared-distance lower bounds ``l``."""

    u_b: np.ndarray
    u_e: np.ndarray
    z_b: np.ndarray
    z_e: np.ndarray
    l_b: Optional[np.ndarray] = None
    l_e: Optional[np.ndarray] = None


class IterationRecord(NamedTuple):
    index: int
    surrogate: float       # optimal value of the last solved subproblem (BPCU)
    aesr: float            # clamped average effective secrecy rate (BPCU)
    frac_increase: float   # fractional increase of the surrogate objective


@dataclass(frozen=True, eq=False)
class RunResult:
    """Outcome of one scheme run."""

    trajectory: Trajectory
    power: PowerProfile
    aesr: float
    iterations: tuple
    scheme: str
    failed: bool = False


# ---------------------------------------------------------------------------
# Closed-form quantities
# ---------------------------------------------------------------------------

def q_inv(p: float) -> float:
    """Inverse of the Gaussian tail function Q(x) = 0.5*erfc(x/sqrt(2)).

    A rational initial guess (Abramowitz-Stegun 26.2.23) is polished with
    Newton steps on erfc; absolute accuracy is far below 1e-9.
    """
    if not (0.0 < p < 1.0):
        raise ValueError(f"q_inv requires 0 < p < 1, got {p}")
    if p == 0.5:
        return 0.0
    tail = min(p, 1.0 - p)
    t = math.sqrt(-2.0 * math.log(tail))
    x = t - (2.515517 + t * (0.802853 + t * 0.010328)) / (
        1.0 + t * (1.432788 + t * (0.189269 + t * 0.001308))
    )
    for _ in range(60):
        err = 0.5 * math.erfc(x / _SQRT2) - tail
        pdf = math.exp(-0.5 * x * x) / _SQRT2PI
        if pdf == 0.0:
            break
        dx = err / pdf
        x += dx
        if abs(dx) <= 1e-13 * (1.0 + abs(x)):
            break
    return x if p <= 0.5 else -x


def snr(P: float, q, w, xi0: float) -> float:
    """Received SNR xi0 * P / |q - w|^2 for transmit power P at position q."""
    if P < 0.0:
        raise ValueError(f"power must be non-negative, got {P}")
    q = np.asarray(q, dtype=float)
    w = np.asarray(w, dtype=float)
    d2 = float(np.sum((q - w) ** 2))
    if d2 <= 0.0:
        raise ValueError("transmitter and receiver positions coincide")
    return xi0 * P / d2


def dispersion(gamma):
    """Channel dispersion 1 - (1 + gamma)^-2; maps [0, inf) into [0, 1)."""
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0.0):
        raise ValueError("SNR must be non-negative")
    out = 1.0 - (1.0 + g) ** (-2.0)
    return float(out) if np.isscalar(gamma) or out.ndim == 0 else out


def secrecy_rate_lb(gamma_b, gamma_e, cfg: ScenarioConfig, clamp: bool = True):
    """Short-packet secrecy-rate lower bound in BPCU.

    log2(1+g_b) - log2(1+g_e) - sqrt(V_b/L)*Qinv(eps_b)/ln2
                              - sqrt(V_e/L)*Qinv(eps_e)/ln2,
    clamped at zero unless ``clamp`` is False. Accepts scalars or arrays.
    """
    gb = np.asarray(gamma_b, dtype=float)
    ge = np.asarray(gamma_e, dtype=float)
    if np.any(gb < 0.0) or np.any(ge < 0.0):
        raise ValueError("SNRs must be non-negative")
    rate = np.log2(1.0 + gb) - np.log2(1.0 + ge)
    if math.isfinite(cfg.L):
        pen_b = q_inv(cfg.eps_b) / (math.sqrt(cfg.L) * LN2)
        pen_e = q_inv(cfg.eps_e) / (math.sqrt(cfg.L) * LN2)
        rate = rate - np.sqrt(dispersion(gb)) * pen_b - np.sqrt(dispersion(ge)) * pen_e
    if clamp:
        rate = np.maximum(rate, 0.0)
    if np.isscalar(gamma_b) and np.isscalar(gamma_e):
        return float(rate)
    return rate


def sq_dists(points: np.ndarray, w: np.ndarray, H: float) -> np.ndarray:
    """Squared 3-D distances from UAV slots (x, y, H) to a ground node w."""
    pts = np.asarray(points, dtype=float)
    offs = pts - np.asarray(w, dtype=float)[:2]
    return np.sum(offs * offs, axis=1) + H * H


def slot_snrs(traj: Trajectory, pw: PowerProfile, cfg: ScenarioConfig):
    """Per-slot SNR arrays (gamma_b, gamma_e)."""
    if len(traj) != len(pw):
        raise ValueError(f"trajectory has {len(traj)} slots but power has {len(pw)}")
    gb = cfg.xi0 * pw.p / sq_dists(traj.points, cfg.w_b, cfg.H)
    ge = cfg.xi0 * pw.p / sq_dists(traj.points, cfg.w_e, cfg.H)
    return gb, ge


def slot_rates_pre_clamp(traj: Trajectory, pw: PowerProfile, cfg: ScenarioConfig) -> np.ndarray:
    """Per-slot secrecy-rate lower bounds before the clamp at zero."""
    gb, ge = slot_snrs(traj, pw, cfg)
    return secrecy_rate_lb(gb, ge, cfg, clamp=False)


def aesr(traj: Trajectory, pw: PowerProfile, cfg: ScenarioConfig) -> float:
    """Average effective secrecy rate: mean clamped slot rate times (1 - eps_b)."""
    rates = slot_rates_pre_clamp(traj, pw, cfg)
    return float(np.mean(np.maximum(rates, 0.0)) * (1.0 - cfg.eps_b))


def validate(traj: Trajectory, pw: PowerProfile, cfg: ScenarioConfig) -> list:
    """Check mobility and power constraints; return a list of violation strings.

    An empty list means every constraint holds (within the documented
    numerical slack). Each entry names the constraint and the slot involved.
    """
    out: list = []
    if len(traj) != cfg.N:
        out.append(f"length: trajectory has {len(traj)} slots, scenario expects {cfg.N}")
    if len(pw) != cfg.N:
        out.append(f"length: power profile has {len(pw)} slots, scenario expects {cfg.N}")
    if out:
        return out

    if not np.allclose(traj.points[0], cfg.q_I[:2], atol=1e-9, rtol=0.0):
        out.append(
            f"endpoint: slot 1 position {traj.points[0].tolist()} differs from q_I "
            f"{cfg.q_I[:2].tolist()}"
        )
    if not np.allclose(traj.points[-1], cfg.q_F[:2], atol=1e-9, rtol=0.0):
        out.append(
            f"endpoint: slot {cfg.N} position {traj.points[-1].tolist()} differs from q_F "
            f"{cfg.q_F[:2].tolist()}"
        )
    limit = cfg.V_max * cfg.delta_t
    steps = np.linalg.norm(np.diff(traj.points, axis=0), axis=1)
    for n in np.nonzero(steps > limit + SPEED_SLACK)[0]:
        out.append(
            f"max speed: step from slot {n + 1} to {n + 2} is {steps[n]:.6f} m, "
            f"limit {limit:.6f} m"
        )
    for n in np.nonzero(pw.p < 0.0)[0]:
        out.append(f"power bounds: slot {n + 1} power {pw.p[n]:.6g} W is negative")
    for n in np.nonzero(pw.p > cfg.P_max)[0]:
        out.append(
            f"power bounds: slot {n + 1} power {pw.p[n]:.6g} W exceeds P_max {cfg.P_max:.6g} W"
        )
    mean_p = float(np.mean(pw.p))
    if mean_p > cfg.P_bar + AVG_POWER_SLACK:
        out.append(
            f"average power: mean {mean_p:.9g} W exceeds P_bar {cfg.P_bar:.9g} W"
        )
    return out
