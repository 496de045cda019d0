"""Desk-scale wheel-loader / pile environment.

A deliberately minimal 1-D approach with two manipulator joints and a scalar
bucket fill. Its purpose is to make the qualitative phenomena of the bucket
filling task reproducible on a desk: condition shift between summer and
winter, drive-pressure corruption by wheel slip (while the telescope-joint
pressure stays clean), and the early/no boom-rise failure modes of cloned
controllers.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .controllers import CHANNELS

THETA1_LIMITS = (0.0, 0.9)     # boom joint, rad
THETA2_LIMITS = (-0.3, 0.9)    # bucket joint, rad
V_MAX = 1.5                    # m/s
MAX_PENETRATION = 0.5          # m
FILL_DONE = 0.99
SUCCESS_FILL = 0.5
CONTROL_HZ = 3.0               # deployed control loop rate

# actuation / interaction gains
_GAS_ACCEL = 2.5
_LOAD_BRAKE = 3.0
_THETA1_RATE = 0.25
_THETA2_RATE = 0.40
_FILL_CURL_GAIN = 0.30
_FILL_RAISE_GAIN = 0.18


@dataclass(frozen=True)
class ConditionProfile:
    """Environment profile; winter profiles have nonzero wheel slip."""

    name: str
    slip: float
    material_stiffness: float
    pile_distance_range: tuple[float, float]
    sensor_noise_std: tuple[float, ...]
    surface_drag: float

    def __post_init__(self):
        if not 0.0 <= self.slip < 1.0:
            raise ValueError(f"slip must be in [0, 1), got {self.slip}")
        if self.material_stiffness <= 0:
            raise ValueError("material_stiffness must be positive")
        if len(self.sensor_noise_std) != len(CHANNELS):
            raise ValueError(f"need {len(CHANNELS)} noise entries")

    def without_noise(self) -> "ConditionProfile":
        return replace(self, sensor_noise_std=(0.0,) * len(CHANNELS))


SUMMER = ConditionProfile(
    name="summer", slip=0.0, material_stiffness=1.0,
    pile_distance_range=(1.0, 5.0),
    sensor_noise_std=(0.002, 0.002, 0.05, 0.05, 0.05, 0.05, 0.005),
    surface_drag=0.5)

WINTER_ICE = ConditionProfile(
    name="winter_ice", slip=0.6, material_stiffness=1.3,
    pile_distance_range=(1.0, 5.0),
    sensor_noise_std=(0.002, 0.002, 0.35, 0.05, 0.08, 0.08, 0.005),
    surface_drag=0.3)

WINTER_SNOW = ConditionProfile(
    name="winter_snow", slip=0.35, material_stiffness=0.7,
    pile_distance_range=(1.0, 5.0),
    sensor_noise_std=(0.002, 0.002, 0.2, 0.05, 0.08, 0.08, 0.005),
    surface_drag=0.7)

PROFILES = {p.name: p for p in (SUMMER, WINTER_ICE, WINTER_SNOW)}


def save_profile(cond: ConditionProfile, path):
    with Path(path).open("w") as fh:
        fh.write(f"name={cond.name}\n")
        fh.write(f"slip={cond.slip!r}\n")
        fh.write(f"material_stiffness={cond.material_stiffness!r}\n")
        fh.write(f"pile_distance_range={cond.pile_distance_range[0]!r},"
                 f"{cond.pile_distance_range[1]!r}\n")
        fh.write("sensor_noise_std=" +
                 ",".join(f"{v!r}" for v in cond.sensor_noise_std) + "\n")
        fh.write(f"surface_drag={cond.surface_drag!r}\n")


def load_profile(path) -> ConditionProfile:
    meta = {}
    for line in Path(path).read_text().splitlines():
        key, _, value = line.partition("=")
        meta[key.strip()] = value.strip()
    lo, hi = (float(v) for v in meta["pile_distance_range"].split(","))
    return ConditionProfile(
        name=meta["name"], slip=float(meta["slip"]),
        material_stiffness=float(meta["material_stiffness"]),
        pile_distance_range=(lo, hi),
        sensor_noise_std=tuple(float(v) for v in meta["sensor_noise_std"].split(",")),
        surface_drag=float(meta["surface_drag"]))


@dataclass
class LoaderState:
    x: float = 3.0             # distance to pile face; negative = penetrated
    v: float = 0.0             # forward speed
    theta1: float = 0.05       # boom angle
    theta2: float = -0.1       # bucket angle
    fill: float = 0.0
    internal_load: float = 0.0

    def as_array(self):
        return np.array([self.x, self.v, self.theta1, self.theta2,
                         self.fill, self.internal_load])


def _curl_penalty(theta2: float) -> float:
    return 1.0 / (1.0 + 2.0 * max(theta2, 0.0))


def step(state: LoaderState, u, cond: ConditionProfile, dt: float) -> LoaderState:
    """One explicit-Euler step under a held control vector."""
    u = np.asarray(u, dtype=np.float64)
    if u.shape != (3,) or not np.all(np.isfinite(u)):
        raise ValueError(f"control must be a finite 3-vector, got {u!r}")
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    u1, u2, ug = np.clip(u, -1.0, 1.0)

    v = state.v + dt * (_GAS_ACCEL * ug - cond.surface_drag * state.v
                        - _LOAD_BRAKE * state.internal_load)
    v = float(np.clip(v, 0.0, V_MAX))
    x = max(state.x - v * dt, -MAX_PENETRATION)
    theta1 = float(np.clip(state.theta1 + _THETA1_RATE * u1 * dt, *THETA1_LIMITS))
    theta2 = float(np.clip(state.theta2 + _THETA2_RATE * u2 * dt, *THETA2_LIMITS))

    d = max(0.0, -x)
    load = cond.material_stiffness * d * _curl_penalty(theta2)

    fill = state.fill
    if d > 1e-3:
        dfill = _FILL_CURL_GAIN * max(u2, 0.0)
        if state.fill > 0.02:
            dfill += _FILL_RAISE_GAIN * max(u1, 0.0)
        fill = min(1.0, fill + dt * dfill)

    return LoaderState(x=x, v=v, theta1=theta1, theta2=theta2,
                       fill=fill, internal_load=load)


def sense(state: LoaderState, cond: ConditionProfile,
          rng: np.random.Generator | None = None) -> np.ndarray:
    """Extended sensor vector (theta1, theta2, p_d, p_t, p_l, p_b, a).

    The drive pressure p_d is scaled by (1 - slip): wheel slip on ice robs
    the drive line of pressure. The telescope-joint pressure p_t depends on
    the internal load only and is slip-independent by construction.
    """
    load = state.internal_load
    p_d = (5.0 + 45.0 * load + 8.0 * state.v) * (1.0 - cond.slip)
    p_t = 3.0 + 60.0 * load + 4.0 * state.theta1
    p_l = 6.0 + 20.0 * state.theta1 + 30.0 * state.fill + 10.0 * load
    p_b = 5.0 + 22.0 * load + 8.0 * max(state.theta2, 0.0)
    a = state.v / V_MAX
    s = np.array([state.theta1, state.theta2, p_d, p_t, p_l, p_b, a])
    if rng is not None:
        std = np.asarray(cond.sensor_noise_std)
        if np.any(std > 0):
            s = s + rng.normal(0.0, 1.0, size=s.shape) * std
    return s


# ---------------------------------------------------------------------------
# scripted expert

APPROACH, FILL, FINISH = "approach", "fill", "finish"


DEFAULT_LADDER = ((0.35, 0.40), (0.70, 0.80), (0.995, 0.995))
STROKE_RAMP = 0.04  # joint-progress span over which a stroke hands off


class ScriptedExpert:
    """Finite-state demonstration policy driven by the sensed signals.

    Approaches under throttle until the telescope-joint pressure signals
    impact, then works through the fill ladder: alternating bucket-curl and
    boom-raise strokes, finishing with a boom raise. Stroke hand-offs ramp
    over a small joint-progress span, so within the fill phase the commanded
    action is a piecewise-linear function of the joint angles and stays
    recoverable from instantaneous sensors. One action dominates nearly
    every tick, mirroring how human operators drive.
    """

    def __init__(self, gas=0.8, curl=0.7, boom=0.6, impact_p_t=6.0,
                 ladder=DEFAULT_LADDER):
        self.gas = gas
        self.curl = curl
        self.boom = boom
        self.impact_p_t = impact_p_t
        self.ladder = tuple(ladder)
        self.phase = APPROACH

    def reset(self):
        self.phase = APPROACH

    def perturbed(self, rng: np.random.Generator,
                  variation: float = 1.0) -> "ScriptedExpert":
        """Copy with operator-style variation of the gains; variation=0 is
        an exact copy."""
        jitter = lambda v, r: float(np.clip(v * rng.uniform(1 - r, 1 + r), 0.0, 1.0))
        shift = 0.015 * variation
        ladder = tuple(
            (min(p2 + rng.uniform(-shift, shift), 0.995),
             min(p1 + rng.uniform(-shift, shift), 0.995))
            for p2, p1 in self.ladder[:-1]) + (self.ladder[-1],)
        return ScriptedExpert(
            gas=jitter(self.gas, 0.1 * variation),
            curl=jitter(self.curl, 0.1 * variation),
            boom=jitter(self.boom, 0.1 * variation),
            impact_p_t=self.impact_p_t * rng.uniform(1 - 0.05 * variation,
                                                     1 + 0.05 * variation),
            ladder=ladder)

    def act(self, s: np.ndarray) -> np.ndarray:
        theta1, theta2, p_t = s[0], s[1], s[3]
        prog1 = (theta1 - THETA1_LIMITS[0]) / (THETA1_LIMITS[1] - THETA1_LIMITS[0])
        prog2 = (theta2 - THETA2_LIMITS[0]) / (THETA2_LIMITS[1] - THETA2_LIMITS[0])

        if self.phase == APPROACH:
            if p_t >= self.impact_p_t:
                self.phase = FILL
            else:
                return np.array([0.0, 0.0, self.gas])
        if self.phase == FILL and prog1 > 0.97 and prog2 > 0.97:
            self.phase = FINISH

        u1 = u2 = 0.0
        remaining = 1.0
        if self.phase == FILL:
            for p2_target, p1_target in self.ladder:
                for prog, target, mag in ((prog2, p2_target, None),
                                          (prog1, p1_target, self.boom)):
                    if prog < target:
                        w = min(1.0, (target - prog) / STROKE_RAMP)
                        if mag is None:
                            u2 += remaining * w * self.curl
                        else:
                            u1 += remaining * w * mag
                        remaining *= 1.0 - w
                if remaining < 1e-9:
                    break
        u1 += remaining * self.boom  # ladder exhausted / finish: raise out
        return np.array([u1, u2, 0.0])


# ---------------------------------------------------------------------------
# rollouts and demonstration synthesis


@dataclass
class RolloutResult:
    trajectory: list        # (LoaderState, sensor vector, control) per control tick
    success: bool
    steps: int
    termination: str        # filled | timeout | stalled

    @property
    def final_fill(self) -> float:
        return self.trajectory[-1][0].fill if self.trajectory else 0.0


def _initial_state(cond: ConditionProfile, rng: np.random.Generator) -> LoaderState:
    lo, hi = cond.pile_distance_range
    return LoaderState(
        x=float(rng.uniform(lo, hi)), v=0.0,
        theta1=float(np.clip(0.05 + rng.normal(0, 0.02), *THETA1_LIMITS)),
        theta2=float(np.clip(-0.1 + rng.normal(0, 0.03), *THETA2_LIMITS)),
        fill=0.0, internal_load=0.0)


def rollout(policy, cond: ConditionProfile, rng: np.random.Generator,
            max_steps: int = 120, sim_rate_hz: float = 50.0,
            control_hz: float = CONTROL_HZ,
            state: LoaderState | None = None) -> RolloutResult:
    """Closed loop: sense -> policy -> hold the command over one control
    period integrated at the fine simulation rate."""
    if hasattr(policy, "reset"):
        policy.reset()
    if state is None:
        state = _initial_state(cond, rng)
    substeps = max(1, int(round(sim_rate_hz / control_hz)))
    dt = 1.0 / sim_rate_hz
    trajectory = []
    history = []
    termination = "timeout"
    for k in range(max_steps):
        s = sense(state, cond, rng)
        u = np.clip(np.asarray(policy(s) if callable(policy) else policy.act(s),
                               dtype=np.float64), -1.0, 1.0)
        if u.shape != (3,) or not np.all(np.isfinite(u)):
            raise ValueError(f"policy returned invalid control {u!r}")
        for _ in range(substeps):
            state = step(state, u, cond, dt)
        trajectory.append((state, s, u))
        if state.fill >= FILL_DONE:
            termination = "filled"
            break
        history.append(state.as_array())
        if len(history) > 30 and np.max(np.abs(history[-1] - history[-31])) < 1e-9:
            termination = "stalled"
            break
    return RolloutResult(trajectory=trajectory,
                         success=state.fill >= SUCCESS_FILL,
                         steps=len(trajectory), termination=termination)


def policy_from_params(params):
    """Wrap trained ControllerParams as a rollout policy."""
    from .controllers import predict

    def policy(s):
        u, _, _ = predict(params, s[None, :])
        return u[0]

    return policy


def success_rate(policy, cond: ConditionProfile, n: int,
                 rng: np.random.Generator, **rollout_kw) -> float:
    """Percentage of n rollouts ending with the bucket at least half-full."""
    if n < 1:
        raise ValueError(f"need at least one rollout, got n={n}")
    wins = sum(rollout(policy, cond, rng, **rollout_kw).success for _ in range(n))
    return 100.0 * wins / n


def generate_demonstrations(n: int, cond: ConditionProfile, rate_hz: float,
                            rng: np.random.Generator,
                            full_fraction: float = 52 / 72,
                            max_duration_s: float = 25.0,
                            control_hz: float = CONTROL_HZ,
                            expert_variation: float = 1.0) -> list:
    """Synthesize n expert demonstrations logged at rate_hz.

    The expert runs at the 3 Hz control rate while the simulator integrates
    and logs at the native sampling rate. A configurable fraction of episodes
    is cut off at partial fill, mimicking non-ideal human runs.
    """
    from .dataset import Demonstration

    if n < 1:
        raise ValueError(f"need at least one demonstration, got n={n}")
    n_full = int(round(full_fraction * n))
    partial_ids = set(rng.permutation(n)[: n - n_full].tolist())
    dt = 1.0 / rate_hz
    control_every = max(1, int(round(rate_hz / control_hz)))
    demos = []
    for i in range(n):
        expert = ScriptedExpert().perturbed(rng, variation=expert_variation)
        state = _initial_state(cond, rng)
        target_fill = float(rng.uniform(0.45, 0.85)) if i in partial_ids else 1.0
        max_ticks = int(max_duration_s * rate_hz)
        t_log, obs_log, u_log, fill_log = [], [], [], []
        u = np.zeros(3)
        for tick in range(max_ticks):
            s = sense(state, cond, rng)
            if tick % control_every == 0:
                u = expert.act(s)
            t_log.append(tick * dt)
            obs_log.append(s)
            u_log.append(u)
            fill_log.append(state.fill)
            state = step(state, u, cond, dt)
            if state.fill >= min(target_fill, 0.995):
                break
        # closing record: the settled state under the still-held command
        t_log.append(len(t_log) * dt)
        obs_log.append(sense(state, cond, rng))
        u_log.append(u)
        fill_log.append(state.fill)
        demo = Demonstration(
            id=f"demo_{i:03d}", sample_rate_hz=rate_hz,
            t=np.array(t_log), obs=np.array(obs_log),
            u=np.array(u_log), fill=np.array(fill_log))
        demo.validate()
        demos.append(demo)
    return demos
