"""Parameter schedules: annealing ramps, starting points, learned values, files."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError

FORMAT_VERSION = 1


def _frozen_array(values) -> np.ndarray:
    a = np.array(values, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Schedule:
    theta_x: np.ndarray
    theta_z: np.ndarray
    label: str = ""

    def __post_init__(self):
        tx = _frozen_array(self.theta_x)
        tz = _frozen_array(self.theta_z)
        if tx.ndim != 1 or tx.shape != tz.shape or tx.size < 1:
            raise ValueError(f"theta_x/theta_z must be equal-length 1-d, got {tx.shape} and {tz.shape}")
        object.__setattr__(self, "theta_x", tx)
        object.__setattr__(self, "theta_z", tz)

    @property
    def steps(self) -> int:
        return self.theta_x.size

    def __eq__(self, other):
        if not isinstance(other, Schedule):
            return NotImplemented
        return np.array_equal(self.theta_x, other.theta_x) and np.array_equal(self.theta_z, other.theta_z)

    def __hash__(self):
        return hash((self.theta_x.tobytes(), self.theta_z.tobytes()))

    def relabel(self, label: str) -> "Schedule":
        return Schedule(self.theta_x, self.theta_z, label)

    def as_vector(self) -> np.ndarray:
        """theta_x followed by theta_z."""
        return np.concatenate([self.theta_x, self.theta_z])

    @classmethod
    def from_vector(cls, vec, label: str = "") -> "Schedule":
        vec = np.asarray(vec, dtype=float)
        p = vec.size // 2
        return cls(vec[:p], vec[p:], label)

    def __repr__(self):
        return f"Schedule({self.label or '?'}, p={self.steps})"


@dataclass(frozen=True, eq=False)
class FreezeMask:
    freeze_x: np.ndarray
    freeze_z: np.ndarray

    def __post_init__(self):
        fx = np.array(self.freeze_x, dtype=bool)
        fz = np.array(self.freeze_z, dtype=bool)
        if fx.shape != fz.shape or fx.ndim != 1:
            raise ValueError("freeze masks must be equal-length 1-d")
        fx.setflags(write=False)
        fz.setflags(write=False)
        object.__setattr__(self, "freeze_x", fx)
        object.__setattr__(self, "freeze_z", fz)

    @classmethod
    def none(cls, p: int) -> "FreezeMask":
        return cls(np.zeros(p, bool), np.zeros(p, bool))

    @classmethod
    def all(cls, p: int) -> "FreezeMask":
        return cls(np.ones(p, bool), np.ones(p, bool))

    @property
    def steps(self) -> int:
        return self.freeze_x.size

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.freeze_x, self.freeze_z])

    def __eq__(self, other):
        return (
            isinstance(other, FreezeMask)
            and np.array_equal(self.freeze_x, other.freeze_x)
            and np.array_equal(self.freeze_z, other.freeze_z)
        )


RAMPS = ("p+1", "p")


def linear_anneal(p: int, x: float = 1.0, z: float = 1.0, ramp: str = "p+1") -> Schedule:
    """theta_z ramps as z*j/(p+1), theta_x as x*(p+1-j)/(p+1).

    ``ramp="p"`` divides by p instead, so the last step reaches theta_z = z
    and the first theta_x = x; the ring-model overlap tables were produced
    with this variant.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if ramp not in RAMPS:
        raise ValueError(f"ramp must be one of {RAMPS}")
    denom = p + 1 if ramp == "p+1" else p
    j = np.arange(1, p + 1)
    return Schedule(x * (p + 1 - j) / denom, z * j / denom, f"L({p},{_fmt(x)},{_fmt(z)})")


def _fmt(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


# Starting points for training. Digit strings list theta_j for j=1..10;
# '5' means 0.5. Key 8's theta_z string is one digit short in the source
# table and is right-aligned to ten steps.
_INITIAL_TABLE = {
    2: ("1111111111", "0000000000"),
    3: ("1111111110", "0000000001"),
    4: ("1111100000", "0000011111"),
    5: ("0000000000", "1111111111"),
    6: ("1111111111", "Linear"),
    7: ("1111100000", "Linear"),
    8: ("1111111110", "000000001"),
    9: ("1111111110", "Linear"),
    10: ("1111111110", "Frozen"),
    11: ("1111111150", "0000000051"),
    12: ("1111111150", "Linear"),
    13: ("1111111150", "Frozen"),
}
INITIAL_KEYS = tuple(_INITIAL_TABLE)
_INITIAL_STEPS = 10
_DIGITS = {"0": 0.0, "1": 1.0, "5": 0.5}


def _decode_digits(s: str) -> np.ndarray:
    return np.array([_DIGITS[ch] for ch in s.rjust(_INITIAL_STEPS, "0")])


def midpoint_ramp(p: int = _INITIAL_STEPS) -> np.ndarray:
    """0.05, 0.15, ..., 0.95 for p=10."""
    return (np.arange(p) + 0.5) / p


def initial_schedule(key: int):
    """Return (schedule, freeze mask) for a training starting point."""
    if key not in _INITIAL_TABLE:
        raise KeyError(f"initial schedule key must be one of {INITIAL_KEYS}; got {key!r}")
    xs, zs = _INITIAL_TABLE[key]
    theta_x = _decode_digits(xs)
    freeze_z = np.zeros(_INITIAL_STEPS, bool)
    if zs in ("Linear", "Frozen"):
        theta_z = midpoint_ramp()
        freeze_z[:] = zs == "Frozen"
    else:
        theta_z = _decode_digits(zs)
    mask = FreezeMask(np.zeros(_INITIAL_STEPS, bool), freeze_z)
    return Schedule(theta_x, theta_z, f"init{key}"), mask


def average_schedules(schedules, label: str = "avg") -> Schedule:
    schedules = list(schedules)
    if not schedules:
        raise ValueError("nothing to average")
    p = {s.steps for s in schedules}
    if len(p) != 1:
        raise ValueError(f"schedules have different step counts {sorted(p)}")
    tx = np.mean([s.theta_x for s in schedules], axis=0)
    tz = np.mean([s.theta_z for s in schedules], axis=0)
    return Schedule(tx, tz, label)


# Learned schedules: key -> (initial key, theta_z, theta_x)
_LEARNED = {
    8: (8,
        (-0.279307, 0.313947, 0.614148, -0.220295, 0.256869, 0.465194, -0.212299, 0.312254, 1.50651, 2.011013),
        (0.985164, 1.711707, 1.308381, 1.272364, 0.71373, 2.073916, 1.340572, 1.037615, 1.217506, 0.730447)),
    31: (9,
         (0.368606, 0.359748, 0.190667, 0.392364, 0.208514, 0.021365, 0.642995, 1.143198, 1.64574, 1.814225),
         (1.168114, 1.375238, 1.350988, 1.356165, 1.337642, 1.091975, 1.426565, 1.162721, 0.885662, 0.431466)),
    49: (9,
         (0.424251, 0.771576, 0.464935, 0.435078, 0.404496, 0.187802, 0.77197, 1.300528, 1.701031, 1.745732),
         (1.510793, 1.665954, 1.205267, 1.062189, 1.59617, 1.481757, 1.6141, 1.285973, 0.903954, 0.396039)),
    84: (11,
         (0.1629, -0.496857, 0.450711, -0.791892, 0.326329, -0.475372, 0.433593, 1.033271, 1.659841, 2.031027),
         (1.945308, 1.142874, 0.875239, 0.914909, 1.373274, 1.191093, 2.016909, 1.142808, 1.104454, 0.585)),
    113: (12,
          (0.37599, 0.680923, 0.997025, 0.715514, 0.271968, 0.519316, 1.068852, 1.443309, 1.433469, 1.333607),
          (1.609044, 1.459435, 1.971842, 1.625206, 1.537716, 1.515011, 1.398038, 0.983823, 0.5701, 0.273691)),
    122: (12,
          (0.489956, 0.510331, 0.740654, 0.538733, 0.245925, 0.08665, 0.761729, 1.188631, 1.418336, 1.89151),
          (1.683547, 0.979162, 1.878078, 1.631202, 1.16941, 1.055429, 1.635904, 1.172053, 0.795996, 0.519226)),
    154: (14,
          (0.748224, -0.080047, -0.117857, 0.316126, 0.096738, -0.307805, 1.210155, 1.183015, 1.557269, 1.745549),
          (1.35801, 0.955197, 1.397257, 1.219015, 1.396977, 1.420552, 1.283791, 0.889047, 0.671747, 0.339493)),
    157: (14,
          (0.677717, -0.099922, -0.055678, 0.294502, 0.107643, -0.276445, 1.070014, 1.057304, 1.479656, 1.646192),
          (1.359167, 1.060199, 1.293059, 1.248988, 1.328482, 1.431533, 1.237331, 0.854213, 0.688784, 0.382808)),
}
LEARNED_KEYS = tuple(_LEARNED)


def builtin_learned(key: int) -> Schedule:
    if key not in _LEARNED:
        raise KeyError(f"no built-in learned schedule {key!r}; known: {LEARNED_KEYS}")
    _, tz, tx = _LEARNED[key]
    return Schedule(tx, tz, str(key))


def learned_origin(key: int) -> int:
    """Initial-schedule key a built-in learned schedule was trained from."""
    return _LEARNED[key][0]


# --- files -------------------------------------------------------------------

@dataclass
class ScheduleFile:
    schedule: Schedule
    mask: FreezeMask | None = None
    provenance: dict = field(default_factory=dict)


def schedule_to_dict(schedule: Schedule, mask: FreezeMask | None = None, provenance=None) -> dict:
    d = {
        "version": FORMAT_VERSION,
        "label": schedule.label,
        "p": schedule.steps,
        "theta_x": schedule.theta_x.tolist(),
        "theta_z": schedule.theta_z.tolist(),
    }
    if mask is not None:
        d["freeze_x"] = mask.freeze_x.tolist()
        d["freeze_z"] = mask.freeze_z.tolist()
    if provenance:
        d["provenance"] = provenance
    return d


def schedule_from_dict(d: dict) -> ScheduleFile:
    try:
        version = d["version"]
        p = int(d["p"])
        tx = [float(v) for v in d["theta_x"]]
        tz = [float(v) for v in d["theta_z"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed schedule: {exc}") from exc
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported schedule version {version}")
    if len(tx) != p or len(tz) != p or p < 1:
        raise FormatError(f"p={p} but theta_x has {len(tx)} and theta_z {len(tz)} entries")
    mask = None
    if "freeze_x" in d or "freeze_z" in d:
        fx = d.get("freeze_x", [False] * p)
        fz = d.get("freeze_z", [False] * p)
        if len(fx) != p or len(fz) != p:
            raise FormatError("freeze mask length does not match p")
        mask = FreezeMask(fx, fz)
    return ScheduleFile(Schedule(tx, tz, d.get("label", "")), mask, d.get("provenance", {}))


def save_schedule(path, schedule: Schedule, mask=None, provenance=None) -> Path:
    path = Path(path)
    path.write_text(json.dumps(schedule_to_dict(schedule, mask, provenance), indent=2) + "\n")
    return path


def load_schedule(path) -> ScheduleFile:
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(d, dict):
        raise FormatError(f"{path}: expected a JSON object")
    return schedule_from_dict(d)


_LFAMILY = re.compile(r"^L\(\s*(\d+)\s*,\s*([-+0-9.eE]+)\s*,\s*([-+0-9.eE]+)\s*\)$")


def resolve_schedule(ref: str, ramp: str = "p+1") -> Schedule:
    """Accept a built-in key ('154'), an L-family literal ('L(10,1,1)') or a file path."""
    ref = ref.strip()
    m = _LFAMILY.match(ref)
    if m:
        return linear_anneal(int(m.group(1)), float(m.group(2)), float(m.group(3)), ramp)
    if ref.isdigit() and int(ref) in _LEARNED:
        return builtin_learned(int(ref))
    path = Path(ref)
    if path.exists():
        sf = load_schedule(path)
        return sf.schedule if sf.schedule.label else sf.schedule.relabel(path.stem)
    raise KeyError(f"cannot resolve schedule {ref!r}")


def split_schedule_list(text: str) -> list:
    """Split 'a,L(10,1,1),b' on commas that are not inside parentheses."""
    out, depth, cur = [], 0, []
    for ch in text:
        if ch == "," and depth == 0:
            out.append("".join(cur))
            cur = []
            continue
        depth += ch == "("
        depth -= ch == ")"
        cur.append(ch)
    out.append("".join(cur))
    return [s.strip() for s in out if s.strip()]
