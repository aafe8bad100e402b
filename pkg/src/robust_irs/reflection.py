"""IRS reflection-coefficient feasible sets and the projections onto them.

A coefficient is ``a * exp(1j*theta)``. Amplitudes come from
``{k / (2**q_a - 1)}`` (``{1}`` for ``q_a == 0``) or ``[0, 1]``; phases from
``{2*pi*l / 2**q_theta}`` or ``[0, 2*pi)``. ``None`` bits mean continuous.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

__all__ = [
    "FeasibleSet",
    "ReflectionState",
    "amplitude_set",
    "phase_set",
    "circular_distance",
    "project_discrete",
    "project_disc",
]


def amplitude_set(q_a):
    if q_a < 0:
        raise ValueError(f"q_a must be >= 0, got {q_a}")
    if q_a == 0:
        return np.array([1.0])
    levels = 2 ** q_a
    return np.arange(levels) / (levels - 1)


def phase_set(q_theta):
    if q_theta < 0:
        raise ValueError(f"q_theta must be >= 0, got {q_theta}")
    L = 2 ** q_theta
    return 2 * np.pi * np.arange(L) / L


def circular_distance(a, b):
    """Wrap-around distance between angles, in ``[0, pi]``."""
    return np.abs(np.mod(np.asarray(a) - np.asarray(b) + np.pi, 2 * np.pi) - np.pi)


def project_discrete(x, amplitudes, phases):
    """Nearest point of ``{a e^{j theta}}`` to ``x`` (elementwise).

    The nearest phase is picked first, then the nearest amplitude along that
    ray; for nonnegative amplitudes this is the exact joint argmin. Ties go to
    the smaller phase, then the smaller amplitude (inputs sorted ascending).
    """
    x = np.asarray(x, dtype=complex)
    amplitudes = np.asarray(amplitudes, dtype=float)
    phases = np.asarray(phases, dtype=float)
    flat = x.reshape(-1)
    ang = np.angle(flat)
    it = np.argmin(circular_distance(phases[None, :], ang[:, None]), axis=1)
    rays = np.exp(1j * phases[it])
    ia = np.argmin(np.abs(amplitudes[None, :] * rays[:, None] - flat[:, None]), axis=1)
    out = amplitudes[ia] * np.exp(1j * phases[it])
    return out.reshape(x.shape) if x.ndim else complex(out[0])


def project_disc(x):
    """Projection onto the closed unit disc."""
    x = np.asarray(x, dtype=complex)
    mag = np.abs(x)
    out = np.where(mag > 1.0, x / np.where(mag > 1.0, mag, 1.0), x)
    return out if x.ndim else complex(out)


@dataclass(frozen=True)
class FeasibleSet:
    """Per-element reflection constraint; ``None`` bits mean continuous."""

    q_a: Optional[int] = None
    q_theta: Optional[int] = None

    def __post_init__(self):
        for name in ("q_a", "q_theta"):
            bits = getattr(self, name)
            if bits is not None and bits < 0:
                raise ValueError(f"{name} must be >= 0 or None, got {bits}")

    @property
    def mode(self):
        if self.q_a is None and self.q_theta is None:
            return "continuous"
        if self.q_a is not None and self.q_theta is not None:
            return "discrete"
        return "CADP" if self.q_a is None else "DACP"

    @property
    def amplitudes(self):
        return None if self.q_a is None else amplitude_set(self.q_a)

    @property
    def phases(self):
        return None if self.q_theta is None else phase_set(self.q_theta)

    def points(self):
        """All points of a fully discrete set, in enumeration order (phase-major)."""
        if self.mode != "discrete":
            raise ValueError(f"{self.mode} set has no finite point list")
        return (self.amplitudes[None, :] * np.exp(1j * self.phases)[:, None]).ravel()

    def project(self, x):
        x = np.asarray(x, dtype=complex)
        mode = self.mode
        if mode == "continuous":
            return project_disc(x)
        if mode == "discrete":
            return project_discrete(x, self.amplitudes, self.phases)
        if mode == "CADP":
            phases = self.phases
            ang = np.angle(x)
            it = np.argmin(circular_distance(phases[None, :], ang.reshape(-1)[:, None]), axis=1)
            it = it.reshape(x.shape)
            a = np.clip(np.abs(x) * np.cos(ang - phases[it]), 0.0, 1.0)
            return a * np.exp(1j * phases[it])
        # DACP: keep the phase, round the modulus
        amps = self.amplitudes
        ia = np.argmin(np.abs(amps[None, :] - np.abs(x).reshape(-1)[:, None]), axis=1)
        return amps[ia].reshape(x.shape) * np.exp(1j * np.angle(x))

    def contains(self, x, atol=0.0):
        """Elementwise membership test; exact by default."""
        x = np.asarray(x, dtype=complex)
        if self.mode == "discrete":
            pts = self.points()
            return np.any(np.abs(x.reshape(-1)[:, None] - pts[None, :]) <= atol, axis=1).reshape(x.shape)
        return np.abs(self.project(x) - x) <= max(atol, 1e-12)


@dataclass
class ReflectionState:
    """Reflection vector ``v``, its feasible copy ``u`` and the dual for ``v = u``."""

    v: np.ndarray
    u: np.ndarray
    dual: np.ndarray
    feasible: FeasibleSet = field(default_factory=FeasibleSet)

    @classmethod
    def initial(cls, N, feasible, v0=None):
        v0 = np.ones(N, dtype=complex) if v0 is None else np.asarray(v0, dtype=complex)
        u = feasible.project(v0)
        return cls(v=u.copy(), u=u, dual=np.zeros(N, dtype=complex), feasible=feasible)

    @property
    def violation(self):
        return float(np.max(np.abs(self.v - self.u))) if self.v.size else 0.0
