"""Ground-truth propagation: geometry, path loss, Rician fading, cascaded links.

Power quantities are linear and in milliwatts; every dB/dBm conversion in the
package goes through :func:`db_to_linear`.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

__all__ = [
    "RICIAN_CAP",
    "db_to_linear",
    "linear_to_db",
    "Geometry",
    "PathLossModel",
    "RicianSpec",
    "ChannelSet",
    "path_loss",
    "rician_channel",
    "cascaded_channel",
    "ula_response",
    "upa_response",
    "sample_users",
    "generate_channels",
]

# Rician factors at or above this are treated as pure LoS.
RICIAN_CAP = 1e12


def db_to_linear(x_db):
    """dB (or dBm) to linear (or mW). ``None`` maps to 0 (no power / no LoS)."""
    if x_db is None:
        return 0.0
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


@dataclass(frozen=True)
class Geometry:
    """Node placement. AP array lies along x, IRS array in the y-z plane.

    Element spacing is half a wavelength for both arrays.
    """

    ap_ref: tuple = (2.0, 0.0, 0.0)
    irs_ref: tuple = (0.0, 45.0, 2.0)
    user_positions: tuple = ()
    M: int = 4
    N: int = 20
    irs_ny: int = 4

    def __post_init__(self):
        if self.M < 1 or self.N < 1:
            raise ValueError("M and N must be positive")
        if self.N % self.irs_ny:
            raise ValueError(f"N={self.N} is not a multiple of N_y={self.irs_ny}")
        for p in (self.ap_ref, self.irs_ref, *self.user_positions):
            if len(p) != 3 or not np.all(np.isfinite(p)):
                raise ValueError(f"bad 3-D position {p!r}")

    @property
    def irs_nz(self):
        return self.N // self.irs_ny

    @property
    def K(self):
        return len(self.user_positions)

    def with_users(self, positions):
        return Geometry(self.ap_ref, self.irs_ref, tuple(tuple(map(float, p)) for p in positions),
                        self.M, self.N, self.irs_ny)


@dataclass(frozen=True)
class PathLossModel:
    c0_db: float = -30.0
    d0: float = 1.0
    alpha_au: float = 3.6
    alpha_ai: float = 2.2
    alpha_iu: float = 2.2

    def __post_init__(self):
        if min(self.alpha_au, self.alpha_ai, self.alpha_iu) <= 0:
            raise ValueError("path-loss exponents must be positive")

    @property
    def c0(self):
        return float(db_to_linear(self.c0_db))


@dataclass(frozen=True)
class RicianSpec:
    """Linear Rician factors; ``np.inf`` (or anything >= RICIAN_CAP) is pure LoS."""

    beta_au: float = 0.0
    beta_ai: float = float(db_to_linear(3.0))
    beta_iu: float = 0.0

    def __post_init__(self):
        if min(self.beta_au, self.beta_ai, self.beta_iu) < 0:
            raise ValueError("Rician factors must be >= 0")


@dataclass
class ChannelSet:
    """True channels of one fading block.

    Attributes
    ----------
    G : ndarray (N, M)
        AP-IRS channel.
    h_d : ndarray (K, M)
        Direct AP-user channels, one row per user.
    h_r : ndarray (K, N)
        IRS-user channels, one row per user.
    """

    G: np.ndarray
    h_d: np.ndarray
    h_r: np.ndarray
    H: np.ndarray = field(init=False)
    H_tilde: np.ndarray = field(init=False)

    def __post_init__(self):
        self.H = np.stack([cascaded_channel(hr, self.G) for hr in self.h_r])
        self.H_tilde = np.concatenate([self.h_d.conj()[:, None, :], self.H], axis=1)

    @property
    def K(self):
        return self.h_d.shape[0]


def path_loss(d, alpha, model=PathLossModel()):
    """Linear power gain ``C0 * (d / D0) ** -alpha``."""
    d = float(d)
    if not d > 0:
        raise ValueError(f"link distance must be positive, got {d}")
    return model.c0 * (d / model.d0) ** (-alpha)


def rician_channel(rows, cols, rician_factor, los, gain, rng):
    """``sqrt(gain) * (sqrt(b/(1+b)) LoS + sqrt(1/(1+b)) NLoS)``.

    NLoS entries are i.i.d. CN(0, 1). A factor at or above ``RICIAN_CAP``
    returns ``sqrt(gain) * LoS`` without consuming random numbers.
    """
    if rician_factor < 0:
        raise ValueError(f"Rician factor must be >= 0, got {rician_factor}")
    if gain <= 0:
        raise ValueError(f"gain must be positive, got {gain}")
    los = np.broadcast_to(np.asarray(los, dtype=complex), (rows, cols))
    if rician_factor >= RICIAN_CAP:
        return np.sqrt(gain) * np.array(los)
    nlos = (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)
    b = float(rician_factor)
    return np.sqrt(gain) * (np.sqrt(b / (1 + b)) * los + np.sqrt(1 / (1 + b)) * nlos)


def cascaded_channel(h_r, G):
    """``diag(h_r^H) G``: row n is ``conj(h_r[n]) * G[n]``."""
    h_r = np.asarray(h_r)
    G = np.asarray(G)
    if h_r.ndim != 1 or G.ndim != 2 or h_r.shape[0] != G.shape[0]:
        raise ValueError(f"cannot cascade h_r {h_r.shape} with G {G.shape}")
    return h_r.conj()[:, None] * G


def _unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def ula_response(M, direction):
    """Half-wavelength ULA along x, phase referenced to the first antenna."""
    ux = _unit(direction)[0]
    return np.exp(-1j * np.pi * np.arange(M) * ux)


def upa_response(ny, nz, direction):
    """Half-wavelength UPA in the y-z plane, y-index fastest."""
    u = _unit(direction)
    iy, iz = np.meshgrid(np.arange(ny), np.arange(nz), indexing="xy")
    return np.exp(-1j * np.pi * (iy.ravel() * u[1] + iz.ravel() * u[2]))


def sample_users(K, rng, center=(3.0, 45.0, 0.0), radius=3.0):
    """Uniform positions in a horizontal disc around ``center``."""
    r = radius * np.sqrt(rng.uniform(size=K))
    phi = rng.uniform(0.0, 2 * np.pi, size=K)
    c = np.asarray(center, dtype=float)
    return [tuple(c + (ri * np.cos(p), ri * np.sin(p), 0.0)) for ri, p in zip(r, phi)]


def generate_channels(geometry, path_loss_model, rician_spec, rng):
    """Draw one realization of ``G`` and every user's ``h_d``, ``h_r``.

    Draw order is fixed (G, then for each user h_d and h_r), so a seeded
    ``rng`` gives a bit-identical :class:`ChannelSet`.
    """
    if geometry.K < 1:
        raise ValueError("geometry has no users")
    M, N = geometry.M, geometry.N
    ny, nz = geometry.irs_ny, geometry.irs_nz
    ap = np.asarray(geometry.ap_ref, dtype=float)
    irs = np.asarray(geometry.irs_ref, dtype=float)

    d_ai = np.linalg.norm(irs - ap)
    g_los = np.outer(upa_response(ny, nz, ap - irs), ula_response(M, irs - ap).conj())
    G = rician_channel(N, M, rician_spec.beta_ai, g_los,
                       path_loss(d_ai, path_loss_model.alpha_ai, path_loss_model), rng)

    h_d = np.empty((geometry.K, M), dtype=complex)
    h_r = np.empty((geometry.K, N), dtype=complex)
    for k, pos in enumerate(geometry.user_positions):
        pos = np.asarray(pos, dtype=float)
        d_au = np.linalg.norm(pos - ap)
        d_iu = np.linalg.norm(pos - irs)
        h_d[k] = rician_channel(1, M, rician_spec.beta_au, ula_response(M, pos - ap)[None, :],
                                path_loss(d_au, path_loss_model.alpha_au, path_loss_model), rng)[0]
        h_r[k] = rician_channel(1, N, rician_spec.beta_iu, upa_response(ny, nz, pos - irs)[None, :],
                                path_loss(d_iu, path_loss_model.alpha_iu, path_loss_model), rng)[0]
    return ChannelSet(G=G, h_d=h_d, h_r=h_r)
