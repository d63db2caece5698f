"""Channels, real-valued stacking, per-slot system assembly, and detection.

Complex quantities are mapped to the real domain with the usual block
pattern so that ``H_real @ u_real`` is the stacked noise-free received
signal.  ``assemble`` glues the per-user DPCIR rows into the stacked
system (G, offsets, row metadata) that every precoder consumes.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np

from .constellation import Constellation, classify_hull
from .dpcir import (
    FREE,
    NONNEG,
    ZERO,
    Dpcir,
    ReducedDpcir,
    build_dpcir,
    reduce_dpcir,
)


@dataclass(frozen=True)
class ChannelSet:
    """K complex row channels of length N."""

    rows: np.ndarray   # (K, N) complex

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=complex)
        if rows.ndim != 2:
            raise ValueError("channel rows must be a (K, N) array")
        if not np.all(np.isfinite(rows)):
            raise ValueError("channel entries must be finite")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @property
    def K(self) -> int:
        return self.rows.shape[0]

    @property
    def N(self) -> int:
        return self.rows.shape[1]


def rng_stream(master_seed: int, trial: int, purpose: str) -> np.random.Generator:
    """Counter-style RNG keyed by (seed, trial, purpose): reproducible
    independently of execution order or worker count."""
    tag = zlib.crc32(purpose.encode("utf-8"))
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(trial, tag))
    return np.random.Generator(np.random.Philox(ss))


def sample_channel(N: int, K: int, rng: np.random.Generator) -> ChannelSet:
    """i.i.d. CN(0, 1) entries: real/imag parts independent N(0, 1/2)."""
    if N < 1 or K < 1:
        raise ValueError("N and K must be >= 1")
    re = rng.normal(0.0, np.sqrt(0.5), size=(K, N))
    im = rng.normal(0.0, np.sqrt(0.5), size=(K, N))
    return ChannelSet(re + 1j * im)


def realify_channel(h_row: np.ndarray) -> np.ndarray:
    """2 x 2N real matrix H with H @ stack(u) = stack(h u)."""
    h_row = np.asarray(h_row, dtype=complex).reshape(-1)
    return np.vstack([
        np.concatenate([h_row.real, -h_row.imag]),
        np.concatenate([h_row.imag, h_row.real]),
    ])


def stack_complex(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=complex).reshape(-1)
    return np.concatenate([u.real, u.imag])


def unstack_complex(u_real: np.ndarray) -> np.ndarray:
    u_real = np.asarray(u_real, dtype=float).reshape(-1)
    n = u_real.size // 2
    return u_real[:n] + 1j * u_real[n:]


@dataclass(frozen=True)
class SymbolAssignment:
    """Per-user symbol indices, noise levels, and SINR thresholds."""

    indices: np.ndarray   # (K,) ints into the constellation
    sigma: np.ndarray     # (K,) > 0
    gamma: np.ndarray     # (K,) > 0

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=int)
        sig = np.asarray(self.sigma, dtype=float)
        gam = np.asarray(self.gamma, dtype=float)
        if not (idx.shape == sig.shape == gam.shape):
            raise ValueError("indices, sigma, gamma must share one shape")
        if np.any(sig <= 0) or np.any(gam <= 0):
            raise ValueError("sigma and gamma must be positive")
        for a in (idx, sig, gam):
            a.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "sigma", sig)
        object.__setattr__(self, "gamma", gam)

    @classmethod
    def uniform(cls, indices, sigma: float, gamma: float):
        indices = np.asarray(indices, dtype=int)
        k = indices.size
        return cls(indices, np.full(k, float(sigma)), np.full(k, float(gamma)))


@dataclass(frozen=True)
class StackedSystem:
    """Assembled per-slot system: G, row offsets, and row metadata.

    Row metadata drives the solvers: ``row_user`` maps rows to users,
    ``row_constraint`` carries the delta sign rule (nonneg / zero / free),
    and ``row_block`` is 1 or 2 for the spanning rows of boundary users'
    reduced regions (0 elsewhere).
    """

    G: np.ndarray              # (L, 2N)
    offsets: np.ndarray        # (L,) = b + c per row (virtual rows: a_v . x_i)
    row_user: np.ndarray       # (L,) ints
    row_constraint: tuple      # (L,) of NONNEG / ZERO / FREE
    row_block: np.ndarray      # (L,) ints in {0, 1, 2}
    boundary_users: frozenset
    channels: ChannelSet
    h_real: tuple              # K matrices (2, 2N)
    constellation: Constellation
    assignment: SymbolAssignment
    reduced: bool
    dpcirs: tuple              # per-user Dpcir of the assigned symbol
    reduced_regions: tuple     # per-user ReducedDpcir or None

    @property
    def L(self) -> int:
        return self.G.shape[0]

    @property
    def N(self) -> int:
        return self.G.shape[1] // 2

    @property
    def K(self) -> int:
        return self.channels.K

    def user_rows(self, k: int) -> np.ndarray:
        return np.nonzero(self.row_user == k)[0]

    @property
    def power_scales(self) -> np.ndarray:
        """Per-row sigma_k * sqrt(gamma_k) for the power problems."""
        a = self.assignment
        per_user = a.sigma * np.sqrt(a.gamma)
        return per_user[self.row_user]

    def power_target(self) -> np.ndarray:
        """Sigma Gamma^{1/2} (b + c)."""
        return self.power_scales * self.offsets

    def balance_target(self, sigma: float) -> np.ndarray:
        """sigma (b + c), the equal-noise balancing target."""
        return float(sigma) * self.offsets

    def received(self, u_real: np.ndarray) -> np.ndarray:
        """Noise-free received points, one (re, im) row per user."""
        return np.array([H @ u_real for H in self.h_real])

    def min_sinr(self, u_real: np.ndarray, sigma: float) -> float:
        """min_k ||H_k u||^2 / sigma^2, the post-hoc reported SINR."""
        y = self.received(u_real)
        return float(np.min(np.sum(y**2, axis=1)) / float(sigma) ** 2)


@dataclass(frozen=True)
class PrecodeSolution:
    u_real: np.ndarray
    delta: np.ndarray          # (L,) displacement per stacked row
    objective: float
    status: str                # optimal | infeasible | max_iter | numerical
    min_sinr_achieved: float = float("nan")
    trace: tuple | None = None
    info: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "objective": None if not np.isfinite(self.objective) else float(self.objective),
            "u_real": [float(v) for v in np.atleast_1d(self.u_real)],
            "delta": [float(v) for v in np.atleast_1d(self.delta)],
            "min_sinr_achieved": (float(self.min_sinr_achieved)
                                  if np.isfinite(self.min_sinr_achieved) else None),
            "trace": None if self.trace is None else [float(v) for v in self.trace],
            "info": {k: v for k, v in self.info.items()},
        }


def assemble(channels: ChannelSet, constellation: Constellation,
             assignment: SymbolAssignment, reduced: bool = True) -> StackedSystem:
    """Stack the per-user DPCIR rows against the real-valued channels.

    With ``reduced=True`` boundary-symbol users contribute the 2-row
    reduced form (L = 2|K_bd| + sum of M_i over the rest); otherwise every
    user contributes its full halfspace system.
    """
    K = channels.K
    if assignment.indices.size != K:
        raise ValueError(
            f"assignment has {assignment.indices.size} users, channels have {K}"
        )
    if np.any(assignment.indices < 0) or np.any(assignment.indices >= constellation.size):
        raise ValueError("symbol index out of range")
    hull = classify_hull(constellation)

    g_blocks, offsets, users, constraints, blocks = [], [], [], [], []
    h_real = tuple(realify_channel(channels.rows[k]) for k in range(K))
    boundary_users = set()
    dpcirs, reduced_regions = [], []
    for k in range(K):
        i = int(assignment.indices[k])
        d = build_dpcir(constellation, i)
        dpcirs.append(d)
        on_boundary = i in hull.boundary_indices
        if on_boundary:
            boundary_users.add(k)
        if reduced and on_boundary:
            r = reduce_dpcir(d)
            reduced_regions.append(r)
            g_blocks.append(r.A2 @ h_real[k])
            offsets.extend(r.offset)
            users.extend([k, k])
            constraints.extend(r.row_constraints)
            for row_idx, rule in enumerate(r.row_constraints):
                if rule == ZERO:
                    blocks.append(0)
                elif len(r.spanning_rows) == 1:
                    # single spanning coordinate goes to block 2
                    blocks.append(2)
                else:
                    blocks.append(1 if row_idx == r.spanning_rows[0] else 2)
        else:
            reduced_regions.append(None)
            g_blocks.append(d.A @ h_real[k])
            offsets.extend(d.b + d.c)
            users.extend([k] * len(d.A))
            constraints.extend([NONNEG] * len(d.A))
            blocks.extend([0] * len(d.A))

    G = np.vstack(g_blocks)
    return StackedSystem(
        G=G,
        offsets=np.asarray(offsets, dtype=float),
        row_user=np.asarray(users, dtype=int),
        row_constraint=tuple(constraints),
        row_block=np.asarray(blocks, dtype=int),
        boundary_users=frozenset(boundary_users),
        channels=channels,
        h_real=h_real,
        constellation=constellation,
        assignment=assignment,
        reduced=reduced,
        dpcirs=tuple(dpcirs),
        reduced_regions=tuple(reduced_regions),
    )


def ml_detect(r, c: Constellation) -> int:
    """Nearest-point detection; ties break to the lowest index."""
    return c.nearest_index(r)


def add_noise(y, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Add circular complex Gaussian noise of total variance sigma^2."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    y = np.asarray(y, dtype=float)
    if sigma == 0:
        return y.copy()
    return y + rng.normal(0.0, sigma / np.sqrt(2.0), size=y.shape)
