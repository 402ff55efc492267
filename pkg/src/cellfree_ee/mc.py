"""Monte Carlo estimate of the average SE over Poisson AP layouts.

APs are a homogeneous PPP on a square torus of area ``S``; the typical user
sits at the origin and the other ``K - 1`` users are uniform. For each layout
the conditional SINR after averaging over small-scale fading is evaluated in
closed form, so the only randomness is geometric.

Every realization draws from its own substream keyed by ``(seed, index,
attempt)``, so results do not depend on evaluation order or worker count.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import model
from .model import DomainError, SystemParams

log = logging.getLogger(__name__)

SMALL_M = 8
MAX_DEGENERATE_FRACTION = 1e-3
MAX_RESAMPLE = 1000
PILOT_POLICIES = ("round_robin", "random")


class DegenerateRealizationError(ArithmeticError):
    """Non-positive SINR denominator, which only rounding can produce."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class SimulationError(RuntimeError):
    """The Monte Carlo run could not produce a trustworthy estimate."""


@dataclass(frozen=True)
class NetworkRealization:
    ap_positions: np.ndarray  # (M, 2) in m
    user_positions: np.ndarray  # (K, 2) in m; row 0 is the typical user
    torus_side: float
    attempts: int = 1

    @property
    def m_count(self) -> int:
        return int(self.ap_positions.shape[0])

    @property
    def small(self) -> bool:
        return self.m_count <= SMALL_M


@dataclass(frozen=True)
class PilotAssignment:
    pilot_index: np.ndarray  # (K,) ints in [0, n_pilots)
    n_pilots: int

    def same_pilot(self) -> np.ndarray:
        """``|psi_i^H psi_k|^2`` as a 0/1 matrix."""
        p = self.pilot_index
        return (p[:, None] == p[None, :]).astype(float)

    def max_sharing(self) -> int:
        return int(np.bincount(self.pilot_index, minlength=self.n_pilots).max())


@dataclass
class MCResult:
    mean_se: float
    stderr: float
    bound_gap: float
    relative_gap: float
    lower_bound: float
    n_realizations: int
    n_used: int
    n_degenerate: int
    n_resampled: int
    n_small_m: int
    workers: int
    records: list = field(default_factory=list)

    def summary(self) -> dict:
        """Aggregate figures; independent of the worker count."""
        return {k: v for k, v in self.__dict__.items() if k not in ("records", "workers")}


def substream(seed: int, index: int, attempt: int = 0, *purpose: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index, attempt) + purpose))


def torus_distance(a, b, side: float) -> np.ndarray:
    """Pairwise wraparound distances between rows of ``a`` (n, 2) and ``b`` (m, 2)."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    diff = np.abs(a[:, None, :] - b[None, :, :]) % side
    diff = np.minimum(diff, side - diff)
    return np.hypot(diff[..., 0], diff[..., 1])


def sample_ap_count(mean: float, rng: np.random.Generator) -> int:
    return int(rng.poisson(mean))


def sample_realization(params: SystemParams, seed: int, index: int = 0) -> NetworkRealization:
    """AP layout and user drop for one realization.

    Draws with ``M = 0`` are retried on the next substream.
    """
    if not 0 <= seed < 2**64:
        raise DomainError("seed must be a 64-bit unsigned value")
    side = math.sqrt(params.area)
    K = int(round(params.n_users))
    mean = params.ap_density * params.area
    for attempt in range(MAX_RESAMPLE):
        rng = substream(seed, index, attempt)
        m = sample_ap_count(mean, rng)
        if m == 0:
            log.debug("realization %d attempt %d drew no APs, resampling", index, attempt)
            continue
        aps = rng.uniform(0.0, side, size=(m, 2))
        users = np.zeros((K, 2))
        users[1:] = rng.uniform(0.0, side, size=(K - 1, 2))
        return NetworkRealization(aps, users, side, attempts=attempt + 1)
    raise SimulationError(f"no AP drawn after {MAX_RESAMPLE} attempts (mean {mean:g})")


def assign_pilots(n_users: int, n_pilots: int, policy: str = "round_robin", seed: int | None = None,
                  rng: np.random.Generator | None = None) -> PilotAssignment:
    """User ``u`` gets pilot ``u mod n_pilots``; ``random`` permutes the users first."""
    if n_pilots < 1 or n_users < 1:
        raise DomainError("need at least one user and one pilot")
    order = np.arange(n_users)
    if policy == "random":
        rng = rng if rng is not None else np.random.default_rng(seed)
        order = rng.permutation(n_users)
    elif policy != "round_robin":
        raise DomainError(f"unknown pilot policy {policy!r}")
    pilots = np.empty(n_users, dtype=int)
    pilots[order] = np.arange(n_users) % n_pilots
    return PilotAssignment(pilots, int(n_pilots))


def pilots_for(params: SystemParams, policy: str = "round_robin", rng=None) -> PilotAssignment:
    K = int(round(params.n_users))
    n_pilots = min(K, math.ceil(params.tau_tr - 1e-9))
    return assign_pilots(K, n_pilots, policy, rng=rng)


def pathloss(realization: NetworkRealization, alpha: float) -> np.ndarray:
    """Bounded path-loss ``min(1, r^-alpha)`` as an (M, K) matrix, ``r`` in m."""
    r = torus_distance(realization.ap_positions, realization.user_positions, realization.torus_side)
    with np.errstate(divide="ignore"):
        return np.minimum(1.0, r ** -alpha)


def estimate_variance(l: np.ndarray, pilots: PilotAssignment, params: SystemParams) -> np.ndarray:
    """``d_mk = sum_i |psi_i^H psi_k|^2 l_mi + 1/(tau_tr rho_tr)``, shape (M, K)."""
    return l @ pilots.same_pilot() + 1.0 / (params.tau_tr * params.rho_tr)


def _sinr_denominator(l, d, params, k, n):
    """Denominator with the self term cancelled analytically; strictly positive."""
    K = l.shape[1]
    inv_l2 = l ** -2.0  # (M, K)
    dk, lk = d[:, k], l[:, k]
    others = np.arange(K) != k
    noise = np.sum(dk[:, None] * inv_l2) / (K * params.rho_d)
    leak = n * np.sum(dk[:, None] * lk[:, None] * inv_l2[:, others])
    coherent = n * np.sum((lk @ (1.0 / l[:, others])) ** 2)
    return noise + leak + coherent + l.shape[0]


def sinr_denominator_literal(l, d, params, k, n):
    """Denominator term by term, including the self term that later cancels."""
    K = l.shape[1]
    M = l.shape[0]
    total = 0.0
    for i in range(K):
        total += np.sum(d[:, k] * l[:, i] ** -2.0 * (n * l[:, k] + 1.0 / (K * params.rho_d)))
    for i in range(K):
        if i != k:
            total += n * np.sum(l[:, k] / l[:, i]) ** 2
    total -= n * np.sum(d[:, k] / l[:, k])
    return total + M


def conditional_sinr(realization: NetworkRealization, pilots: PilotAssignment, params: SystemParams,
                     user_index: int = 0) -> float:
    """SINR of one user given the AP layout, averaged over fading."""
    M = realization.m_count
    if M < 1:
        raise DomainError("conditional SINR needs at least one AP")
    l = pathloss(realization, params.pathloss_exp)
    d = estimate_variance(l, pilots, params)
    den = _sinr_denominator(l, d, params, user_index, params.n_antennas)
    if not (den > 0 and math.isfinite(den)):
        raise DegenerateRealizationError(
            f"non-positive SINR denominator {den!r}",
            {"m_count": M, "min_pathloss": float(l.min()), "user_index": user_index},
        )
    return M * M * params.n_antennas / den


def _one(params, seed, index, policy, typical_only):
    real = sample_realization(params, seed, index)
    rng = substream(seed, index, real.attempts - 1, 1) if policy == "random" else None
    pilots = pilots_for(params, policy, rng)
    prefactor = 1.0 - model.pilot_overhead(params)
    users = [0] if typical_only else range(real.user_positions.shape[0])
    try:
        sinrs = [conditional_sinr(real, pilots, params, k) for k in users]
    except DegenerateRealizationError as exc:
        log.warning("realization %d excluded: %s %s", index, exc, exc.diagnostics)
        return {"index": index, "seed": seed, "m": real.m_count, "attempts": real.attempts,
                "sinr": None, "se": None}
    sinr = float(np.mean(sinrs))
    se = float(np.mean([prefactor * math.log2(1.0 + s) for s in sinrs]))
    return {"index": index, "seed": seed, "m": real.m_count, "attempts": real.attempts,
            "sinr": sinr, "se": se}


def mc_average_se(params: SystemParams, n_realizations: int, seed: int, workers: int = 1,
                  policy: str = "round_robin", typical_only: bool = True,
                  keep_records: bool = False) -> MCResult:
    """Average SE over PPP realizations and its gap to the closed-form lower bound."""
    if n_realizations < 1:
        raise DomainError("n_realizations must be >= 1")
    if workers < 1:
        raise DomainError("workers must be >= 1")
    run = lambda i: _one(params, seed, i, policy, typical_only)  # noqa: E731
    if workers == 1:
        records = [run(i) for i in range(n_realizations)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(run, range(n_realizations)))
    records.sort(key=lambda r: r["index"])
    ses = np.array([r["se"] for r in records if r["se"] is not None])
    n_deg = n_realizations - ses.size
    if ses.size == 0:
        raise SimulationError("all realizations were degenerate")
    if n_deg > MAX_DEGENERATE_FRACTION * n_realizations:
        raise SimulationError(f"{n_deg} of {n_realizations} realizations degenerate")
    mean = float(np.mean(ses))
    stderr = float(np.std(ses, ddof=1) / math.sqrt(ses.size)) if ses.size > 1 else 0.0
    lower = model.se_per_user(params)
    gap = mean - lower
    rel = gap / mean if mean != 0 else math.inf
    n_small = sum(1 for r in records if r["m"] <= SMALL_M)
    if n_small:
        log.info("%d realizations had at most %d APs", n_small, SMALL_M)
    return MCResult(
        mean_se=mean, stderr=stderr, bound_gap=gap, relative_gap=rel, lower_bound=lower,
        n_realizations=n_realizations, n_used=int(ses.size), n_degenerate=int(n_deg),
        n_resampled=sum(r["attempts"] - 1 for r in records), n_small_m=n_small, workers=workers,
        records=records if keep_records else [],
    )
