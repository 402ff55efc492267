"""Closed-form downlink SE, power consumption and energy efficiency.

Everything here is a pure function of a :class:`SystemParams` and a
:class:`PowerModel`. Internal units are SI: densities in AP/m^2, areas in
m^2, bandwidth in Hz, circuit powers in W and W/(bit/s). The normalized
powers ``rho_tr``/``rho_d`` are SNR-like (watts divided by the noise power)
and drive the SINR bound; the watt values drive the transmit-power part of
the area power consumption.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

BOLTZMANN = 1.381e-23  # J/K

PILOT_MODES = ("orthogonal_reuse", "welch_bound")


class DomainError(ValueError):
    """An input lies outside the domain where the model is defined."""


class InfeasibleFrameError(DomainError):
    """Pilot overhead consumes more than the whole coherence block."""


class ModelInconsistencyError(ValueError):
    """A derived power figure came out non-positive."""


def noise_power(bandwidth: float, noise_figure_db: float, temperature: float = 290.0) -> float:
    """Thermal noise power ``k_B * B * T * NF`` in watts."""
    if bandwidth <= 0 or temperature <= 0:
        raise DomainError("bandwidth and temperature must be positive")
    if not math.isfinite(noise_figure_db):
        raise DomainError("noise figure must be finite")
    return BOLTZMANN * bandwidth * temperature * 10.0 ** (noise_figure_db / 10.0)


@dataclass(frozen=True)
class SystemParams:
    """Radio and network scalars of one operating point.

    ``n_antennas`` and ``n_users`` are integers in normal use; the relaxed
    optimizers evaluate the model at real values as well.
    """

    n_antennas: float = 20
    n_users: float = 10
    pilot_reuse: float = 4.0
    ap_density: float = 1e-4  # AP/m^2
    area: float = 1e6  # m^2
    pathloss_exp: float = 4.0
    rho_tr: float = 1.0
    rho_d: float = 1.0
    rho_tr_watts: float = 0.1
    rho_d_watts: float = 0.2
    tau_c: int = 200
    dl_fraction: float = 1.0 / 3.0
    bandwidth: float = 20e6
    pilot_mode: str = "orthogonal_reuse"

    def __post_init__(self):
        positive = {
            "n_antennas": self.n_antennas,
            "n_users": self.n_users,
            "ap_density": self.ap_density,
            "area": self.area,
            "rho_tr": self.rho_tr,
            "rho_d": self.rho_d,
            "rho_tr_watts": self.rho_tr_watts,
            "rho_d_watts": self.rho_d_watts,
            "tau_c": self.tau_c,
            "bandwidth": self.bandwidth,
        }
        for name, value in positive.items():
            if not (value > 0 and math.isfinite(value)):
                raise DomainError(f"{name} must be positive and finite, got {value!r}")
        if not self.pilot_reuse >= 1:
            raise DomainError(f"pilot_reuse must be >= 1, got {self.pilot_reuse!r}")
        if not self.pathloss_exp > 2:
            raise DomainError(f"pathloss_exp must be > 2, got {self.pathloss_exp!r}")
        if not 0 < self.dl_fraction <= 1:
            raise DomainError(f"dl_fraction must lie in (0, 1], got {self.dl_fraction!r}")
        if self.pilot_mode not in PILOT_MODES:
            raise DomainError(f"unknown pilot_mode {self.pilot_mode!r}")
        tau_tr = self.tau_tr
        # relative slack: tau_tr = K / zeta is recomputed from floats
        if tau_tr < 1 - 1e-12 or tau_tr > self.tau_c * (1 + 1e-12):
            raise DomainError(f"pilot length K/zeta = {tau_tr:g} outside [1, tau_c={self.tau_c}]")

    @property
    def tau_tr(self) -> float:
        return self.n_users / self.pilot_reuse

    @property
    def user_density(self) -> float:
        return self.n_users / self.area

    def with_integer_pilots(self) -> "SystemParams":
        """Round the pilot length up and recompute the reuse factor."""
        tau_tr = math.ceil(self.tau_tr - 1e-9)
        return replace(self, pilot_reuse=self.n_users / tau_tr)


@dataclass(frozen=True)
class PowerModel:
    """Circuit and amplifier constants. Per-rate powers are in W/(bit/s)."""

    p_fp: float = 5.0
    p_lo: float = 0.1
    p_ap: float = 0.2
    p_ue: float = 0.1
    p_cod: float = 0.01e-9
    p_dec: float = 0.08e-9
    p_bt: float = 0.025e-9
    l_ap: float = 750e9  # flops/W
    amp_eff: float = 0.5

    def __post_init__(self):
        for name in ("p_fp", "p_lo", "p_ap", "p_ue", "p_cod", "p_dec", "p_bt"):
            value = getattr(self, name)
            if not (value >= 0 and math.isfinite(value)):
                raise DomainError(f"{name} must be non-negative, got {value!r}")
        if not self.l_ap > 0:
            raise DomainError("l_ap must be positive")
        if not 0 < self.amp_eff <= 1:
            raise DomainError("amp_eff must lie in (0, 1]")

    @property
    def c0(self) -> float:
        return self.p_fp + self.p_lo

    @property
    def backhaul(self) -> float:
        """Coding, decoding and backhaul-traffic power per bit/s."""
        return self.p_cod + self.p_dec + self.p_bt


@dataclass(frozen=True)
class APCCoefficients:
    """Coefficients of the per-AP power polynomial in (K, N)."""

    c0: float
    c1: float
    c2: float
    d0: float
    d1: float
    d2: float
    backhaul: float

    def per_ap(self, n_users: float, n_antennas: float) -> float:
        K, N = n_users, n_antennas
        return (self.c0 + self.c1 * K + self.c2 * K**2 + self.d0 * N
                + self.d1 * N * K - self.d2 * N * K**2)


@dataclass(frozen=True)
class EEBreakdown:
    check_gamma: float
    gamma: float
    se_per_user: float  # bit/s/Hz
    ase: float  # bit/s/Hz/m^2
    apc: float  # W/m^2
    ee: float  # bit/J
    gamma_terms: tuple = ()
    apc_terms: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {
            "check_gamma": self.check_gamma,
            "gamma": self.gamma,
            "se_per_user": self.se_per_user,
            "ase": self.ase,
            "apc": self.apc,
            "ee": self.ee,
        }
        for name, value in zip(("gamma_pilot_term", "gamma_estimation_term", "gamma_density_term"),
                               self.gamma_terms):
            out[name] = value
        for name, value in self.apc_terms.items():
            out[f"apc_{name}"] = value
        return out


def pilot_corr_affine(n_users: float, mode: str) -> tuple[float, float]:
    """Split the pilot correlation sum as ``A = a0 + a1 * zeta`` for ``K`` users.

    Both supported modes are affine in the reuse factor, which is what makes
    the SINR constraint solvable for ``zeta`` in closed form.
    """
    K = n_users
    if mode == "orthogonal_reuse":
        # self term plus zeta - 1 co-pilot users
        return 0.0, 1.0
    if mode == "welch_bound":
        if K <= 2:
            raise DomainError("welch_bound pilot correlation needs more than 2 users")
        # 1 + (K - 1 - tau)/(tau (K - 2)) with tau = K / zeta
        return (K - 3) / (K - 2), (K - 1) / (K * (K - 2))
    raise DomainError(f"unknown pilot mode {mode!r}")


def pilot_corr_sum(params: SystemParams, mode: str | None = None) -> float:
    """Sum of squared pilot correlations seen by the typical user."""
    a0, a1 = pilot_corr_affine(params.n_users, mode or params.pilot_mode)
    return a0 + a1 * params.pilot_reuse


def check_gamma_terms(params: SystemParams) -> tuple[float, float, float]:
    """The three additive parts of the inverse-SINR bound.

    Returns the pilot-contamination/interference term, the channel
    estimation term and the AP-density term, in that order.
    """
    p = params
    a, N, K = p.pathloss_exp, p.n_antennas, p.n_users
    A = pilot_corr_sum(p)
    pilot = A * ((a - 2) / (a * math.pi * N * p.rho_d) + K - 1)
    estimation = p.pilot_reuse / (a * math.pi * K * p.rho_tr) * ((K - 1) * (a - 2) + (a - 1) / (N * p.rho_d))
    density = p.ap_density * (K - 1)
    return pilot, estimation, density


def check_gamma(params: SystemParams) -> float:
    """Inverse of the SINR lower bound for the typical user."""
    return sum(check_gamma_terms(params))


def pilot_overhead(params: SystemParams) -> float:
    """Fraction ``K / (zeta * tau_c)`` of the block spent on pilots."""
    return params.n_users / (params.pilot_reuse * params.tau_c)


def se_per_user(params: SystemParams, gamma: float | None = None) -> float:
    """Average SE lower bound per user in bit/s/Hz.

    ``gamma`` overrides the SINR; by default it is ``1 / check_gamma``.
    """
    prefactor = 1.0 - pilot_overhead(params)
    if prefactor < -1e-12:
        raise InfeasibleFrameError(f"pilot overhead exceeds the coherence block (prefactor {prefactor:g})")
    prefactor = max(prefactor, 0.0)
    if gamma is None:
        gamma = 1.0 / check_gamma(params)
    return prefactor * math.log2(1.0 + gamma)


def ase(params: SystemParams, se: float | None = None) -> float:
    """Area spectral efficiency: user density times per-user SE."""
    if se is None:
        se = se_per_user(params)
    return params.user_density * se


def apc_coefficients(params: SystemParams, power: PowerModel, strict: bool = False) -> APCCoefficients:
    """Polynomial coefficients of the per-AP consumption.

    With ``strict=True`` the coefficients are taken verbatim from the
    published compaction, which is dimensionally inconsistent in C1, C2 and
    D1; the default form is the exact expansion of the component model.
    """
    p, pm = params, power
    Bw, L, tc, xi, z = p.bandwidth, pm.l_ap, p.tau_c, p.dl_fraction, p.pilot_reuse
    if strict:
        c1 = Bw / (7 * L * tc) - xi * p.rho_d_watts / (pm.amp_eff * z * tc) + pm.p_ue
        c2 = 1.0 / (pm.amp_eff * z * p.rho_tr_watts * tc)
        d1 = 3 * Bw / L + 3 * Bw / (L * tc)
    else:
        c1 = Bw / (7 * L * tc) + xi * p.rho_d_watts / pm.amp_eff + pm.p_ue
        c2 = (p.rho_tr_watts - xi * p.rho_d_watts) / (pm.amp_eff * z * tc)
        d1 = 3 * Bw * xi / L + 3 * Bw / (L * tc)
    d2 = 3 * Bw * (xi - 1) / (L * z * tc)
    return APCCoefficients(c0=pm.c0, c1=c1, c2=c2, d0=pm.p_ap, d1=d1, d2=d2, backhaul=pm.backhaul)


def apc_polynomial(params: SystemParams, power: PowerModel, ase_value: float | None = None,
                   strict: bool = False) -> float:
    """Area power consumption in W/m^2 from the (K, N) polynomial."""
    if ase_value is None:
        ase_value = ase(params)
    coef = apc_coefficients(params, power, strict=strict)
    per_ap = coef.per_ap(params.n_users, params.n_antennas)
    value = params.ap_density * per_ap + coef.backhaul * params.bandwidth * ase_value
    if not value > 0:
        raise ModelInconsistencyError(f"non-positive area power consumption {value:g} W/m^2")
    return value


def apc_components(params: SystemParams, power: PowerModel, ase_value: float | None = None) -> dict:
    """Per-AP power components in W, plus the area-level backhaul term in W/m^2."""
    p, pm = params, power
    if ase_value is None:
        ase_value = ase(params)
    K, N, tc, xi, Bw = p.n_users, p.n_antennas, p.tau_c, p.dl_fraction, p.bandwidth
    tau_tr = p.tau_tr
    tau_d = xi * (tc - tau_tr)
    compute = 3 * Bw / (pm.l_ap * tc)
    return {
        "transmit": K * (tau_tr * p.rho_tr_watts + tau_d * p.rho_d_watts) / tc,
        "fixed": pm.p_fp,
        "transceiver": N * pm.p_ap + pm.p_lo + K * pm.p_ue,
        "estimation": compute * K * N * (tau_tr + 1),
        "precoding": compute * K * N * tau_d + Bw * K / (7 * tc * pm.l_ap),
        "backhaul": Bw * ase_value * pm.backhaul,
    }


def apc_first_principles(params: SystemParams, power: PowerModel, ase_value: float | None = None) -> float:
    """Area power consumption in W/m^2 summed from its physical components."""
    c = apc_components(params, power, ase_value)
    per_ap = c["transmit"] / power.amp_eff + c["fixed"] + c["transceiver"] + c["estimation"] + c["precoding"]
    value = params.ap_density * per_ap + c["backhaul"]
    if not value > 0:
        raise ModelInconsistencyError(f"non-positive area power consumption {value:g} W/m^2")
    return value


def energy_efficiency(params: SystemParams, power: PowerModel, apc_mode: str = "polynomial",
                      strict: bool = False, gamma: float | None = None) -> EEBreakdown:
    """Energy efficiency ``B_w * ASE / APC`` in bit/J with its intermediate terms.

    ``gamma`` fixes the SINR used for the rate (e.g. a target SINR); the
    bound's own value is still reported in ``check_gamma``.
    """
    terms = check_gamma_terms(params)
    cg = sum(terms)
    g = 1.0 / cg if gamma is None else gamma
    se = se_per_user(params, g)
    area_se = ase(params, se)
    if apc_mode == "polynomial":
        apc = apc_polynomial(params, power, area_se, strict=strict)
    elif apc_mode == "first_principles":
        apc = apc_first_principles(params, power, area_se)
    else:
        raise DomainError(f"unknown apc_mode {apc_mode!r}")
    components = apc_components(params, power, area_se)
    ee = params.bandwidth * area_se / apc
    return EEBreakdown(check_gamma=cg, gamma=g, se_per_user=se, ase=area_se, apc=apc, ee=ee,
                       gamma_terms=terms, apc_terms=components)


def reference_params(**overrides) -> SystemParams:
    """Operating point of the reference parameter table, normalized by thermal noise.

    Keyword overrides replace fields after normalization, so pass
    ``rho_tr``/``rho_d`` explicitly if the watt values are changed.
    """
    npow = noise_power(20e6, 9.0, 290.0)
    base = SystemParams(
        n_antennas=20, n_users=10, pilot_reuse=4.0, ap_density=100e-6, area=1e6,
        pathloss_exp=4.0, rho_tr=0.1 / npow, rho_d=0.2 / npow, rho_tr_watts=0.1,
        rho_d_watts=0.2, tau_c=200, dl_fraction=1.0 / 3.0, bandwidth=20e6,
    )
    return replace(base, **overrides) if overrides else base
