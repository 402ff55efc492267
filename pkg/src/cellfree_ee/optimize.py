"""Constrained energy-efficiency maximization.

The problem fixes the SINR bound to a target ``gamma0``. Because the
inverse-SINR bound is affine in the pilot reuse factor, the constraint pins
``zeta`` to a closed form ``zeta*(K, N, lambda)``. Substituting it leaves a
one-variable objective in each of the AP density, the antenna count and the
user count, whose stationarity conditions are low-degree polynomials:

* AP density: quadratic with no root in the feasible set, so the optimum is
  the smallest feasible density;
* antennas: quadratic;
* users: quartic, stored as a length-6 coefficient vector (``p0..p5``).

Every closed form is checked against a brute-force oracle evaluated through
:mod:`cellfree_ee.model`; when the two disagree by more than
``ORACLE_SLACK`` in objective the oracle value becomes authoritative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import model
from ._search import golden_section_max, real_roots
from .model import DomainError, PowerModel, SystemParams

ORACLE_SLACK = 0.05
AGREEMENT_TOL = 0.01
# relative slack on zeta bounds and on the SINR target
BOUND_RTOL = 1e-9

VARIABLES = ("pilot_reuse", "ap_density", "n_antennas", "n_users")
ALIASES = {
    "zeta": "pilot_reuse", "pilot_reuse": "pilot_reuse",
    "lambda": "ap_density", "lambda_ap": "ap_density", "ap_density": "ap_density",
    "n": "n_antennas", "n_antennas": "n_antennas",
    "k": "n_users", "n_users": "n_users",
}


class InfeasibleError(ValueError):
    """No admissible operating point meets the SINR target."""


def canonical_variable(name: str) -> str:
    try:
        return ALIASES[name.strip().lower()]
    except KeyError:
        raise DomainError(f"unknown optimization variable {name!r}") from None


@dataclass(frozen=True)
class Constraint:
    gamma0: float = 3.0

    def __post_init__(self):
        if not (self.gamma0 > 0 and math.isfinite(self.gamma0)):
            raise DomainError("gamma0 must be positive")

    def admits(self, ap_density: float) -> bool:
        return self.gamma0 < feasibility_bound(ap_density)


@dataclass(frozen=True)
class SearchBounds:
    """Search domains; densities in AP/m^2."""

    ap_density: tuple = (1e-6, 200e-6)
    n_antennas: tuple = (1, 256)
    n_users: tuple = (3, 64)
    grid_points: int = 200


@dataclass
class OptimumReport:
    variable: str
    value: object
    closed_form_value: object
    oracle_value: object
    feasible_interval: tuple
    objective: dict
    closed_form_applicable: bool
    agreement: bool
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "variable": self.variable,
            "value": self.value,
            "closed_form_value": self.closed_form_value,
            "oracle_value": self.oracle_value,
            "feasible_interval": list(self.feasible_interval),
            "objective": dict(self.objective),
            "closed_form_applicable": self.closed_form_applicable,
            "agreement": self.agreement,
            "diagnostics": self.diagnostics,
        }


# --------------------------------------------------------------------------
# feasibility and the SINR constraint


def feasibility_bound(ap_density: float) -> float:
    """Upper limit on the SINR target for a given AP density (AP/m^2)."""
    if not ap_density > 0:
        raise DomainError("ap_density must be positive")
    return 1.0 / ap_density


def sinr_limit_inf_N(params: SystemParams) -> float:
    """Large-antenna SINR limit in its published closed form.

    The density term carries ``K * lambda`` here, so it is not exactly the
    limit of ``1 / check_gamma`` (see :func:`sinr_ceiling`); at ``K = 1`` it
    reduces to ``1 / lambda``.
    """
    p = params
    a, K, lam = p.pathloss_exp, p.n_users, p.ap_density
    A = model.pilot_corr_sum(p)
    den = a * math.pi * K * (A * (K - 1) + K * lam) * p.rho_tr + (a - 2) * (K - 1) * p.pilot_reuse
    if den == 0:
        raise DomainError("zero denominator in the large-N SINR limit")
    return a * math.pi * p.rho_tr * K / den


def sinr_ceiling(params: SystemParams) -> float:
    """Exact ``N -> inf`` limit of ``1 / check_gamma``; ``inf`` for a single user."""
    p = params
    a, K = p.pathloss_exp, p.n_users
    A = model.pilot_corr_sum(p)
    cg = A * (K - 1) + p.pilot_reuse * (K - 1) * (a - 2) / (a * math.pi * K * p.rho_tr) + p.ap_density * (K - 1)
    return math.inf if cg == 0 else 1.0 / cg


@dataclass(frozen=True)
class _Split:
    """``check_gamma = u + zeta * v`` for the current (K, N, lambda)."""

    u: float
    v: float
    u_n: tuple  # (u0, u1): u = u0 + u1 / N
    v_n: tuple  # (v0, v1): v = v0 + v1 / N


def _split(params: SystemParams) -> _Split:
    p = params
    a, N, K = p.pathloss_exp, p.n_antennas, p.n_users
    a0, a1 = model.pilot_corr_affine(K, p.pilot_mode)
    s_d = (a - 2) / (a * math.pi * p.rho_d)
    e0 = (K - 1) * (a - 2) / (a * math.pi * K * p.rho_tr)
    e1 = (a - 1) / (a * math.pi * K * p.rho_tr * p.rho_d)
    u0 = a0 * (K - 1) + p.ap_density * (K - 1)
    u1 = a0 * s_d
    v0 = a1 * (K - 1) + e0
    v1 = a1 * s_d + e1
    return _Split(u=u0 + u1 / N, v=v0 + v1 / N, u_n=(u0, u1), v_n=(v0, v1))


def zeta_bounds(params: SystemParams) -> tuple:
    """Admissible reuse factors: pilot length between 1 and ``tau_c`` samples."""
    K = params.n_users
    return max(1.0, K / params.tau_c), float(K)


def with_fields(params: SystemParams, **fields) -> SystemParams:
    """``replace`` that moves a stale reuse factor back into its admissible range."""
    if "pilot_reuse" not in fields:
        K = fields.get("n_users", params.n_users)
        tc = fields.get("tau_c", params.tau_c)
        fields["pilot_reuse"] = min(max(params.pilot_reuse, 1.0, K / tc), max(float(K), 1.0))
    return replace(params, **fields)


def zeta_star(params: SystemParams, gamma0: float) -> tuple:
    """Reuse factor meeting ``1/check_gamma = gamma0``; returns ``(zeta, Q1, Q2)``.

    ``zeta = (a pi K N rho_tr rho_d - gamma0 Q1) / (gamma0 Q2)``. The value
    is not range-checked; see :func:`clip_zeta`.
    """
    p = params
    s = _split(p)
    scale = p.pathloss_exp * math.pi * p.n_users * p.n_antennas * p.rho_tr * p.rho_d
    q1, q2 = scale * s.u, scale * s.v
    return (scale - gamma0 * q1) / (gamma0 * q2), q1, q2


def clip_zeta(params: SystemParams, zeta: float):
    """Clip a required reuse factor into the admissible range.

    Above the range the largest admissible value over-satisfies the SINR
    target; below it no admissible value reaches the target and ``None`` is
    returned.
    """
    lo, hi = zeta_bounds(params)
    if not math.isfinite(zeta) or zeta < lo * (1 - BOUND_RTOL):
        return None
    return min(max(zeta, lo), hi)


def constrained_ee(params: SystemParams, power: PowerModel, gamma0: float, strict: bool = False):
    """EE with the reuse factor set by the SINR constraint.

    The rate is evaluated at ``gamma0``. Raises :class:`InfeasibleError` when
    even the smallest admissible reuse factor misses the target.
    """
    z, _, _ = zeta_star(params, gamma0)
    zc = clip_zeta(params, z)
    if zc is None:
        lo, hi = zeta_bounds(params)
        raise InfeasibleError(f"required reuse factor {z:.6g} outside [{lo:g}, {hi:g}]")
    return model.energy_efficiency(replace(params, pilot_reuse=zc), power, strict=strict, gamma=gamma0)


def zeta_objective(params: SystemParams, power: PowerModel, gamma0: float, zeta: float,
                   strict: bool = False) -> float:
    """EE at a given reuse factor, ``-inf`` where the SINR target is missed."""
    try:
        p = replace(params, pilot_reuse=zeta)
    except DomainError:
        return -math.inf
    if 1.0 / model.check_gamma(p) < gamma0 * (1 - BOUND_RTOL):
        return -math.inf
    return model.energy_efficiency(p, power, strict=strict, gamma=gamma0).ee


def objective(params: SystemParams, power: PowerModel, gamma0: float, variable: str, value,
              strict: bool = False) -> float:
    """Constrained EE as a function of one variable; ``-inf`` when infeasible."""
    if variable == "pilot_reuse":
        return zeta_objective(params, power, gamma0, value, strict)
    try:
        p = with_fields(params, **{variable: value})
        return constrained_ee(p, power, gamma0, strict).ee
    except (InfeasibleError, DomainError):
        return -math.inf


def _objective_multi(params, power, gamma0, assignment: dict, strict=False) -> float:
    if "pilot_reuse" in assignment:
        rest = {k: v for k, v in assignment.items() if k != "pilot_reuse"}
        try:
            p = with_fields(params, **rest)
        except DomainError:
            return -math.inf
        return zeta_objective(p, power, gamma0, assignment["pilot_reuse"], strict)
    try:
        return constrained_ee(with_fields(params, **assignment), power, gamma0, strict).ee
    except (InfeasibleError, DomainError):
        return -math.inf


# --------------------------------------------------------------------------
# helpers shared by the closed forms


def _power_split(params: SystemParams, power: PowerModel):
    """Per-AP power as ``P0(K, N) + (K^2 / zeta) * (w0 + w1 N)``.

    Returns ``(c0, c1, d0, d1, w0, w1)`` with ``P0 = c0 + c1 K + d0 N + d1 N K``.
    """
    coef = model.apc_coefficients(params, power)
    z = params.pilot_reuse
    return coef.c0, coef.c1, coef.d0, coef.d1, coef.c2 * z, -coef.d2 * z


def _linear_ge(a: float, b: float):
    """Solution set of ``a * x >= b`` as an interval."""
    if a > 0:
        return b / a, math.inf
    if a < 0:
        return -math.inf, b / a
    return (-math.inf, math.inf) if b <= 0 else None


def _intersect(*intervals):
    lo, hi = -math.inf, math.inf
    for iv in intervals:
        if iv is None:
            return None
        lo, hi = max(lo, iv[0]), min(hi, iv[1])
    return (lo, hi) if lo <= hi else None


def _quadratic_roots(c2, c1, c0):
    if c2 == 0:
        return [] if c1 == 0 else [-c0 / c1]
    disc = c1 * c1 - 4 * c2 * c0
    if disc < 0:
        return []
    sq = math.sqrt(disc)
    q = -0.5 * (c1 + math.copysign(sq, c1))
    roots = [q / c2]
    if q != 0:
        roots.append(c0 / q)
    return sorted(roots)


def _best_candidate(candidates, f):
    best_x, best_f = None, -math.inf
    for x in sorted(set(candidates)):
        fx = f(x)
        if fx > best_f:
            best_x, best_f = x, fx
    return best_x, best_f


def _best_integer(x, lo, hi, f):
    """Better of the two integers around ``x`` within ``[lo, hi]``; ties go to the smaller."""
    ilo, ihi = math.ceil(lo - 1e-9), math.floor(hi + 1e-9)
    if ilo > ihi:
        return None, -math.inf
    cands = {min(max(math.floor(x), ilo), ihi), min(max(math.ceil(x), ilo), ihi)}
    return _best_candidate(cands, f)


def _arbitrate(variable, cf_value, cf_ee, or_value, or_ee, interval, diagnostics) -> OptimumReport:
    applicable = (cf_value is not None and cf_ee is not None and math.isfinite(cf_ee)
                  and (not math.isfinite(or_ee) or cf_ee >= or_ee * (1 - ORACLE_SLACK)))
    agreement = bool(applicable and math.isfinite(or_ee) and abs(cf_ee - or_ee) <= AGREEMENT_TOL * abs(or_ee))
    if not applicable and not math.isfinite(or_ee):
        raise InfeasibleError(f"no feasible {variable} meets the SINR target")
    value = cf_value if applicable else or_value
    value = int(value) if isinstance(value, (int, np.integer)) else float(value)
    return OptimumReport(
        variable=variable, value=value, closed_form_value=cf_value, oracle_value=or_value,
        feasible_interval=tuple(float(x) for x in interval) if interval else (),
        objective={"closed_form": None if cf_ee is None else float(cf_ee), "oracle": float(or_ee)},
        closed_form_applicable=bool(applicable), agreement=agreement, diagnostics=diagnostics,
    )


def _grid_then_golden(f, lo, hi, n):
    xs = np.linspace(lo, hi, n)
    vals = [f(x) for x in xs]
    i = int(np.argmax(vals))
    if not math.isfinite(vals[i]):
        return None, -math.inf
    a, b = xs[max(i - 1, 0)], xs[min(i + 1, n - 1)]
    x, fx = golden_section_max(f, a, b, tol=1e-12)
    return (x, fx) if fx >= vals[i] else (float(xs[i]), vals[i])


# --------------------------------------------------------------------------
# single-variable optimizers


def optimal_zeta(params: SystemParams, power: PowerModel, gamma0: float,
                 bounds: SearchBounds = SearchBounds(), strict: bool = False) -> OptimumReport:
    """Reuse factor that meets the SINR target with equality."""
    z, q1, q2 = zeta_star(params, gamma0)
    lo, hi = zeta_bounds(params)
    zc = clip_zeta(params, z)
    f = lambda x: zeta_objective(params, power, gamma0, x, strict)  # noqa: E731
    cf_ee = f(zc) if zc is not None else None
    xs = np.linspace(lo, hi, bounds.grid_points)
    vals = [f(x) for x in xs]
    i = int(np.argmax(vals))
    or_value, or_ee = float(xs[i]), vals[i]
    diag = {"Q1": q1, "Q2": q2, "zeta_unclipped": z, "clipped": zc is not None and zc != z}
    if zc is not None:
        diag["inverse_check"] = 1.0 / model.check_gamma(replace(params, pilot_reuse=zc))
    return _arbitrate("pilot_reuse", zc, cf_ee, or_value, or_ee, (lo, hi), diag)


def lambda_interval(params: SystemParams, gamma0: float, bounds: SearchBounds = SearchBounds()):
    """Densities that can meet the SINR target, within the search bounds.

    Returns ``(interval, kink, h0, v)`` where ``kink`` is the density below
    which the reuse factor is clipped at ``K``.
    """
    s = _split(replace(params, ap_density=bounds.ap_density[0]))
    K = params.n_users
    c = K - 1
    a0, _ = model.pilot_corr_affine(K, params.pilot_mode)
    a = params.pathloss_exp
    c_a = (a - 2) / (a * math.pi * params.n_antennas * params.rho_d) + K - 1
    h0 = 1.0 / gamma0 - a0 * c_a
    zlo, zhi = zeta_bounds(params)
    # zeta*(lambda) = (h0 - c lambda) / v
    iv = _intersect(_linear_ge(-c, zlo * s.v - h0), tuple(bounds.ap_density))
    kink = (h0 - zhi * s.v) / c if c > 0 else None
    return iv, kink, h0, s.v


def optimal_ap_density(params: SystemParams, power: PowerModel, gamma0: float,
                       bounds: SearchBounds = SearchBounds(), strict: bool = False) -> OptimumReport:
    """AP density maximizing the constrained EE for fixed K and N."""
    K = params.n_users
    c = K - 1
    iv, kink, h0, v = lambda_interval(params, gamma0, bounds)
    f = lambda x: objective(params, power, gamma0, "ap_density", x, strict)  # noqa: E731
    c0, c1, d0, d1, w0, w1 = _power_split(params, power)
    N = params.n_antennas
    P0 = c0 + c1 * K + d0 * N + d1 * N * K
    w = w0 + w1 * N
    p = K * v / params.tau_c
    q = K * params.tau_c * w * p
    # d/dlambda of lambda (P0 t + q)/(t - p), t = h0 - c lambda, vanishes where
    # P0 ((t - p)^2 + p (h0 - p)) + q (h0 - p) = 0
    stationary = []
    if c > 0 and P0 > 0:
        disc = -(h0 - p) * (p + q / P0)
        if disc >= 0:
            stationary = [(h0 - t) / c for t in (p - math.sqrt(disc), p + math.sqrt(disc))]
    diag = {"stationary_points": stationary, "h0": h0, "overhead_coef": p, "P0": P0}
    if iv is None:
        cf_value, cf_ee = None, None
    else:
        cands = [x for x in stationary + [kink] if x is not None and iv[0] <= x <= iv[1]] + [iv[0], iv[1]]
        cf_value, cf_ee = _best_candidate(cands, f)
        diag["lambda_lower"], diag["lambda_upper"] = iv
    or_value, or_ee = _grid_then_golden(f, bounds.ap_density[0], bounds.ap_density[1], bounds.grid_points)
    return _arbitrate("ap_density", cf_value, cf_ee, or_value, or_ee, iv or (), diag)


def n_antennas_interval(params: SystemParams, gamma0: float, bounds: SearchBounds = SearchBounds()):
    s = _split(params)
    (u0, u1), (v0, v1) = s.u_n, s.v_n
    h0 = 1.0 / gamma0 - u0
    zlo, zhi = zeta_bounds(params)
    # zeta*(N) = (h0 N - u1) / (v0 N + v1), clipped at K above
    iv = _intersect(_linear_ge(h0 - zlo * v0, u1 + zlo * v1), tuple(bounds.n_antennas))
    slope = h0 - zhi * v0
    kink = (u1 + zhi * v1) / slope if slope != 0 else None
    return iv, kink, h0, (u1, v0, v1)


def optimal_n_antennas(params: SystemParams, power: PowerModel, gamma0: float,
                       bounds: SearchBounds = SearchBounds(), strict: bool = False) -> OptimumReport:
    """Antenna count per AP maximizing the constrained EE for fixed K and density."""
    K, tc = params.n_users, params.tau_c
    iv, kink, h0, (u1, v0, v1) = n_antennas_interval(params, gamma0, bounds)
    f = lambda x: objective(params, power, gamma0, "n_antennas", x, strict)  # noqa: E731
    c0, c1, d0, d1, w0, w1 = _power_split(params, power)
    P = np.polynomial.Polynomial
    y = P([-tc * u1, tc * h0])  # tau_c * (h0 N - u1)
    x = P([K * v1, K * v0])  # K * (v0 N + v1)
    num = P([c0 + c1 * K, d0 + d1 * K]) * y + K * tc * x * P([w0, w1])
    den = y - x
    stat = num.deriv() * den - num * den.deriv()
    sc = np.pad(stat.coef, (0, 3))[:3]
    stationary = _quadratic_roots(sc[2], sc[1], sc[0])
    diag = {"stationarity_coefficients": [float(v) for v in sc], "stationary_points": stationary}
    cf_value = cf_ee = None
    if iv is not None:
        cands = [r for r in stationary + [kink] if r is not None and iv[0] <= r <= iv[1]] + [iv[0], iv[1]]
        relaxed, _ = _best_candidate(cands, f)
        diag["relaxed_optimum"] = relaxed
        diag["n_lower"], diag["n_upper"] = iv
        if relaxed is not None:
            cf_value, cf_ee = _best_integer(relaxed, iv[0], iv[1], f)
    lo, hi = bounds.n_antennas
    or_value, or_ee = _integer_sweep(f, lo, hi)
    return _arbitrate("n_antennas", cf_value, cf_ee, or_value, or_ee, iv or (), diag)


def _integer_sweep(f, lo, hi):
    best_x, best_f = None, -math.inf
    for n in range(int(math.ceil(lo)), int(math.floor(hi)) + 1):
        fn = f(n)
        if fn > best_f:
            best_x, best_f = n, fn
    return best_x, best_f


def users_polynomials(params: SystemParams, power: PowerModel, gamma0: float, mode: str):
    """Rational pieces of the constrained objective in the user count.

    Returns ``(n_omega, d_omega, num, den)``: the pilot overhead is
    ``n_omega / d_omega`` and ``num / den`` is proportional to ``1/EE`` minus
    its backhaul floor.
    """
    p = params
    a, N, tc, lam = p.pathloss_exp, p.n_antennas, p.tau_c, p.ap_density
    P = np.polynomial.Polynomial
    c_a = P([(a - 2) / (a * math.pi * N * p.rho_d) - 1, 1])
    E = P([(-(a - 2) + (a - 1) / (N * p.rho_d)) / (a * math.pi * p.rho_tr), (a - 2) / (a * math.pi * p.rho_tr)])
    Kp = P([0, 1])
    if mode == "orthogonal_reuse":
        n_om = Kp * c_a + E
        d_om = tc * P([1 / gamma0 + lam, -lam])
    elif mode == "welch_bound":
        n_om = (Kp - 1) * c_a + E * (Kp - 2)
        d_om = tc * ((Kp - 2) / gamma0 - (Kp - 3) * c_a - lam * (Kp - 1) * (Kp - 2))
    else:
        raise DomainError(f"unknown pilot mode {mode!r}")
    c0, c1, d0, d1, w0, w1 = _power_split(p, power)
    P0 = P([c0 + d0 * N, c1 + d1 * N])
    w = w0 + w1 * N
    num = P0 * d_om + tc * w * Kp * n_om
    den = Kp * (d_om - n_om)
    return n_om, d_om, num, den


def users_stationarity(params: SystemParams, power: PowerModel, gamma0: float, mode: str):
    """Coefficients ``p0..p5`` of the stationarity polynomial in K."""
    _, _, num, den = users_polynomials(params, power, gamma0, mode)
    stat = num.deriv() * den - num * den.deriv()
    deg = num.degree() + den.degree() - 1
    if num.degree() == den.degree():
        # leading terms cancel exactly
        deg -= 1
    coef = np.pad(stat.coef, (0, 8))[:deg + 1]
    return np.pad(coef, (0, max(0, 6 - coef.size)))[:6] if coef.size <= 6 else coef


def users_feasible(params, gamma0, mode, K: float) -> bool:
    n_om, d_om, _, _ = users_polynomials(params, PowerModel(), gamma0, mode)
    return _users_feasible_poly(n_om, d_om, params.tau_c, K)


def _users_feasible_poly(n_om, d_om, tc, K, rtol=1e-9):
    d, n = d_om(K), n_om(K)
    if not d > 0:
        return False
    # required pilot length tau_c * n / d may not exceed min(K, tau_c);
    # below one sample the reuse factor is clipped
    return tc * n / d <= min(K, tc) * (1 + rtol)


def optimal_n_users(params: SystemParams, power: PowerModel, gamma0: float,
                    bounds: SearchBounds = SearchBounds(), strict: bool = False,
                    pilot_mode: str = "welch_bound") -> OptimumReport:
    """User count maximizing the constrained EE for fixed N and density."""
    p = replace(params, pilot_mode=pilot_mode)
    tc = p.tau_c
    lo, hi = bounds.n_users
    if pilot_mode == "welch_bound":
        lo = max(lo, 3)
    f = lambda x: objective(p, power, gamma0, "n_users", x, strict)  # noqa: E731
    n_om, d_om, num, den = users_polynomials(p, power, gamma0, pilot_mode)
    coeffs = users_stationarity(p, power, gamma0, pilot_mode)
    scan_hi = 10.0 * hi
    roots = real_roots(coeffs, 0.0, scan_hi)
    # edges of the feasible set: zeros of the constraint polynomials
    edges = []
    Kp = np.polynomial.Polynomial([0, 1])
    for g in (d_om, tc * n_om - d_om, Kp * d_om - tc * n_om, d_om - n_om):
        edges += real_roots(g.coef, lo, hi)
    feasible = lambda x: lo <= x <= hi and _users_feasible_poly(n_om, d_om, tc, x)  # noqa: E731
    cands = [x for x in roots + edges + [float(lo), float(hi)] if feasible(x)]
    diag = {"stationarity_coefficients": [float(c) for c in coeffs], "real_roots": roots,
            "feasible_edges": edges, "pilot_mode": pilot_mode}
    cf_value = cf_ee = None
    iv = ()
    if cands:
        relaxed, _ = _best_candidate(cands, f)
        diag["relaxed_optimum"] = relaxed
        iv = (min(cands), max(cands))
        if relaxed is not None:
            cf_value, cf_ee = _best_integer(relaxed, lo, hi, f)
    or_value, or_ee = _integer_sweep(f, lo, hi)
    return _arbitrate("n_users", cf_value, cf_ee, or_value, or_ee, iv, diag)


# --------------------------------------------------------------------------
# oracle and coordinate ascent


def brute_force_optimum(params: SystemParams, power: PowerModel, gamma0: float, free_vars, grids: dict,
                        strict: bool = False) -> OptimumReport:
    """Exhaustive maximization over the product of the given grids.

    Grid values are scanned in ascending order and only strict improvements
    are kept, so ties resolve toward smaller values.
    """
    names = [canonical_variable(v) for v in free_vars]
    axes = [sorted(grids[v] if v in grids else grids[n]) for v, n in zip(free_vars, names)]
    best, best_ee, n_feasible = None, -math.inf, 0
    for combo in _product(axes):
        assignment = dict(zip(names, combo))
        ee = _objective_multi(params, power, gamma0, assignment, strict)
        if math.isfinite(ee):
            n_feasible += 1
            if ee > best_ee:
                best, best_ee = combo, ee
    if best is None:
        raise InfeasibleError("no grid point meets the SINR target")
    value = best[0] if len(best) == 1 else tuple(best)
    return OptimumReport(
        variable=",".join(names), value=value, closed_form_value=None, oracle_value=value,
        feasible_interval=(), objective={"oracle": best_ee}, closed_form_applicable=False, agreement=False,
        diagnostics={"grid_sizes": [len(a) for a in axes], "feasible_points": n_feasible},
    )


def _product(axes):
    if not axes:
        yield ()
        return
    for head in axes[0]:
        for tail in _product(axes[1:]):
            yield (head,) + tail


OPTIMIZERS = {
    "pilot_reuse": optimal_zeta,
    "ap_density": optimal_ap_density,
    "n_antennas": optimal_n_antennas,
    "n_users": optimal_n_users,
}


def optimize_variable(params, power, gamma0, variable, bounds=SearchBounds(), strict=False) -> OptimumReport:
    name = canonical_variable(variable)
    if name == "n_users":
        return optimal_n_users(params, power, gamma0, bounds, strict, pilot_mode=params.pilot_mode)
    return OPTIMIZERS[name](params, power, gamma0, bounds, strict)


def joint_optimize(params: SystemParams, power: PowerModel, gamma0: float,
                   variables=("pilot_reuse", "ap_density", "n_antennas", "n_users"),
                   bounds: SearchBounds = SearchBounds(), strict: bool = False, max_rounds: int = 20) -> OptimumReport:
    """Cyclic single-variable maximization until no variable moves."""
    names = [canonical_variable(v) for v in variables]
    current = params

    def ee_at(p):
        if names == ["pilot_reuse"]:
            return zeta_objective(p, power, gamma0, p.pilot_reuse, strict)
        try:
            return constrained_ee(p, power, gamma0, strict).ee
        except (InfeasibleError, DomainError):
            return -math.inf

    start_ee = ee_at(current)
    trace = []
    converged = False
    for rnd in range(max_rounds):
        moved = False
        for name in names:
            try:
                rep = optimize_variable(current, power, gamma0, name, bounds, strict)
            except InfeasibleError:
                trace.append({"round": rnd, "variable": name, "status": "infeasible"})
                continue
            new = with_fields(current, **{name: rep.value})
            new_ee = ee_at(new)
            old_ee = ee_at(current)
            if new_ee > old_ee * (1 + 1e-12) or (not math.isfinite(old_ee) and math.isfinite(new_ee)):
                moved = moved or getattr(current, name) != rep.value
                current = new
            trace.append({"round": rnd, "variable": name, "value": getattr(current, name), "ee": ee_at(current)})
        if not moved:
            converged = True
            break
    if "pilot_reuse" not in names or len(names) > 1:
        try:
            z, _, _ = zeta_star(current, gamma0)
            zc = clip_zeta(current, z)
            if zc is not None:
                current = replace(current, pilot_reuse=zc)
        except DomainError:
            pass
    final_ee = ee_at(current)
    value = {n: getattr(current, n) for n in VARIABLES}
    return OptimumReport(
        variable=",".join(names), value=value, closed_form_value=value, oracle_value=None,
        feasible_interval=(), objective={"start": start_ee, "final": final_ee},
        closed_form_applicable=True, agreement=True,
        diagnostics={"converged": converged, "rounds": len({t["round"] for t in trace}), "trace": trace},
    )
