"""Random parameter draws shared by the test modules."""

import math
from dataclasses import replace

import numpy as np

from cellfree_ee import model


def random_params(rng, pilot_mode=None, k_range=(4, 17), n_range=(2, 65)) -> model.SystemParams:
    K = int(rng.integers(*k_range))
    N = int(rng.integers(*n_range))
    snr = 10 ** rng.uniform(-1, 2)
    mode = pilot_mode or str(rng.choice(["orthogonal_reuse", "welch_bound"]))
    return model.SystemParams(
        n_antennas=N, n_users=K, pilot_reuse=float(rng.uniform(1.0, K)),
        ap_density=rng.uniform(5, 150) * 1e-6, area=1e6, pathloss_exp=rng.uniform(2.5, 5.0),
        rho_tr=snr, rho_d=2 * snr, rho_tr_watts=rng.uniform(0.05, 0.3), rho_d_watts=rng.uniform(0.05, 0.5),
        tau_c=int(rng.integers(100, 400)), dl_fraction=rng.uniform(0.2, 1.0),
        bandwidth=rng.uniform(5e6, 50e6), pilot_mode=mode,
    )


def random_power(rng) -> model.PowerModel:
    return model.PowerModel(
        p_fp=rng.uniform(0.5, 10), p_lo=rng.uniform(0, 0.5), p_ap=rng.uniform(0.05, 0.5),
        p_ue=rng.uniform(0.05, 0.3), p_cod=rng.uniform(0, 0.1) * 1e-9, p_dec=rng.uniform(0, 0.2) * 1e-9,
        p_bt=rng.uniform(0, 0.1) * 1e-9, l_ap=rng.uniform(100, 1000) * 1e9, amp_eff=rng.uniform(0.2, 1.0),
    )


def random_target(rng, params):
    """SINR target reachable at some admissible reuse factor of ``params``."""
    K = params.n_users
    lo = max(1.0, K / params.tau_c)
    zeta = float(rng.uniform(lo, K))
    return 1.0 / model.check_gamma(replace(params, pilot_reuse=zeta)), zeta


def rel_err(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def finite(x):
    return x is not None and math.isfinite(x)
