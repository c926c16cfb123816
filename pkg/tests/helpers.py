"""Shared scenario builders and independent oracles for the tests."""

from dataclasses import replace

import numpy as np

from dfcl import fig1_config, information_state, normalization
from dfcl.estimator import df_update_information


def zero_disturbance(cfg):
    return replace(
        cfg,
        disturbance=replace(
            cfg.disturbance, kind="zero", amplitude=0.0, switch_step=0, bound=0.0
        ),
    )


def always_on_disturbance(cfg):
    return replace(
        cfg,
        disturbance=replace(cfg.disturbance, switch_step=cfg.simulation.horizon),
    )


def benchmark_config(kind="df_cl", horizon=1000, **tweaks):
    cfg = fig1_config(kind, horizon=horizon)
    if tweaks:
        cfg = replace(cfg, **tweaks)
    return cfg


def drive_memory(theta, phis, ws, mu=0.7, alpha=1.0):
    """Feed scripted samples into the memory, recording everything the
    product-sum oracle needs: pre-update Omega at each step, the branch
    taken, and the normalizations."""
    theta = np.asarray(theta, dtype=float)
    info = information_state(theta.shape[0], mu, alpha)
    omegas = []
    branches = []
    ms = []
    for phi, w in zip(phis, ws):
        phi = np.asarray(phi, dtype=float)
        omegas.append(info.omega.copy())
        m = normalization(phi, alpha)
        ms.append(m)
        y_next = float(theta @ phi) + w
        info = df_update_information(info, phi, y_next, m)
        branches.append(info.last_branch == "forget")
    return info, omegas, branches, np.asarray(ms)


def defect_product_sum(phis, ws, ms, omegas, branches, mu):
    """Recorded-data defect by explicit unrolling.

    Omega(k) theta - M(k) satisfies W(k+1) = T(k) W(k) - phi w / m^2 with
    T = I on accumulate steps and the directional-forgetting map on
    forget steps; unrolled, W(k) is a sum over sample indices of
    transition products applied to -phi w / m^2. Entirely different
    arithmetic from the incremental update of M, which is the point.
    """
    k = len(ws)
    n = np.asarray(phis[0]).shape[0]
    eye = np.eye(n)
    total = np.zeros(n)
    for i in range(k):
        vec = np.asarray(phis[i], dtype=float) * (ws[i] / ms[i] ** 2)
        for j in range(i + 1, k):
            if branches[j]:
                phi_j = np.asarray(phis[j], dtype=float)
                om = omegas[j]
                denom = float(phi_j @ om @ phi_j)
                t_mat = eye - (mu / denom) * np.outer(om @ phi_j, phi_j)
                vec = t_mat @ vec
        total += vec
    return -total
