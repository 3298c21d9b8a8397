# Independent straight-line reimplementations of every closed-form quantity,
# written with plain Python loops and no shared helpers.  These are the
# reference the library evaluators are checked against.

from __future__ import annotations

import math


def k_sgd(lam, n, nodes, gamma):
    threshold = nodes / (gamma * n)
    k = 0
    for j, value in enumerate(lam, start=1):
        if value >= threshold:
            k = j
    return k


def v_functional(lam, n, nodes, gamma, k):
    tail = 0.0
    for j in range(k, len(lam)):
        tail += lam[j] ** 2
    return k / n + gamma**2 * (n / nodes**2) * tail


def dsgd_upper(lam, w, n, nodes, gamma, tau, sigma_sq):
    trace = sum(lam)
    slack = 1.0 - gamma * tau * trace
    k = k_sgd(lam, n, nodes, gamma)
    head_inv = 0.0
    head_id = 0.0
    for j in range(k):
        head_inv += w[j] ** 2 / lam[j]
        head_id += w[j] ** 2
    tail_h = 0.0
    for j in range(k, len(lam)):
        tail_h += lam[j] * w[j] ** 2
    v = v_functional(lam, n, nodes, gamma, k)
    bias = nodes**2 / (gamma**2 * n**2) * head_inv + tail_h
    bias += 2.0 * tau * nodes**2 * (head_id + gamma * (n / nodes) * tail_h) \
        / (gamma * n * slack) * v
    variance = sigma_sq / slack * v
    return bias, variance, 2.0 * (bias + variance)


def dsgd_lower(lam, w, n, nodes, gamma, noise_sq):
    k = k_sgd(lam, n, nodes, gamma)
    head_inv = 0.0
    for j in range(k):
        head_inv += w[j] ** 2 / lam[j]
    tail_h = 0.0
    for j in range(k, len(lam)):
        tail_h += lam[j] * w[j] ** 2
    bias = nodes * (nodes - 1) / (100.0 * gamma**2 * n**2) \
        * (head_inv + gamma**2 * n**2 / nodes**2 * tail_h)
    variance = noise_sq / 100.0 * v_functional(lam, n, nodes, gamma, k)
    return bias, variance, bias + variance


def k_rr(lam, n, nodes, reg, b):
    d = len(lam)
    for k in range(d + 1):
        tail = 0.0
        for j in range(k, d):
            tail += lam[j]
        next_eig = lam[k] if k < d else 0.0
        if next_eig <= nodes * (reg + tail) / (b * n):
            return k
    return d


def drr_lower(lam, w, n, nodes, reg, b, c, sigma_sq):
    d = len(lam)
    k = k_rr(lam, n, nodes, reg, b)
    tail_mass = 0.0
    tail_sq = 0.0
    for j in range(k, d):
        tail_mass += lam[j]
        tail_sq += lam[j] ** 2
    tail_h = 0.0
    for j in range(k, d):
        tail_h += lam[j] * w[j] ** 2
    head_inv = 0.0
    for j in range(k):
        head_inv += w[j] ** 2 / lam[j]
    reg_tail = reg + tail_mass
    bias = tail_h + nodes**2 * reg_tail**2 / (c * n**2) * head_inv
    ratio = 0.0 if reg_tail == 0.0 else tail_sq / reg_tail**2
    variance = sigma_sq / c * (k / n + (n / nodes**2) * ratio)
    return bias, variance, bias + variance


def tail_dsgd_upper(lam, w, n, nodes, gamma, k1, k2, c_b, c_v, sigma_sq):
    bias = 0.0
    for j in range(k1):
        bias += math.exp(-2.0 * (n / nodes) * gamma * lam[j]) * w[j] ** 2 / lam[j]
    bias *= c_b * nodes**2 / (gamma**2 * n**2)
    for j in range(k1, len(lam)):
        bias += lam[j] * w[j] ** 2
    radius_sq = sum(wj**2 for wj in w)
    tail_sq = 0.0
    for j in range(k2, len(lam)):
        tail_sq += lam[j] ** 2
    variance = c_v * (1.0 + radius_sq) * sigma_sq \
        * (k2 / n + n * gamma**2 / nodes**2 * tail_sq)
    return bias, variance, bias + variance


def sc_constants(lam, w, n, nodes, gamma, reg, b, c, sigma_sq):
    k = k_rr(lam, n, nodes, reg, b)
    tail_mass = 0.0
    for j in range(k, len(lam)):
        tail_mass += lam[j]
    c_lambda = reg + tail_mass
    c_star = c * (1.0 + sum(wj**2 for wj in w) / sigma_sq)
    lam_at_k = lam[k - 1] if k >= 1 else 0.0
    lower = max(c_star, math.sqrt(c * (1.0 - gamma * lam_at_k)) / (gamma * c_lambda))
    upper = 1.0 / (c_star * gamma**2 * c_lambda**2)
    ok = gamma < min(1.0 / sum(lam), 1.0 / (math.sqrt(c) * c_star * c_lambda))
    return c_star, c_lambda, lower, upper, ok
