"""Empirical checks of the solver's working hypotheses and bounds.

The tangential-cone constant eta is estimated along realized trajectories
(a neighborhood certificate is not computable), and the per-iteration
contraction factors are audited against the recorded Bregman distances.
Everything here is pure analysis over recorded histories.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import selection as sel
from . import solver as slv


class NoValidPairs(Exception):
    """Every sampled pair had a zero denominator."""


class HypothesisViolated(Exception):
    """Audit preconditions (eta < 1/2, stepsize in the theorem range) failed."""


@dataclass
class EtaEstimate:
    eta: float
    sample_count: int
    max_pair: tuple            # (x1, x2, i) achieving the max ratio
    per_row: np.ndarray | None = None


def estimate_eta(system, pairs, per_row=False):
    """Max over sampled pairs and rows of

        |F_i(x1) - F_i(x2) - <grad F_i(x1), x1 - x2>| / |F_i(x1) - F_i(x2)|.

    Pairs with zero denominator are skipped; raises NoValidPairs if none
    survive.  per_row additionally reports the rowwise maxima.
    """
    row_max = np.zeros(system.m)
    best = (None, 0.0)
    count = 0
    for x1, x2 in pairs:
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        f1 = system.eval_all(x1)
        f2 = system.eval_all(x2)
        lin = system.jacobian(x1) @ (x1 - x2)
        num = np.abs(f1 - f2 - lin)
        den = np.abs(f1 - f2)
        valid = den > 0.0
        if not np.any(valid):
            continue
        count += int(valid.sum())
        ratios = np.zeros(system.m)
        ratios[valid] = num[valid] / den[valid]
        row_max = np.maximum(row_max, ratios)
        i = int(np.argmax(ratios))
        if ratios[i] > best[1]:
            best = ((x1, x2, i), ratios[i])
    if count == 0:
        raise NoValidPairs("no sampled pair had a nonzero denominator")
    return EtaEstimate(eta=float(row_max.max()), sample_count=count,
                       max_pair=best[0],
                       per_row=row_max if per_row else None)


def trajectory_pairs(record, prior, truth=None):
    """Sample pairs for eta estimation from a recorded run: consecutive
    iterates plus every (x_k, truth) pair when a ground truth is known.

    The (x_k, truth) pairs are exactly the ones the per-step decrease
    bound relies on, so an estimate over them makes the audit
    self-consistent.
    """
    if record.duals is None:
        raise ValueError("run was recorded without keep_iterates")
    primals = [prior.conj_grad(d) for d in record.duals]
    pairs = list(zip(primals[:-1], primals[1:]))
    if truth is not None:
        pairs += [(x, truth) for x in primals]
    return pairs


def check_gradients(system, trials, rng, step_scale=1e-6):
    """Max relative deviation between analytic and central finite-difference
    gradient rows over random (i, x)."""
    worst = 0.0
    for _ in range(trials):
        i = int(rng.integers(system.m))
        x = rng.standard_normal(system.n)
        g = system.grad_component(i, x)
        h = step_scale * (1.0 + np.linalg.norm(x))
        fd = np.empty(system.n)
        for j in range(system.n):
            e = np.zeros(system.n)
            e[j] = h
            fd[j] = (system.eval_component(i, x + e)
                     - system.eval_component(i, x - e)) / (2.0 * h)
        dev = np.linalg.norm(g - fd) / (1.0 + np.linalg.norm(fd))
        worst = max(worst, dev)
    return worst


AUDIT_HEADER = ["k", "d_k", "d_k1", "bound_factor", "satisfied"]


@dataclass
class ContractionAudit:
    rows: list                          # tuples matching AUDIT_HEADER
    fraction_satisfied: float
    hypothesis: dict = field(default_factory=dict)

    @property
    def all_satisfied(self):
        return self.fraction_satisfied == 1.0

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(AUDIT_HEADER)
            w.writerows(self.rows)


def block_jacobians(record, system, prior):
    """Jacobian rows of the block used at each recorded step."""
    if record.duals is None or record.blocks is None:
        raise ValueError("run was recorded without keep_iterates")
    jacs = []
    for dual, block in zip(record.duals[:-1], record.blocks):
        x = prior.conj_grad(dual)
        jacs.append(system.grad_block(block, x))
    return jacs


def contraction_audit(record, eta, config, per_block_jacobians, sigma=1.0,
                      smooth_modulus=1.0, use_eta_squared=False, slack=1e-12):
    """Check the per-iteration geometric decrease of the Bregman distance.

    For constant stepsize alpha the factor is

        1 - (2(1-eta)alpha - alpha^2) sigma / (M (1+eta)^2 kappa_F^2),

    with kappa_F = ||J||_F / sigma_min(J) of the block Jacobian; the
    adaptive bound uses delta and the spectral ratio sigma_max/sigma_min.
    The (1+eta)^2 term follows the proof; use_eta_squared switches to the
    (1+eta^2) variant that appears in one statement.
    """
    if eta >= 0.5:
        raise HypothesisViolated(f"eta = {eta:.4g} >= 1/2")
    if isinstance(config.stepsize, sel.Constant):
        step = config.stepsize.alpha
        if not 1.0 <= step < 2.0 * (1.0 - eta):
            raise HypothesisViolated(
                f"alpha = {step} outside [1, {2 * (1 - eta):.4g})")
    elif isinstance(config.stepsize, sel.Adaptive):
        step = config.stepsize.delta
        if not 0.0 < step < 2.0 * (1.0 - eta):
            raise HypothesisViolated(
                f"delta = {step} outside (0, {2 * (1 - eta):.4g})")
    else:
        raise TypeError(f"unknown stepsize policy: {config.stepsize!r}")

    eta_term = (1.0 + eta ** 2) if use_eta_squared else (1.0 + eta) ** 2
    gain = (2.0 * (1.0 - eta) * step - step ** 2) * sigma
    breg = record.column("bregman")
    rows = []
    satisfied = 0
    for k, jac in enumerate(per_block_jacobians):
        svals = np.linalg.svd(jac, compute_uv=False)
        smin = svals[svals > 1e-12 * svals[0]].min()
        if isinstance(config.stepsize, sel.Constant):
            kappa_sq = (svals ** 2).sum() / smin ** 2     # Frobenius over min
        else:
            kappa_sq = svals[0] ** 2 / smin ** 2          # spectral ratio
        factor = 1.0 - gain / (smooth_modulus * eta_term * kappa_sq)
        ok = breg[k + 1] <= factor * breg[k] + slack
        satisfied += int(ok)
        rows.append((k, float(breg[k]), float(breg[k + 1]), float(factor), ok))
    frac = satisfied / len(rows) if rows else 1.0
    hyp = {"eta": eta, "step": step, "sigma": sigma, "M": smooth_modulus,
           "eta_term": "1+eta^2" if use_eta_squared else "(1+eta)^2"}
    return ContractionAudit(rows=rows, fraction_satisfied=frac, hypothesis=hyp)


def audit_run(instance, prior, config, x0_star, use_eta_squared=False):
    """Run, estimate eta along the trajectory and audit the contraction."""
    # the decrease bounds cover the Frobenius-normalized update only
    cfg_kwargs = {**config.__dict__, "record_history": True,
                  "keep_iterates": True, "block_norm": "frobenius"}
    config = slv.SolverConfig(**cfg_kwargs)
    record = slv.run(instance.system, prior, config, x0_star,
                     truth=instance.truth)
    pairs = trajectory_pairs(record, prior, truth=instance.truth)
    est = estimate_eta(instance.system, pairs)
    jacs = block_jacobians(record, instance.system, prior)
    audit = contraction_audit(record, est.eta, config, jacs,
                              sigma=prior.sigma,
                              smooth_modulus=prior.smooth_modulus or 1.0,
                              use_eta_squared=use_eta_squared)
    return record, est, audit
