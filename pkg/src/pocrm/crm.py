"""Single-model CRM: power working model, MLE, recommendation, and the
consistency boundaries b_i with the interval checks they induce."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .kernels import impl as _k


class HeterogeneityError(ValueError):
    """MLE requested on data without both a DLT and a non-DLT."""


@dataclass(frozen=True)
class ModelParamDomain:
    """Finite interval for the power-model parameter a."""

    lo: float = 1e-3
    hi: float = 1e3

    def __post_init__(self):
        if not (0 < self.lo < self.hi < np.inf):
            raise ValueError(f"invalid parameter domain [{self.lo}, {self.hi}]")


DEFAULT_DOMAIN = ModelParamDomain()


@dataclass(frozen=True)
class Skeleton:
    """Strictly increasing prior toxicity guesses in (0, 1)."""

    alpha: tuple[float, ...]

    def __post_init__(self):
        a = np.asarray(self.alpha, dtype=float)
        if a.ndim != 1 or a.size == 0:
            raise ValueError("skeleton must be a nonempty vector")
        if not (np.all(a > 0) and np.all(a < 1)):
            bad = int(np.argmax((a <= 0) | (a >= 1)))
            raise ValueError(f"skeleton value out of (0,1) at index {bad}")
        if not np.all(np.diff(a) > 0):
            bad = int(np.argmax(np.diff(a) <= 0)) + 1
            raise ValueError(f"skeleton not strictly increasing at index {bad}")
        object.__setattr__(self, "alpha", tuple(float(v) for v in a))

    def __len__(self) -> int:
        return len(self.alpha)

    def as_array(self) -> np.ndarray:
        return np.array(self.alpha, dtype=float)


@dataclass
class DoseData:
    """Per-position patient and DLT counts."""

    n: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.n = np.asarray(self.n, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.n.shape != self.y.shape:
            raise ValueError("n and y must have the same shape")
        if np.any(self.y < 0) or np.any(self.y > self.n):
            raise ValueError("need 0 <= y[l] <= n[l]")

    @property
    def heterogeneous(self) -> bool:
        return 0 < self.y.sum() < self.n.sum()


def tox_prob(alpha_at: float, a: float) -> float:
    """Power-model toxicity probability alpha_at ** a."""
    if not (0 < alpha_at < 1):
        raise ValueError(f"skeleton value {alpha_at} outside (0, 1)")
    if not a > 0:
        raise ValueError(f"model parameter {a} must be positive")
    return alpha_at ** a


def log_likelihood(data: DoseData, alpha: np.ndarray, a: float) -> float:
    """Binomial log-likelihood of the counts under the reordered skeleton."""
    alpha = np.asarray(alpha, dtype=float)
    return float(_k.loglik_counts(alpha, data.n, data.y, float(a)))


def mle(data: DoseData, alpha: np.ndarray,
        domain: ModelParamDomain = DEFAULT_DOMAIN) -> float:
    """Maximum likelihood estimate of a over the parameter domain."""
    if not data.heterogeneous:
        raise HeterogeneityError("MLE needs at least one DLT and one non-DLT")
    alpha = np.asarray(alpha, dtype=float)
    return float(_k.mle_counts(alpha, data.n, data.y, domain.lo, domain.hi))


def recommend(skeleton_ordered: np.ndarray, a_hat: float, theta0: float) -> int:
    """1-based position minimising |alpha^a_hat - theta0|, ties to the lower one."""
    alpha = np.asarray(skeleton_ordered, dtype=float)
    if alpha.size == 0:
        raise ValueError("empty skeleton")
    if not a_hat > 0:
        raise ValueError("a_hat must be positive")
    dist = np.abs(alpha ** a_hat - theta0)
    best = 0
    for l in range(1, alpha.size):
        if dist[l] < dist[best]:
            best = l
    return best + 1


def crm_boundaries(skeleton: Skeleton, theta0: float,
                   domain: ModelParamDomain = DEFAULT_DOMAIN) -> np.ndarray:
    """Boundary vector b[1..k+1] (returned 0-based, length k+1).

    b[0] and b[k] are the domain endpoints; interior b_i solves
    alpha[i-1]^b + alpha[i]^b = 2*theta0, which is strictly decreasing in b,
    so a bracketed root is unique.
    """
    alpha = skeleton.as_array()
    k = alpha.size
    if not 2 * theta0 < 1 + alpha[-1]:
        raise ValueError("2*theta0 too large for this skeleton (no roots)")
    b = np.empty(k + 1)
    b[0] = domain.lo
    b[k] = domain.hi

    for i in range(1, k):
        lo_a, hi_a = alpha[i - 1], alpha[i]

        def g(x, lo_a=lo_a, hi_a=hi_a):
            return lo_a ** x + hi_a ** x - 2 * theta0

        if g(domain.lo) < 0 or g(domain.hi) > 0:
            raise ValueError(
                f"boundary b_{i + 1} not bracketed by the parameter domain"
            )
        b[i] = brentq(g, domain.lo, domain.hi, xtol=1e-10)
    return b


@dataclass(frozen=True)
class CrmViolation:
    """One failed interval constraint on a converged slope a_i."""

    position: int      # 1-based position under the candidate ordering
    a_value: float
    bound: float
    side: str          # "lower": need a > bound; "upper": need a < bound

    def __str__(self):
        op = ">" if self.side == "lower" else "<"
        return (f"position {self.position}: a={self.a_value:.4f} "
                f"must be {op} b={self.bound:.4f}")


@dataclass(frozen=True)
class CrmConsistencyReport:
    consistent: bool
    violations: tuple[CrmViolation, ...] = field(default_factory=tuple)
    a_values: tuple[float, ...] = field(default_factory=tuple)
    boundaries: tuple[float, ...] = field(default_factory=tuple)


def check_crm_consistency(skeleton: Skeleton, r_ordered: np.ndarray,
                          mtc_pos: int, theta0: float,
                          domain: ModelParamDomain = DEFAULT_DOMAIN,
                          ) -> CrmConsistencyReport:
    """Interval check of the converged slopes a_i = ln R_i / ln alpha[i].

    r_ordered holds the true toxicity probabilities arranged by the
    candidate ordering; mtc_pos is the 1-based position of the MTC.  The
    condition at the MTC is a in (b_mtc, b_mtc+1); below it a_i must fall
    above b_{i+1} (union of the higher cells); above it below b_i.
    """
    alpha = skeleton.as_array()
    r = np.asarray(r_ordered, dtype=float)
    k = alpha.size
    if r.shape != (k,):
        raise ValueError("r_ordered must match the skeleton length")
    if not (np.all(r > 0) and np.all(r < 1) and np.all(np.diff(r) > 0)):
        raise ValueError("true toxicities must be strictly increasing in (0,1)")
    if not (1 <= mtc_pos <= k):
        raise ValueError(f"mtc_pos {mtc_pos} out of range")
    if abs(r[mtc_pos - 1] - theta0) > 1e-12:
        raise ValueError("true toxicity at the MTC position must equal theta0")

    b = crm_boundaries(skeleton, theta0, domain)
    a = np.log(r) / np.log(alpha)
    violations: list[CrmViolation] = []
    for pos in range(1, k + 1):
        ai = a[pos - 1]
        if pos < mtc_pos:
            if not ai > b[pos]:
                violations.append(CrmViolation(pos, ai, b[pos], "lower"))
        elif pos > mtc_pos:
            if not ai < b[pos - 1]:
                violations.append(CrmViolation(pos, ai, b[pos - 1], "upper"))
        else:
            if not b[pos - 1] < ai:
                violations.append(CrmViolation(pos, ai, b[pos - 1], "lower"))
            if not ai < b[pos]:
                violations.append(CrmViolation(pos, ai, b[pos], "upper"))
    return CrmConsistencyReport(
        consistent=not violations,
        violations=tuple(violations),
        a_values=tuple(float(v) for v in a),
        boundaries=tuple(float(v) for v in b),
    )
