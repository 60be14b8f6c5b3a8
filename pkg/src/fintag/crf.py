"""Exact linear-chain CRF inference.

All dynamic programs run in log space with max-shifted log-sum-exp. Masked
(disallowed) transitions are handled by adding a large-negative sentinel to
the affected scores rather than -inf, which keeps gradients NaN-free; the
sentinel is big enough to dominate any realistic score gap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MASK_SENTINEL = -1e4


class CrfError(ValueError):
    """Raised for shape mismatches or infeasible decoding constraints."""


@dataclass
class CrfParams:
    """Transition table plus start/end potentials over L labels."""

    transitions: np.ndarray  # (L, L), from-label x to-label
    start: np.ndarray  # (L,)
    end: np.ndarray  # (L,)

    def __post_init__(self) -> None:
        self.transitions = np.asarray(self.transitions, dtype=np.float64)
        self.start = np.asarray(self.start, dtype=np.float64)
        self.end = np.asarray(self.end, dtype=np.float64)
        L = self.start.shape[0]
        if self.transitions.shape != (L, L) or self.end.shape != (L,):
            raise CrfError("inconsistent parameter shapes")
        if not (
            np.isfinite(self.transitions).all()
            and np.isfinite(self.start).all()
            and np.isfinite(self.end).all()
        ):
            raise CrfError("CRF parameters must be finite")

    @property
    def n_labels(self) -> int:
        return self.start.shape[0]

    @classmethod
    def zeros(cls, n_labels: int) -> "CrfParams":
        return cls(
            np.zeros((n_labels, n_labels)),
            np.zeros(n_labels),
            np.zeros(n_labels),
        )


@dataclass
class TransitionMask:
    """Boolean feasibility of transitions and of start/end labels."""

    allowed: np.ndarray  # (L, L)
    allowed_start: np.ndarray  # (L,)
    allowed_end: np.ndarray  # (L,)

    def __post_init__(self) -> None:
        self.allowed = np.asarray(self.allowed, dtype=bool)
        self.allowed_start = np.asarray(self.allowed_start, dtype=bool)
        self.allowed_end = np.asarray(self.allowed_end, dtype=bool)
        if not self.allowed_start.any():
            raise CrfError("mask allows no start label")
        if not self.allowed_end.any():
            raise CrfError("mask allows no end label")

    def penalties(self) -> np.ndarray:
        return np.where(self.allowed, 0.0, MASK_SENTINEL)


def _check_emissions(emissions: np.ndarray) -> np.ndarray:
    emissions = np.asarray(emissions, dtype=np.float64)
    if emissions.ndim != 2 or emissions.shape[0] < 1:
        raise CrfError(f"emissions must be (T, L) with T >= 1, got {emissions.shape}")
    if not np.isfinite(emissions).all():
        raise CrfError("emissions must be finite")
    return emissions


def _logsumexp(a: np.ndarray, axis: int) -> np.ndarray:
    shift = np.max(a, axis=axis, keepdims=True)
    return (shift + np.log(np.sum(np.exp(a - shift), axis=axis, keepdims=True))).squeeze(axis)


def sequence_score(emissions: np.ndarray, params: CrfParams, labels) -> float:
    """start + emissions along the path + transitions + end, as one scalar."""
    emissions = _check_emissions(emissions)
    labels = np.asarray(labels, dtype=np.int64)
    T, L = emissions.shape
    if labels.shape != (T,):
        raise CrfError(f"expected {T} labels, got {labels.shape}")
    if labels.min() < 0 or labels.max() >= L:
        raise CrfError("label index out of range")
    score = params.start[labels[0]] + emissions[np.arange(T), labels].sum() + params.end[labels[-1]]
    if T > 1:
        score += params.transitions[labels[:-1], labels[1:]].sum()
    return float(score)


def log_partition(emissions: np.ndarray, params: CrfParams) -> float:
    """log of the sum over all L^T label sequences of exp(sequence_score)."""
    emissions = _check_emissions(emissions)
    alpha = params.start + emissions[0]
    for t in range(1, emissions.shape[0]):
        alpha = emissions[t] + _logsumexp(alpha[:, None] + params.transitions, axis=0)
    return float(_logsumexp(alpha + params.end, axis=0))


def forward_backward(emissions: np.ndarray, params: CrfParams):
    """Alpha/beta tables and the log partition, all in log space."""
    emissions = _check_emissions(emissions)
    T, L = emissions.shape
    alpha = np.empty((T, L))
    beta = np.empty((T, L))
    alpha[0] = params.start + emissions[0]
    for t in range(1, T):
        alpha[t] = emissions[t] + _logsumexp(alpha[t - 1][:, None] + params.transitions, axis=0)
    beta[T - 1] = params.end
    for t in range(T - 2, -1, -1):
        beta[t] = _logsumexp(
            params.transitions + (emissions[t + 1] + beta[t + 1])[None, :], axis=1
        )
    log_z = float(_logsumexp(alpha[T - 1] + params.end, axis=0))
    return alpha, beta, log_z


def marginals(emissions: np.ndarray, params: CrfParams) -> np.ndarray:
    """Per-position label marginals; each row sums to 1."""
    alpha, beta, log_z = forward_backward(emissions, params)
    return np.exp(alpha + beta - log_z)


def nll_and_gradient(emissions: np.ndarray, params: CrfParams, labels):
    """Negative log-likelihood of the gold path with analytic gradients.

    Gradients are expected feature counts under the model minus observed
    counts: d/d_emissions = marginals - onehot(gold), and similarly for the
    transition, start and end parameters.
    """
    emissions = _check_emissions(emissions)
    labels = np.asarray(labels, dtype=np.int64)
    T, L = emissions.shape
    score = sequence_score(emissions, params, labels)
    alpha, beta, log_z = forward_backward(emissions, params)
    loss = log_z - score

    post = np.exp(alpha + beta - log_z)
    grad_emissions = post.copy()
    grad_emissions[np.arange(T), labels] -= 1.0

    grad_transitions = np.zeros((L, L))
    for t in range(T - 1):
        pair = (
            alpha[t][:, None]
            + params.transitions
            + (emissions[t + 1] + beta[t + 1])[None, :]
            - log_z
        )
        grad_transitions += np.exp(pair)
        grad_transitions[labels[t], labels[t + 1]] -= 1.0

    grad_start = post[0].copy()
    grad_start[labels[0]] -= 1.0
    grad_end = post[T - 1].copy()
    grad_end[labels[T - 1]] -= 1.0

    grads = CrfParams.zeros(L)
    grads.transitions = grad_transitions
    grads.start = grad_start
    grads.end = grad_end
    return float(loss), grad_emissions, grads


def _mask_feasible(T: int, mask: TransitionMask, step_allowed: np.ndarray | None) -> bool:
    reachable = mask.allowed_start.copy()
    for t in range(T - 1):
        allowed = mask.allowed
        if step_allowed is not None:
            allowed = allowed & step_allowed[t]
        reachable = (reachable[:, None] & allowed).any(axis=0)
        if not reachable.any():
            return False
    return bool((reachable & mask.allowed_end).any())


def viterbi_decode(
    emissions: np.ndarray,
    params: CrfParams,
    mask: TransitionMask | None = None,
    step_allowed: np.ndarray | None = None,
) -> tuple[list[int], float]:
    """Best-scoring label sequence among those the mask permits.

    ``step_allowed`` optionally narrows transitions per step: a (T-1, L, L)
    boolean array ANDed with the mask, used for boundary-aware subword
    decoding. Ties break toward the lowest label index at the latest
    differing position. The returned score is the plain sequence_score of
    the returned labels.
    """
    emissions = _check_emissions(emissions)
    T, L = emissions.shape
    if step_allowed is not None:
        step_allowed = np.asarray(step_allowed, dtype=bool)
        if step_allowed.shape != (max(T - 1, 0), L, L):
            raise CrfError(f"step_allowed must be (T-1, L, L), got {step_allowed.shape}")
        if mask is None:
            mask = TransitionMask(
                np.ones((L, L), dtype=bool),
                np.ones(L, dtype=bool),
                np.ones(L, dtype=bool),
            )
    if mask is not None and not _mask_feasible(T, mask, step_allowed):
        raise CrfError("no label sequence is allowed by the mask")

    start_pen = 0.0 if mask is None else np.where(mask.allowed_start, 0.0, MASK_SENTINEL)
    end_pen = 0.0 if mask is None else np.where(mask.allowed_end, 0.0, MASK_SENTINEL)
    trans_pen = 0.0 if mask is None else mask.penalties()

    v = params.start + emissions[0] + start_pen
    backptr = np.empty((T, L), dtype=np.int64)
    for t in range(1, T):
        scores = v[:, None] + params.transitions + trans_pen
        if step_allowed is not None:
            scores = scores + np.where(step_allowed[t - 1], 0.0, MASK_SENTINEL)
        backptr[t] = np.argmax(scores, axis=0)
        v = emissions[t] + np.max(scores, axis=0)
    v = v + params.end + end_pen

    best = int(np.argmax(v))
    path = [best]
    for t in range(T - 1, 0, -1):
        best = int(backptr[t, best])
        path.append(best)
    path.reverse()
    return path, sequence_score(emissions, params, path)


def iob2_constraint_mask(labelset) -> TransitionMask:
    """Forbid I-t after anything but B-t/I-t, and I-t as the first label."""
    L = len(labelset.labels)
    allowed = np.ones((L, L), dtype=bool)
    allowed_start = np.ones(L, dtype=bool)
    allowed_end = np.ones(L, dtype=bool)
    for tag in labelset.tags:
        b, i = labelset.b_index(tag), labelset.i_index(tag)
        allowed[:, i] = False
        allowed[b, i] = True
        allowed[i, i] = True
        allowed_start[i] = False
    return TransitionMask(allowed, allowed_start, allowed_end)
