"""Log-space linear-chain CRF over emission scores.

Conventions used throughout:

* ``transitions`` is a ``(K+2, K+2)`` float64 matrix indexed ``[from, to]``.
  Indices ``K`` and ``K+1`` are synthetic START and STOP states, so a path
  ``y_1 .. y_T`` scores

      transitions[START, y_1]
      + sum_t transitions[y_t, y_{t+1}]
      + transitions[y_T, STOP]
      + sum_t emissions[t, y_t]

* Structurally impossible cells (anything entering START or leaving STOP)
  hold ``NEG_INF``, a finite sentinel: additions never produce NaN, and
  exp(NEG_INF) underflows to exactly 0.0 in double precision, so the
  sentinel can never win a max or contribute to a log-sum-exp.

* All scores live in log space; the partition function uses the stabilized
  forward recursion and decoding uses max-plus with backpointers.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import DimensionError, EmptySequenceError

NEG_INF = -1e4


@dataclass
class CrfParams:
    """Transition scores for ``num_tags`` real tags plus START/STOP states."""

    num_tags: int
    transitions: np.ndarray  # (K+2, K+2), [from, to], float64

    def __post_init__(self):
        k = self.num_tags
        if k < 1:
            raise DimensionError(f"num_tags must be >= 1, got {k}")
        self.transitions = np.asarray(self.transitions, dtype=np.float64)
        if self.transitions.shape != (k + 2, k + 2):
            raise DimensionError(
                f"transitions must have shape {(k + 2, k + 2)}, "
                f"got {self.transitions.shape}"
            )
        if not np.all(self.transitions[:, self.start] == NEG_INF):
            raise ValueError("transitions into START must be NEG_INF")
        if not np.all(self.transitions[self.stop, :] == NEG_INF):
            raise ValueError("transitions out of STOP must be NEG_INF")
        if not np.all(np.isfinite(self.transitions)):
            raise ValueError("transitions must be finite everywhere")

    @property
    def start(self) -> int:
        return self.num_tags

    @property
    def stop(self) -> int:
        return self.num_tags + 1


@dataclass
class CrfGradients:
    """d(loss)/d(transitions) and d(loss)/d(emissions) for one sentence."""

    d_transitions: np.ndarray  # (K+2, K+2)
    d_emissions: np.ndarray    # (T, K)


def init_crf_params(num_tags: int, seed: int = 0, scale: float = 0.1) -> CrfParams:
    """Fresh transition matrix: uniform(-scale, scale), sentinels applied."""
    rng = np.random.default_rng(seed)
    trans = rng.uniform(-scale, scale, size=(num_tags + 2, num_tags + 2))
    trans[:, num_tags] = NEG_INF       # nothing enters START
    trans[num_tags + 1, :] = NEG_INF   # nothing leaves STOP
    return CrfParams(num_tags=num_tags, transitions=trans)


def zero_crf_params(num_tags: int) -> CrfParams:
    """All-zero transitions (uniform path scores), sentinels applied."""
    trans = np.zeros((num_tags + 2, num_tags + 2))
    trans[:, num_tags] = NEG_INF
    trans[num_tags + 1, :] = NEG_INF
    return CrfParams(num_tags=num_tags, transitions=trans)


def _check_emissions(params: CrfParams, emissions: np.ndarray) -> np.ndarray:
    emissions = np.asarray(emissions, dtype=np.float64)
    if emissions.ndim != 2:
        raise DimensionError(f"emissions must be 2-D (T, K), got ndim={emissions.ndim}")
    if emissions.shape[0] == 0:
        raise EmptySequenceError("emission matrix has zero time steps")
    if emissions.shape[1] != params.num_tags:
        raise DimensionError(
            f"emissions have {emissions.shape[1]} tag columns, "
            f"params expect {params.num_tags}"
        )
    if not np.all(np.isfinite(emissions)):
        raise ValueError("emissions must be finite")
    return emissions


def _check_path(params: CrfParams, emissions: np.ndarray, path) -> np.ndarray:
    path = np.asarray(path, dtype=np.intp)
    if path.ndim != 1 or path.shape[0] != emissions.shape[0]:
        raise DimensionError(
            f"path length {path.shape} does not match T={emissions.shape[0]}"
        )
    if path.size and (path.min() < 0 or path.max() >= params.num_tags):
        raise IndexError(
            f"tag index out of range [0, {params.num_tags}): {path.tolist()}"
        )
    return path


def score_path(params: CrfParams, emissions: np.ndarray, path) -> float:
    """Unnormalized log score of one tag path (emissions + transitions)."""
    emissions = _check_emissions(params, emissions)
    path = _check_path(params, emissions, path)
    t_idx = np.arange(emissions.shape[0])
    score = emissions[t_idx, path].sum()
    score += params.transitions[params.start, path[0]]
    score += params.transitions[path[:-1], path[1:]].sum()
    score += params.transitions[path[-1], params.stop]
    return float(score)


def _forward_alphas(params: CrfParams, emissions: np.ndarray) -> np.ndarray:
    """alpha[t, k] = log sum over prefixes ending in tag k at time t."""
    big_t, k = emissions.shape
    trans = params.transitions[:k, :k]
    alpha = np.empty((big_t, k))
    alpha[0] = params.transitions[params.start, :k] + emissions[0]
    for t in range(1, big_t):
        # alpha[t-1, i] + trans[i, j], reduced over source i
        alpha[t] = logsumexp(alpha[t - 1][:, None] + trans, axis=0) + emissions[t]
    return alpha


def _backward_betas(params: CrfParams, emissions: np.ndarray) -> np.ndarray:
    """beta[t, k] = log sum over suffixes given tag k at time t (excl. emission at t)."""
    big_t, k = emissions.shape
    trans = params.transitions[:k, :k]
    beta = np.empty((big_t, k))
    beta[-1] = params.transitions[:k, params.stop]
    for t in range(big_t - 2, -1, -1):
        beta[t] = logsumexp(trans + (emissions[t + 1] + beta[t + 1])[None, :], axis=1)
    return beta


def log_partition(params: CrfParams, emissions: np.ndarray) -> float:
    """log Z: log-sum-exp of the scores of all K^T paths, via the forward pass."""
    emissions = _check_emissions(params, emissions)
    alpha = _forward_alphas(params, emissions)
    k = emissions.shape[1]
    return float(logsumexp(alpha[-1] + params.transitions[:k, params.stop]))


def nll_loss(params: CrfParams, emissions: np.ndarray, gold) -> float:
    """Negative log-likelihood of the gold path: log Z - score(gold). Always >= 0."""
    return log_partition(params, emissions) - score_path(params, emissions, gold)


def marginals(params: CrfParams, emissions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Posterior tag probabilities from the forward-backward pass.

    Returns ``(unary, pairwise)`` where ``unary[t, k] = P(y_t = k | x)``
    (shape ``(T, K)``, rows sum to 1) and
    ``pairwise[t, i, j] = P(y_t = i, y_{t+1} = j | x)`` (shape ``(T-1, K, K)``).
    """
    emissions = _check_emissions(params, emissions)
    big_t, k = emissions.shape
    trans = params.transitions[:k, :k]
    alpha = _forward_alphas(params, emissions)
    beta = _backward_betas(params, emissions)
    log_z = logsumexp(alpha[-1] + params.transitions[:k, params.stop])

    unary = np.exp(alpha + beta - log_z)
    pairwise = np.empty((big_t - 1, k, k))
    for t in range(big_t - 1):
        pairwise[t] = np.exp(
            alpha[t][:, None] + trans + (emissions[t + 1] + beta[t + 1])[None, :] - log_z
        )
    return unary, pairwise


def nll_grad(params: CrfParams, emissions: np.ndarray, gold) -> CrfGradients:
    """Analytic gradient of ``nll_loss``: expected counts minus observed counts.

    The START row and STOP column of ``d_transitions`` carry the boundary
    terms; cells blocked by the sentinel convention are exactly 0.
    """
    emissions = _check_emissions(params, emissions)
    gold = _check_path(params, emissions, gold)
    big_t, k = emissions.shape
    unary, pairwise = marginals(params, emissions)

    d_emissions = unary.copy()
    d_emissions[np.arange(big_t), gold] -= 1.0

    d_trans = np.zeros_like(params.transitions)
    if big_t > 1:
        d_trans[:k, :k] = pairwise.sum(axis=0)
        np.subtract.at(d_trans, (gold[:-1], gold[1:]), 1.0)
    d_trans[params.start, :k] = unary[0]
    d_trans[params.start, gold[0]] -= 1.0
    d_trans[:k, params.stop] = unary[-1]
    d_trans[gold[-1], params.stop] -= 1.0
    return CrfGradients(d_transitions=d_trans, d_emissions=d_emissions)


def viterbi_decode(params: CrfParams, emissions: np.ndarray) -> tuple[np.ndarray, float]:
    """Highest-scoring tag path and its score, by max-plus dynamic programming.

    ``pi[t, s]`` is the best score of any prefix ending in tag ``s`` at time
    ``t``; ``bp[t, s]`` records the maximizing predecessor. Ties break toward
    the lowest tag index (argmax keeps the first maximizer). The returned
    score equals ``score_path`` of the returned path exactly.
    """
    emissions = _check_emissions(params, emissions)
    big_t, k = emissions.shape
    trans = params.transitions[:k, :k]

    pi = params.transitions[params.start, :k] + emissions[0]
    bp = np.empty((big_t, k), dtype=np.intp)
    for t in range(1, big_t):
        cand = pi[:, None] + trans             # cand[i, j]: best-through-i then i->j
        bp[t] = cand.argmax(axis=0)
        pi = cand[bp[t], np.arange(k)] + emissions[t]

    final = pi + params.transitions[:k, params.stop]
    path = np.empty(big_t, dtype=np.intp)
    path[-1] = int(final.argmax())
    for t in range(big_t - 1, 0, -1):
        path[t - 1] = bp[t, path[t]]
    return path, score_path(params, emissions, path)
