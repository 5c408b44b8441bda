"""Time-weighted prediction scores and top-N recommendation lists.

A candidate item j is scored for user a at query time t_now by

    f_aj = sum over rated items i of  w(t_now - t_ai) * s_ij,

summed over the user's training profile.  Only items reachable through at
least one nonzero similarity are candidates; unreachable items score
exactly zero and are never ranked.  Scoring is a pure function of
immutable inputs, so per-user calls may run fully in parallel.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .dataset import TrainSet
from .decay import DecaySpec, eval_decay
from .similarity import SimilarityModel


@dataclass
class ScoreVector:
    """Sparse candidate scores for one user at one query time.

    ``scores`` maps candidate item index to its score; items absent from
    the map (including the user's own profile) score exactly zero.
    """

    user: int
    t_now: int
    scores: dict[int, float]


def score_items(
    train: TrainSet,
    model: SimilarityModel,
    user: int,
    t_now: int,
    spec: DecaySpec,
) -> ScoreVector:
    """Score all candidate items for ``user`` as of ``t_now``.

    Raises ValueError for an unknown user, an empty training profile, or
    a query time earlier than one of the user's ratings.
    """
    if not 0 <= user < train.n_users:
        raise ValueError(f"unknown user index {user} (have {train.n_users} users)")
    profile = train.profiles[user]
    if not profile:
        raise ValueError(f"user {user} has an empty training profile")

    prof_items = np.array([item for item, _ts in profile])
    weights = np.empty(len(profile))
    for pos, (_item, ts) in enumerate(profile):
        age = t_now - ts
        if age < 0:
            raise ValueError(
                f"query time {t_now} precedes a rating of user {user} at {ts}"
            )
        weights[pos] = eval_decay(spec, age)

    sub = model.matrix[prof_items]
    totals = sub.T.dot(weights)
    reachable = np.asarray(sub.getnnz(axis=0)).ravel() > 0
    reachable[prof_items] = False
    candidates = np.flatnonzero(reachable)
    scores = {int(j): float(totals[j]) for j in candidates}
    return ScoreVector(user, t_now, scores)


def top_n(score_vector: ScoreVector, n: int) -> list[tuple[int, float]]:
    """The n highest-scoring candidates, fewer if fewer score above zero.

    Ordered by score descending, ties by item index ascending; identical
    to sorting all positive-score candidates and truncating.
    """
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    positive = [(j, f) for j, f in score_vector.scores.items() if f > 0]
    return heapq.nsmallest(n, positive, key=lambda pair: (-pair[1], pair[0]))


def probe_rank(score_vector: ScoreVector, probe_item: int) -> int | None:
    """1-based rank the probe would take in a full recommendation list.

    None when the probe is not a candidate or scores zero.  Consistent
    with top_n: the probe is in the top-N exactly when rank <= N.
    """
    probe_score = score_vector.scores.get(probe_item, 0.0)
    if probe_score <= 0:
        return None
    ahead = 0
    for j, f in score_vector.scores.items():
        if j == probe_item or f <= 0:
            continue
        if f > probe_score or (f == probe_score and j < probe_item):
            ahead += 1
    return ahead + 1
