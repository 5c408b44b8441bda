"""Independent reference implementations used as test oracles.

Everything here is deliberately naive: dense two-loop cosine from user
sets, full-catalog loops for signal-to-noise ratios, triple-loop scoring,
and full-sort ranking.  None of it shares code with the library paths it
checks.
"""

import math
import random

from driftcf.dataset import Dataset, RatingEvent, RatingLog, preprocess, split_leave_latest


def item_raters(train):
    raters = [set() for _ in range(train.n_items)]
    for u, prof in enumerate(train.profiles):
        for item, _ts in prof:
            raters[item].add(u)
    return raters


def dense_cosine(train):
    """Dense two-loop binary cosine: |common| / sqrt(n_i * n_j)."""
    raters = item_raters(train)
    n = train.n_items
    sim = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if i == j or not raters[i] or not raters[j]:
                continue
            common = len(raters[i] & raters[j])
            if common:
                sim[i][j] = common / math.sqrt(len(raters[i]) * len(raters[j]))
    return sim


def ssnr_full_loop(sim, item, probe):
    """Explicit sum over every catalog item; returns (num, denom)."""
    num = sim[item][probe] ** 2
    denom = 0.0
    for j in range(len(sim)):
        if j != item and j != probe:
            denom += sim[item][j] ** 2
    return num, denom


def dense_scores(train, sim, user, t_now, weight_fn):
    """Triple-loop decay-weighted scores over the full catalog."""
    profile = train.profiles[user]
    rated = {item for item, _ts in profile}
    scores = {}
    for j in range(train.n_items):
        if j in rated:
            continue
        f = 0.0
        for item, ts in profile:
            f += weight_fn(t_now - ts) * sim[item][j]
        scores[j] = f
    return scores


def sort_truncate(scores, n):
    """Full sort of positive scores (desc, index asc), then truncate."""
    ranked = sorted(
        ((j, f) for j, f in scores.items() if f > 0), key=lambda p: (-p[1], p[0])
    )
    return ranked[:n]


def reference_ibcf_top_n(train, user, n, sim=None):
    """Separately coded classic item-based CF without any time weighting.

    ``sim(i, j)`` supplies similarity values; by default they are computed
    here from scratch.  Passing the model's lookup isolates the scoring
    and ranking comparison from last-ulp rounding differences between two
    cosine computations (similarity itself has its own dense oracle).
    """
    if sim is None:
        dense = dense_cosine(train)

        def sim(i, j):
            return dense[i][j]

    profile = train.profiles[user]
    rated = {item for item, _ts in profile}
    scores = {}
    for item, _ts in profile:
        for j in range(train.n_items):
            if j in rated or j == item:
                continue
            s = sim(item, j)
            if s:
                scores[j] = scores.get(j, 0.0) + s
    return sort_truncate(scores, n)


def pipeline_hits(dataset, weight_fn, n_list):
    """End-to-end brute force: split, dense cosine, dense scores, full sort.

    Returns {n: hit count} over evaluated users.
    """
    train, probes = split_leave_latest(dataset)
    sim = dense_cosine(train)
    hits = {n: 0 for n in n_list}
    for u in probes.evaluated_users:
        probe_item, probe_time = probes.probes[u]
        scores = dense_scores(train, sim, u, probe_time, weight_fn)
        for n in n_list:
            ranked = [j for j, _f in sort_truncate(scores, n)]
            if probe_item in ranked:
                hits[n] += 1
    return hits, len(probes.evaluated_users)


def random_log(rng: random.Random, max_users=15, max_items=20, max_events=120) -> RatingLog:
    n_users = rng.randint(2, max_users)
    n_items = rng.randint(2, max_items)
    n_events = rng.randint(1, max_events)
    events = tuple(
        RatingEvent(
            f"u{rng.randrange(n_users)}",
            f"i{rng.randrange(n_items)}",
            rng.randrange(1_000_000),
        )
        for _ in range(n_events)
    )
    return RatingLog(events)


def random_dataset(rng: random.Random, **kw) -> Dataset:
    return preprocess(random_log(rng, **kw))


def random_train(rng: random.Random, **kw):
    """A preprocessed random dataset with a nonempty split, plus probes."""
    while True:
        dataset = random_dataset(rng, **kw)
        if dataset.n_ratings == 0:
            continue
        train, probes = split_leave_latest(dataset)
        if probes.probes and train.n_ratings > 0:
            return dataset, train, probes
