"""Fixed-point and online learning of shared network state from agent routes.

Batch mode repeatedly solves one inverse problem per agent against a common
prior and replaces the prior with the weighted mean of the agents'
posteriors, until the fixed point is reached:

* :func:`estimate_costs` learns heterogeneous link costs; it stops when the
  weighted posterior mean agrees with the prior componentwise within the
  tolerance (the fixed-point residual).
* :func:`recover_prices` learns shared capacity dual prices; it stops when
  every agent's posterior agrees with the prior within the tolerance, which
  is the stronger condition the price model promises at convergence (all
  agents end up homogeneous).

Online mode (:func:`online_update`) processes one observation at a time and
promotes each posterior to be the next prior, which makes the current state
track regime changes revealed by newly observed routes.

Agents whose observations are identical share one inverse solve per
iteration; results depend only on (prior, route, subnetwork), so grouping
changes nothing but the run time.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path as FilePath
from typing import Callable, Iterable, Sequence

from .errors import DataError, InconsistentObservation, NoUsableObservations
from .inverse import InverseResult, infer_dual_prices, infer_link_costs
from .network import (
    CapacitySpec,
    LinkId,
    Network,
    Observation,
    Path,
    PriceVector,
)

logger = logging.getLogger(__name__)

_GroupKey = tuple[Path, frozenset[LinkId] | None]


@dataclass(frozen=True)
class FixedPointTrace:
    """Prior sequence and terminal per-agent posteriors of one batch run.

    ``final_gap`` is the stopping residual: for cost estimation the largest
    componentwise move of the prior in the last iteration, for price
    recovery the largest deviation of any agent's posterior from the prior
    (an upper bound on the prior move).
    """

    priors: tuple[PriceVector, ...]
    per_agent_posteriors: dict[str, PriceVector]
    iterations: int
    converged: bool
    final_gap: float
    skipped_agents: tuple[str, ...] = ()

    def final_prior(self) -> PriceVector:
        return dict(self.priors[-1])


@dataclass(frozen=True)
class OnlineLogEntry:
    update_index: int
    agent_id: str
    timestamp: float | None
    objective: float
    prices_after: PriceVector
    skipped: bool = False


@dataclass(frozen=True)
class OnlineState:
    """Resumable state of the online monitor: current prices plus an audit log."""

    prices: PriceVector
    update_count: int = 0
    last_timestamp: float | None = None
    log: tuple[OnlineLogEntry, ...] = ()

    def __post_init__(self) -> None:
        for lid, value in self.prices.items():
            if value < 0:
                raise DataError(f"online price for link {lid} is negative")


def _group(observations: Sequence[Observation]) -> dict[_GroupKey, list[Observation]]:
    groups: dict[_GroupKey, list[Observation]] = {}
    for ob in observations:
        groups.setdefault((ob.path, ob.subnetwork), []).append(ob)
    return groups


def _solve_groups(
    keys: Sequence[_GroupKey],
    solver: Callable[[_GroupKey], InverseResult],
    jobs: int,
) -> list[InverseResult]:
    if jobs <= 1 or len(keys) <= 1:
        return [solver(k) for k in keys]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(solver, keys))


def _weighted_mean(
    results: Sequence[InverseResult],
    weights: Sequence[float],
    link_ids: Sequence[LinkId],
) -> PriceVector:
    total = sum(weights)
    return {
        lid: sum(w * r.posterior[lid] for r, w in zip(results, weights)) / total
        for lid in link_ids
    }


def estimate_costs(
    observations: Sequence[Observation],
    net: Network,
    initial_prior: PriceVector,
    tol: float = 1e-3,
    max_iter: int = 1000,
    jobs: int = 1,
) -> FixedPointTrace:
    """Learn per-agent link costs whose weighted mean is a fixed-point prior.

    Every iteration solves the cost inverse for each distinct observed route
    and replaces the prior with the flow-weighted mean of the posteriors.
    Convergence means the mean moved less than ``tol`` in any component, at
    which point each agent's observed route is optimal under that agent's
    posterior and the posteriors average back to the common prior.
    """

    if tol <= 0:
        raise DataError("tol must be positive")
    if max_iter < 1:
        raise DataError("max_iter must be at least 1")
    if not observations:
        raise NoUsableObservations("no observations supplied")
    groups = _group(observations)
    keys = sorted(groups, key=lambda k: (k[0].links, tuple(sorted(k[1])) if k[1] else ()))
    weights = [sum(ob.weight for ob in groups[k]) for k in keys]
    link_ids = [l.id for l in net.links]

    priors: list[PriceVector] = [dict(initial_prior)]
    converged = False
    gap = float("inf")
    results: list[InverseResult] = []
    for _ in range(max_iter):
        prior = priors[-1]
        results = _solve_groups(
            keys, lambda k: infer_link_costs(net, prior, k[0], k[1]), jobs
        )
        mean = _weighted_mean(results, weights, link_ids)
        gap = max(abs(mean[lid] - prior[lid]) for lid in link_ids)
        priors.append(mean)
        if gap < tol:
            converged = True
            break

    per_agent = {
        ob.agent_id: dict(res.posterior)
        for key, res in zip(keys, results)
        for ob in groups[key]
    }
    return FixedPointTrace(
        tuple(priors), per_agent, len(priors) - 1, converged, gap
    )


def recover_prices(
    observations: Sequence[Observation],
    net: Network,
    costs: PriceVector,
    priced: CapacitySpec,
    initial_prior: PriceVector | None = None,
    tol: float = 1e-6,
    max_iter: int = 1000,
    jobs: int = 1,
) -> FixedPointTrace:
    """Recover the shared dual prices of the priced links from observed routes.

    Starts from a zero prior unless one is supplied, iterates the weighted
    mean of per-agent posteriors, and stops once every agent's posterior
    matches the prior within ``tol`` (the homogeneous fixed point).
    Observations no nonnegative pricing can explain are dropped and
    reported; a batch with nothing left raises
    :class:`~netinverse.errors.NoUsableObservations`.
    """

    if tol <= 0:
        raise DataError("tol must be positive")
    if max_iter < 1:
        raise DataError("max_iter must be at least 1")
    priced_ids = priced.priced_links()
    prior0: PriceVector = (
        {lid: 0.0 for lid in priced_ids} if initial_prior is None else dict(initial_prior)
    )
    for lid in priced_ids:
        if lid not in prior0:
            raise DataError(f"initial prior has no entry for priced link {lid}")
        if prior0[lid] < 0:
            raise DataError(f"initial prior must be >= 0 for priced link {lid}")

    groups = _group(observations)
    keys = sorted(groups, key=lambda k: (k[0].links, tuple(sorted(k[1])) if k[1] else ()))

    usable: list[_GroupKey] = []
    skipped: list[str] = []
    for key in keys:
        try:
            infer_dual_prices(net, costs, priced, prior0, key[0], key[1])
            usable.append(key)
        except InconsistentObservation:
            skipped.extend(ob.agent_id for ob in groups[key])
    if not usable:
        raise NoUsableObservations("every observation was inconsistent with the priced links")
    if skipped:
        logger.warning(
            "%d of %d observations cannot be explained by pricing the "
            "designated links; skipped",
            len(skipped),
            len(observations),
        )
    weights = [sum(ob.weight for ob in groups[k]) for k in usable]

    priors: list[PriceVector] = [prior0]
    converged = False
    gap = float("inf")
    results: list[InverseResult] = []
    for _ in range(max_iter):
        prior = priors[-1]
        results = _solve_groups(
            usable, lambda k: infer_dual_prices(net, costs, priced, prior, k[0], k[1]), jobs
        )
        mean = _weighted_mean(results, weights, priced_ids)
        gap = max(
            abs(res.posterior[lid] - prior[lid]) for res in results for lid in priced_ids
        )
        priors.append(mean)
        if gap < tol:
            converged = True
            break

    per_agent = {
        ob.agent_id: dict(res.posterior)
        for key, res in zip(usable, results)
        for ob in groups[key]
    }
    return FixedPointTrace(
        tuple(priors),
        per_agent,
        len(priors) - 1,
        converged,
        gap,
        tuple(sorted(skipped)),
    )


def online_update(
    state: OnlineState,
    ob: Observation,
    net: Network,
    costs: PriceVector,
    priced: CapacitySpec,
) -> OnlineState:
    """Fold one observation into the online price state.

    The newly arrived agent's inverse problem is solved from the current
    prices and its posterior becomes the new common prior.  An observation
    that cannot be rationalized leaves the prices unchanged and is logged as
    skipped.  A route that is already optimal under the current prices also
    leaves them unchanged (its minimum deviation is zero).
    """

    try:
        result = infer_dual_prices(net, costs, priced, state.prices, ob.path, ob.subnetwork)
        prices = dict(result.posterior)
        entry = OnlineLogEntry(
            state.update_count + 1, ob.agent_id, ob.timestamp, result.objective, prices
        )
    except InconsistentObservation:
        prices = dict(state.prices)
        entry = OnlineLogEntry(
            state.update_count + 1,
            ob.agent_id,
            ob.timestamp,
            float("nan"),
            prices,
            skipped=True,
        )
    return OnlineState(
        prices,
        state.update_count + 1,
        ob.timestamp if ob.timestamp is not None else state.last_timestamp,
        state.log + (entry,),
    )


def run_monitor(
    state: OnlineState,
    observations: Iterable[Observation],
    net: Network,
    costs: PriceVector,
    priced: CapacitySpec,
) -> OnlineState:
    """Replay an observation stream through :func:`online_update`, in order."""

    for ob in observations:
        state = online_update(state, ob, net, costs, priced)
    return state


# ---------------------------------------------------------------------------
# heterogeneity summary
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinkPosteriorStats:
    mean: float
    std: float
    clusters: tuple[tuple[float, int], ...]  # (value, agent count), ascending


def summarize_heterogeneity(trace: FixedPointTrace) -> dict[LinkId, LinkPosteriorStats]:
    """Per-link mean, standard deviation, and value clusters of agent posteriors.

    The per-agent posteriors of a converged run concentrate on a small number
    of distinct values per link (at most one per route alternative); the
    cluster list exposes them exactly, and doubles as simulated draws for
    downstream taste-distribution estimation.
    """

    if not trace.per_agent_posteriors:
        raise DataError("trace carries no per-agent posteriors")
    link_ids = sorted(next(iter(trace.per_agent_posteriors.values())))
    out: dict[LinkId, LinkPosteriorStats] = {}
    n = len(trace.per_agent_posteriors)
    for lid in link_ids:
        values = sorted(p[lid] for p in trace.per_agent_posteriors.values())
        mean = sum(values) / n
        var = sum((v - mean) ** 2 for v in values) / n
        clusters: list[tuple[float, int]] = []
        for v in values:
            if clusters and abs(v - clusters[-1][0]) <= 1e-9:
                clusters[-1] = (clusters[-1][0], clusters[-1][1] + 1)
            else:
                clusters.append((v, 1))
        out[lid] = LinkPosteriorStats(mean, var**0.5, tuple(clusters))
    return out


def write_heterogeneity(
    trace: FixedPointTrace,
    stats_file: FilePath | str,
    histogram_file: FilePath | str,
) -> None:
    stats = summarize_heterogeneity(trace)
    lines = ["link_id,mean,std"]
    for lid, st in sorted(stats.items()):
        lines.append(f"{lid},{st.mean:.9g},{st.std:.9g}")
    FilePath(stats_file).write_text("\n".join(lines) + "\n", encoding="utf-8")
    lines = ["link_id,value,count"]
    for lid, st in sorted(stats.items()):
        for value, count in st.clusters:
            lines.append(f"{lid},{value:.9g},{count}")
    FilePath(histogram_file).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------


def write_trace(trace: FixedPointTrace, directory: FilePath | str) -> None:
    """Write prior_trace.csv, agent_posteriors.csv, and summary.txt."""

    d = FilePath(directory)
    d.mkdir(parents=True, exist_ok=True)
    lines = ["iteration,link_id,prior_value"]
    for n, prior in enumerate(trace.priors):
        for lid in sorted(prior):
            lines.append(f"{n},{lid},{prior[lid]:.9g}")
    (d / "prior_trace.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    lines = ["agent_id,link_id,value"]
    for agent_id in sorted(trace.per_agent_posteriors):
        posterior = trace.per_agent_posteriors[agent_id]
        for lid in sorted(posterior):
            lines.append(f"{agent_id},{lid},{posterior[lid]:.9g}")
    (d / "agent_posteriors.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    summary = [
        f"iterations: {trace.iterations}",
        f"converged: {str(trace.converged).lower()}",
        f"final_gap: {trace.final_gap:.9g}",
        f"skipped_observations: {len(trace.skipped_agents)}",
    ]
    (d / "summary.txt").write_text("\n".join(summary) + "\n", encoding="utf-8")


def save_state(state: OnlineState, path: FilePath | str) -> None:
    payload = {
        "prices": {str(lid): value for lid, value in sorted(state.prices.items())},
        "update_count": state.update_count,
        "last_timestamp": state.last_timestamp,
    }
    FilePath(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def load_state(path: FilePath | str) -> OnlineState:
    try:
        payload = json.loads(FilePath(path).read_text(encoding="utf-8"))
        prices = {int(lid): float(v) for lid, v in payload["prices"].items()}
        return OnlineState(
            prices,
            int(payload.get("update_count", 0)),
            payload.get("last_timestamp"),
        )
    except (OSError, ValueError, KeyError) as exc:
        raise DataError(f"cannot read online state from {path}: {exc}") from None


def write_online_log(state: OnlineState, path: FilePath | str) -> None:
    lines = ["update_index,timestamp,agent_id,objective,link_id,prior_after"]
    for entry in state.log:
        ts = "" if entry.timestamp is None else format(entry.timestamp, "g")
        obj = "skipped" if entry.skipped else format(entry.objective, ".9g")
        for lid in sorted(entry.prices_after):
            lines.append(
                f"{entry.update_index},{ts},{entry.agent_id},{obj},"
                f"{lid},{entry.prices_after[lid]:.9g}"
            )
    FilePath(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
