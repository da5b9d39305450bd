"""Per-agent inverse shortest-path problems.

Two variants are provided.  :func:`infer_link_costs` finds the link-cost
vector nearest (in L1) to a common prior under which an observed route is a
minimum-cost route.  :func:`infer_dual_prices` does the same for nonnegative
surcharge prices on a designated subset of links, holding base costs fixed.

Both are linear programs over node potentials ``y`` (free), per-link
decrease variables ``e`` and increase variables ``f`` (nonnegative):
potentials are feasible when ``y[head] - y[tail]`` never exceeds the
adjusted cost of a link, and the observed route is forced to optimality by
requiring its adjusted cost to equal the potential difference between its
endpoints.

Alternative optima are pervasive (any route made optimal is typically made
*tied*), so a deterministic representative matters.  A second solve pins it
lexicographically: among all minimum-deviation solutions, the cost variant
selects the one with the least total increase (perturbations stay on the
observed route), while the price variant selects the one with the least
total decrease (existing prices are preserved and competing routes are
priced up).  Remaining ties are settled by the LP kernel's deterministic
pivoting.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DataError, InconsistentObservation, SolverError
from .network import (
    CapacitySpec,
    LinkId,
    Network,
    NodeId,
    Path,
    PriceVector,
    path_cost,
    validate_path,
)
from .simplex import LinearProgram, Status, solve

_SNAP_TOL = 1e-9


@dataclass(frozen=True)
class InverseResult:
    """Outcome of one agent's inverse problem.

    ``posterior`` covers the adjustable link set (all links for the cost
    variant, the priced links for the price variant); ``objective`` is the
    total L1 deviation from the prior; ``node_potentials`` are the shortest
    path potentials certifying optimality of the observed route.
    """

    posterior: PriceVector
    objective: float
    node_potentials: dict[NodeId, float]


def _restrict(net: Network, subnetwork: frozenset[LinkId] | None):
    links = [l for l in net.links if subnetwork is None or l.id in subnetwork]
    if not links:
        raise DataError("empty subnetwork")
    nodes = sorted({l.tail for l in links} | {l.head for l in links})
    return links, nodes


def _snap(value: float) -> float:
    return 0.0 if abs(value) < _SNAP_TOL else value


def infer_link_costs(
    net: Network,
    prior: PriceVector,
    observed: Path,
    subnetwork: frozenset[LinkId] | None = None,
) -> InverseResult:
    """L1-nearest nonnegative cost vector to ``prior`` rationalizing ``observed``.

    The observed route need only tie the optimum; strict preference is not
    required (and is unattainable at an L1 minimum).  This problem is always
    feasible, because costs along the observed route can be driven to zero.
    """

    validate_path(net, observed)
    links, nodes = _restrict(net, subnetwork)
    for link in links:
        if link.id not in prior:
            raise DataError(f"prior has no entry for link {link.id}")
        if prior[link.id] < 0:
            raise DataError(f"prior cost for link {link.id} is negative")

    lp = LinearProgram()
    e_var: dict[LinkId, int] = {}
    f_var: dict[LinkId, int] = {}
    for link in links:
        e_var[link.id] = lp.add_variable(f"e[{link.id}]", cost=1.0)
        f_var[link.id] = lp.add_variable(f"f[{link.id}]", cost=1.0)
    y_var = {n: lp.add_variable(f"y[{n}]", lower=float("-inf")) for n in nodes}

    for link in links:
        # y[head] - y[tail] <= prior - e + f  (potential feasibility)
        lp.add_constraint(
            {
                y_var[link.head]: 1.0,
                y_var[link.tail]: -1.0,
                e_var[link.id]: 1.0,
                f_var[link.id]: -1.0,
            },
            "<=",
            prior[link.id],
            name=f"feas[{link.id}]",
        )
        # posterior stays nonnegative: e - f <= prior
        lp.add_constraint(
            {e_var[link.id]: 1.0, f_var[link.id]: -1.0},
            "<=",
            prior[link.id],
            name=f"nonneg[{link.id}]",
        )
    # observed route attains the potential difference (optimality)
    coeffs: dict[int, float] = {
        y_var[observed.destination]: 1.0,
        y_var[observed.origin]: -1.0,
    }
    for lid in observed.links:
        coeffs[e_var[lid]] = coeffs.get(e_var[lid], 0.0) + 1.0
        coeffs[f_var[lid]] = coeffs.get(f_var[lid], 0.0) - 1.0
    lp.add_constraint(coeffs, "=", path_cost(net, prior, observed), name="tight")

    deviation = [e_var[l.id] for l in links] + [f_var[l.id] for l in links]
    solution = _lexicographic_solve(lp, deviation, secondary=[f_var[l.id] for l in links])
    if solution.status is not Status.OPTIMAL:
        raise SolverError(f"cost inverse failed unexpectedly: {solution.status.value}")

    posterior = {
        l.id: _snap(prior[l.id] - solution.primal[f"e[{l.id}]"] + solution.primal[f"f[{l.id}]"])
        for l in links
    }
    potentials = {n: solution.primal[f"y[{n}]"] for n in nodes}
    return InverseResult(posterior, _snap(solution.objective), potentials)


def infer_dual_prices(
    net: Network,
    costs: PriceVector,
    priced: CapacitySpec,
    prior: PriceVector,
    observed: Path,
    subnetwork: frozenset[LinkId] | None = None,
) -> InverseResult:
    """L1-nearest nonnegative prices on the priced links rationalizing ``observed``.

    Base costs are fixed and known; only the surcharges on the priced links
    move.  Raises :class:`InconsistentObservation` when no nonnegative
    pricing can make the observed route optimal (for example, a route that
    is strictly longer than an alternative sharing no priced link).
    """

    validate_path(net, observed)
    priced.validate_against(net)
    links, nodes = _restrict(net, subnetwork)
    link_ids = {l.id for l in links}
    priced_ids = [lid for lid in priced.priced_links() if lid in link_ids]
    for lid in priced_ids:
        if lid not in prior:
            raise DataError(f"prior has no entry for priced link {lid}")
        if prior[lid] < 0:
            raise DataError(f"prior price for link {lid} is negative")
    for link in links:
        if link.id not in costs:
            raise DataError(f"no base cost for link {link.id}")

    lp = LinearProgram()
    e_var: dict[LinkId, int] = {}
    f_var: dict[LinkId, int] = {}
    for lid in priced_ids:
        e_var[lid] = lp.add_variable(f"e[{lid}]", cost=1.0)
        f_var[lid] = lp.add_variable(f"f[{lid}]", cost=1.0)
    y_var = {n: lp.add_variable(f"y[{n}]", lower=float("-inf")) for n in nodes}

    for link in links:
        coeffs = {y_var[link.head]: 1.0, y_var[link.tail]: -1.0}
        rhs = costs[link.id]
        if link.id in e_var:
            coeffs[e_var[link.id]] = 1.0
            coeffs[f_var[link.id]] = -1.0
            rhs += prior[link.id]
        lp.add_constraint(coeffs, "<=", rhs, name=f"feas[{link.id}]")
    for lid in priced_ids:
        # price stays nonnegative: e - f <= prior
        lp.add_constraint(
            {e_var[lid]: 1.0, f_var[lid]: -1.0}, "<=", prior[lid], name=f"nonneg[{lid}]"
        )
    coeffs = {y_var[observed.destination]: 1.0, y_var[observed.origin]: -1.0}
    rhs = path_cost(net, costs, observed)
    for lid in observed.links:
        if lid in e_var:
            coeffs[e_var[lid]] = coeffs.get(e_var[lid], 0.0) + 1.0
            coeffs[f_var[lid]] = coeffs.get(f_var[lid], 0.0) - 1.0
            rhs += prior[lid]
    lp.add_constraint(coeffs, "=", rhs, name="tight")

    deviation = [e_var[lid] for lid in priced_ids] + [f_var[lid] for lid in priced_ids]
    solution = _lexicographic_solve(lp, deviation, secondary=[e_var[lid] for lid in priced_ids])
    if solution.status is Status.INFEASIBLE:
        raise InconsistentObservation(
            f"route {observed.links} cannot be rationalized by pricing links {priced_ids}"
        )
    if solution.status is not Status.OPTIMAL:
        raise SolverError(f"price inverse failed: {solution.status.value}")

    posterior = {
        lid: _snap(prior[lid] - solution.primal[f"e[{lid}]"] + solution.primal[f"f[{lid}]"])
        for lid in priced_ids
    }
    potentials = {n: solution.primal[f"y[{n}]"] for n in nodes}
    return InverseResult(posterior, _snap(solution.objective), potentials)


def _lexicographic_solve(lp: LinearProgram, deviation: list[int], secondary: list[int]):
    """Minimize total deviation, then the given subset of deviation variables.

    The second stage restricts to the first stage's optimal set (total
    deviation pinned at its minimum) and minimizes the secondary sum alone,
    selecting a reproducible representative among alternative optima.
    Mutates ``lp``; callers construct a fresh program per solve.
    """

    first = solve(lp)
    if first.status is not Status.OPTIMAL or not secondary:
        return first
    lp.add_constraint({j: 1.0 for j in deviation}, "<=", first.objective, name="stage1")
    lp.set_objective({j: 1.0 for j in secondary})
    second = solve(lp)
    if second.status is not Status.OPTIMAL:
        return first
    # report the first-stage objective: the deviation metric, not the tie-break
    return type(second)(
        status=second.status,
        objective=sum(second.primal[lp.variable_name(j)] for j in deviation),
        primal=second.primal,
        duals=second.duals,
        dual_objective=second.dual_objective,
        pivots=first.pivots + second.pivots,
    )
