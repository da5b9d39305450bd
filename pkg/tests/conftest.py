"""Shared fixtures: the benchmark networks used across the suite."""

from pathlib import Path

import pytest

from netinverse.network import (
    CapacitySpec,
    DemandEntry,
    DemandTable,
    Link,
    Network,
    load_network,
)

DATA_DIR = Path(__file__).resolve().parent.parent / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def nd_net() -> Network:
    """13-node, 19-link benchmark network with 25 enumerable paths."""

    return load_network(DATA_DIR / "nd_links.csv")


@pytest.fixture(scope="session")
def nd_demand() -> DemandTable:
    return DemandTable(
        (
            DemandEntry("1", "2", 400.0),
            DemandEntry("4", "2", 600.0),
            DemandEntry("1", "3", 800.0),
            DemandEntry("4", "3", 200.0),
        )
    )


@pytest.fixture(scope="session")
def caps_800() -> CapacitySpec:
    return CapacitySpec({1: 400.0, 7: 800.0})


@pytest.fixture(scope="session")
def caps_500() -> CapacitySpec:
    return CapacitySpec({1: 400.0, 7: 500.0})


@pytest.fixture(scope="session")
def nd_priced() -> CapacitySpec:
    return CapacitySpec.priced_only([1, 7])


@pytest.fixture(scope="session")
def toy_net() -> Network:
    """Three parallel routes between one OD pair, costs 1 / 2 / 4."""

    return Network(
        [Link(1, "O", "D", 1.0), Link(2, "O", "D", 2.0), Link(3, "O", "D", 4.0)]
    )


@pytest.fixture(scope="session")
def toy_priced() -> CapacitySpec:
    return CapacitySpec.priced_only([1, 2])


@pytest.fixture(scope="session")
def fourlink_net() -> Network:
    """Diamond network with a crossing link: routes (1,4), (2,5), (1,3,5)."""

    return load_network(DATA_DIR / "fourlink_links.csv")


@pytest.fixture(scope="session")
def queens_net() -> Network:
    return load_network(DATA_DIR / "queens_links.csv")
