import time

import pytest

from genealogy_miner.evaluation import SyntheticSpec, generate_synthetic
from genealogy_miner.model import Shifu2Config
from genealogy_miner.pipeline import benchmark_config, dataset_samples, prepare_dataset

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def acceptance():
    """``record(name, passed, detail)`` logs one pass/fail line for the summary."""

    def record(name, passed, detail=""):
        line = f"{'PASS' if passed else 'FAIL'}  {name}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


@pytest.fixture(scope="session")
def small_corpus():
    return generate_synthetic(SyntheticSpec(n_advisees=60, seed=5))


@pytest.fixture(scope="session")
def small_dataset(small_corpus):
    records, truth = small_corpus
    return prepare_dataset(records, truth, seed=5)


@pytest.fixture(scope="session")
def small_samples(small_dataset):
    return dataset_samples(small_dataset, Shifu2Config(pool_dim=20))


@pytest.fixture(scope="session")
def benchmark():
    """Default synthetic corpus (500 advisees, 8 collaborators each) featurized for the benchmark config."""
    start = time.perf_counter()
    config = benchmark_config(seed=0)
    records, truth = generate_synthetic(SyntheticSpec(seed=0))
    dataset = prepare_dataset(records, truth, seed=0)
    samples = dataset_samples(dataset, config)
    return {"config": config, "dataset": dataset, "samples": samples, "truth": truth,
            "prep_seconds": time.perf_counter() - start}


@pytest.fixture(scope="session")
def benchmark_full(benchmark):
    from genealogy_miner.pipeline import run_experiment

    start = time.perf_counter()
    result = run_experiment(benchmark["samples"], benchmark["config"])
    return result, time.perf_counter() - start
