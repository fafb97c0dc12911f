"""Shared fixtures: toy-dataset paths and cached end-to-end runs.

The two full engine runs (perfect workers and 25%-error workers) are
session-scoped because several test modules assert different facets of
the same run; re-running the pipeline per test would triple suite time
without adding coverage.
"""

import json
from pathlib import Path

import pytest

from remp.engine import EngineConfig, run_pipeline

ROOT = Path(__file__).resolve().parent.parent
TOY = ROOT / "data" / "toy"


def toy_config(**overrides) -> EngineConfig:
    base = dict(
        kb1_attrs=str(TOY / "kb1_attrs.tsv"),
        kb1_rels=str(TOY / "kb1_rels.tsv"),
        kb2_attrs=str(TOY / "kb2_attrs.tsv"),
        kb2_rels=str(TOY / "kb2_rels.tsv"),
        gold=str(TOY / "gold.tsv"),
        budget=40,
        seed=0,
    )
    base.update(overrides)
    return EngineConfig(**base)


@pytest.fixture(scope="session")
def toy_manifest() -> dict:
    with open(TOY / "manifest.json", encoding="utf-8") as fh:
        return json.load(fh)


@pytest.fixture(scope="session")
def toy_run_err0():
    return run_pipeline(toy_config(error_rate=0.0))


@pytest.fixture(scope="session")
def toy_run_err25():
    return run_pipeline(toy_config(error_rate=0.25))


@pytest.fixture(scope="session")
def toy_engine_prepared():
    """Engine loaded and prepared but not yet run; read-only for tests
    that only need KBs, candidate sets, or snapshot endpoints."""
    from remp.engine import Engine

    eng = Engine(toy_config())
    eng.load()
    eng.prepare()
    return eng


@pytest.fixture(scope="session")
def toy_pruning_curve():
    """(k, pair completeness of retained set, reduction ratio) for the
    pruning cutoffs the retention criterion is stated over."""
    from remp.engine import Engine, pair_completeness

    points = []
    for k in (1, 2, 4, 8):
        eng = Engine(toy_config(k=k))
        eng.load()
        eng.prepare()
        pc = pair_completeness(eng.m_rd, eng.gold)
        rr = 1.0 - len(eng.m_rd) / len(eng.m_c)
        points.append((k, pc, rr))
    return points
