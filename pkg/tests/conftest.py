"""Shared fixtures: tiny corpus files and a small deterministic world."""

from __future__ import annotations

import json

import pytest

from ptdiscovery.simulate import WorldConfig, generate_world, prepare_pipeline


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
    return path


@pytest.fixture
def catalog_file(tmp_path):
    def make(records, name="catalog.jsonl"):
        return write_jsonl(tmp_path / name, records)

    return make


@pytest.fixture
def query_file(tmp_path):
    def make(records, name="queries.jsonl"):
        return write_jsonl(tmp_path / name, records)

    return make


SMALL_WORLD_CFG = WorldConfig(
    n_true_pts=60,
    n_v1_pts=12,
    n_noise_candidates=300,
    n_skus=500,
    n_queries=320,
    seed=1234,
)


@pytest.fixture(scope="session")
def small_world():
    return generate_world(SMALL_WORLD_CFG)


@pytest.fixture(scope="session")
def small_pipeline(small_world):
    return prepare_pipeline(small_world)
