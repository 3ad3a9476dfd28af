"""
Shared fixtures: seeded chains and traced oracle runs
"""

import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from app.models.vm import OracleMachine
from app.services.oracle import build_chain_oracle
from app.services.revsim import run_bennett


def oracle_run(k: int, n: int, width: int = 6, seed: int = 11):
    """Bennett(k, n) over a seeded chain of k^n nodes, with its chain"""
    graph, chain = build_chain_oracle(width, k**n, seed)
    run = run_bennett(OracleMachine(width), 0, k, n, oracle=graph, seed=seed)
    return run, chain


@pytest.fixture
def bennett_2_1():
    return oracle_run(2, 1)


@pytest.fixture
def bennett_2_2():
    return oracle_run(2, 2)


@pytest.fixture
def bennett_2_3():
    return oracle_run(2, 3)
