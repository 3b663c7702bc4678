from __future__ import annotations

from pathlib import Path
from typing import Callable

import pytest

from mqopt.instances import example1_workload
from mqopt.setfn import FunctionOracle, GroundSet
from mqopt.workload import WorkloadSpec, dump_workload

# f(∅)=0, f(a)=3, f(b)=-1, f(ab)=1
WP_TABLE = {frozenset(): 0.0, frozenset({0}): 3.0, frozenset({1}): -1.0, frozenset({0, 1}): 1.0}


@pytest.fixture
def wp_oracle() -> FunctionOracle:
    return FunctionOracle(GroundSet(2, ("a", "b")), WP_TABLE.__getitem__)


@pytest.fixture
def example1() -> WorkloadSpec:
    return example1_workload()


@pytest.fixture
def write_workload(tmp_path: Path) -> Callable[..., Path]:
    def write(spec: WorkloadSpec, name: str = "workload.json") -> Path:
        path = tmp_path / name
        path.write_text(dump_workload(spec))
        return path

    return write


@pytest.fixture
def example1_path(write_workload: Callable[..., Path], example1: WorkloadSpec) -> Path:
    return write_workload(example1)
