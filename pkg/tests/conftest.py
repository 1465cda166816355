from __future__ import annotations

import pytest

import criteria
from lazyfst.harness import build_graphs, load_config
from lazyfst.deskdata import write_desk_data


@pytest.fixture(scope="session")
def desk_root(tmp_path_factory):
    root = tmp_path_factory.mktemp("desk")
    write_desk_data(root)
    return root


@pytest.fixture(scope="session")
def desk_cfg(desk_root):
    return load_config(desk_root / "desk.json")


@pytest.fixture(scope="session")
def desk_build(desk_cfg):
    return build_graphs(desk_cfg)


def pytest_terminal_summary(terminalreporter):
    if criteria.LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in criteria.LINES:
            terminalreporter.write_line(line)
