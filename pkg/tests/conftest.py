from __future__ import annotations

import shutil
import sys
from datetime import date
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from touristld.domspec import bundled_spec
from touristld.vocabulary import bundled_vocabulary

FIXTURES = Path(__file__).parent / "fixtures"
TODAY = date(2017, 7, 1)


@pytest.fixture(scope="session")
def vocab():
    return bundled_vocabulary()


@pytest.fixture(scope="session")
def spec(vocab):
    return bundled_spec("tourism", vocab)


@pytest.fixture(scope="session")
def hotel_spec(vocab):
    return bundled_spec("hotel", vocab)


@pytest.fixture
def workspace(tmp_path) -> Path:
    """A writable copy of the fixture tree (config, sources, mappings, manual files)."""
    target = tmp_path / "fixtures"
    shutil.copytree(FIXTURES, target, ignore=shutil.ignore_patterns("repo"))
    return target


def build_fixture_repo(root: Path, clock=lambda: TODAY):
    """Run the bundled pipeline config inside ``root`` (a copy of the fixtures)."""
    from touristld.cli import run_pipeline
    from touristld.source import load_pipeline_config

    result = run_pipeline(load_pipeline_config(root / "pipeline.json"), clock=clock)
    assert result.exit_code == 0, result.to_dict()
    return result


@pytest.fixture
def fixture_repo(workspace) -> Path:
    build_fixture_repo(workspace)
    return workspace / "repo"


# acceptance criteria report: (number, title, verdict, detail)
ACCEPTANCE_RESULTS: list[tuple[int, str, str, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, verdict, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"criterion {number:>2} [{verdict}] {title}: {detail}")
