from __future__ import annotations

import json
import sys
from pathlib import Path

import pytest

TESTS = Path(__file__).parent
sys.path.insert(0, str(TESTS))

from corpus_defs import CORPUS, FIXTURES  # noqa: E402

from typeconf.ir import parse_package  # noqa: E402
from typeconf.scan import Config, run_scan  # noqa: E402


def corpus_path(name: str) -> Path:
    return CORPUS / f"{name}.json"


def load(name: str):
    return parse_package(corpus_path(name).read_text())


def build(doc: dict):
    return parse_package(json.dumps(doc))


def scan(*names: str, **kwargs):
    cfg = Config(inputs=tuple(str(corpus_path(n)) for n in names), **kwargs)
    return run_scan(cfg)


def kinds_and_functions(summary) -> list[tuple[str, str]]:
    return sorted((r.finding.kind.short, r.function) for r in summary.reports)


@pytest.fixture(params=sorted(FIXTURES))
def fixture_name(request):
    return request.param
