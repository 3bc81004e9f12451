from __future__ import annotations

import json
from pathlib import Path

import pytest

from adintel.gateway import Gateway, MockProvider, ScriptedProvider

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture
def mock_gateway() -> Gateway:
    return Gateway(MockProvider())


def scripted_gateway(responses: list[str], max_retries: int = 2) -> Gateway:
    return Gateway(ScriptedProvider(responses), max_retries=max_retries)


def write_jsonl(path: Path, records: list[dict]) -> Path:
    path.write_text("\n".join(json.dumps(r) for r in records) + "\n", encoding="utf-8")
    return path


def ad_record(brand="Carvia", body="Corporate rides, one invoice.", **overrides) -> dict:
    rec = {
        "brand": brand,
        "body_text": body,
        "headline": "One invoice",
        "media_refs": [],
        "first_seen": "2023-10-01",
        "last_seen": "2023-12-01",
        "platform": "facebook",
    }
    rec.update(overrides)
    return rec
