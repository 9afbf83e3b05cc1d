# Copyright 2026 The embforge Authors
# SPDX-License-Identifier: Apache-2.0

import json
import os
import pathlib
import shutil

import pytest

FIXTURES = pathlib.Path(os.environ.get("EMBFORGE_FIXTURES", pathlib.Path(__file__).parents[1] / "fixtures"))


@pytest.fixture
def fixtures():
    return FIXTURES


@pytest.fixture
def mini(tmp_path):
    """Private copy of the mini fixture, so tests may edit it."""
    dst = tmp_path / "mini"
    shutil.copytree(FIXTURES / "mini", dst)
    return dst


def read_jsonl(path):
    with open(path, encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]
