# Copyright 2026 The fewbase Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Few-shot feature adaptation: episodes, adapters, class selection, extractor libraries."""

from __future__ import annotations

import json
import os
from typing import Any, Mapping

from ._fewbase import *  # noqa: F401,F403
from ._fewbase import FewbaseError, _generate_universe, _run_workflow, _save_universe

__all__ = [name for name in dir() if not name.startswith("_")]


def generate_universe(config: Mapping[str, Any] | None = None, **overrides: Any):
    """Generates a synthetic universe from config keys (dim, domains, seed, ...)."""
    merged = dict(config or {})
    merged.update(overrides)
    return _generate_universe(json.dumps(merged))


def save_universe(universe, directory: str | os.PathLike, config: Mapping[str, Any] | None = None) -> None:
    """Writes the universe as feature files plus a dataset manifest."""
    _save_universe(universe, json.dumps(dict(config or {})), os.fspath(directory))


def run_workflow(config: Mapping[str, Any], relative_to: str | os.PathLike = "") -> dict:
    """Runs one workflow from a run config; returns summary, csv and exit code."""
    summary, csv, exit_code = _run_workflow(json.dumps(dict(config)), os.fspath(relative_to))
    return {"summary": json.loads(summary), "csv": csv, "exit_code": exit_code}


__all__ += ["generate_universe", "save_universe", "run_workflow"]
