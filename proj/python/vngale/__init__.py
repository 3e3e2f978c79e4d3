# Copyright 2026 The vngale Authors
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

"""Log-optimal trading paths with certified supporting dual prices."""

import json

from ._core import (
    Problem,
    Solution,
    VngaleError,
    __version__,
    certify,
    growth_table,
    path,
    run_cli,
    solution_json,
    solve,
)


def load_problem(source):
    """Problem from a path, a JSON string or a dict."""
    if isinstance(source, dict):
        return Problem.from_json(json.dumps(source))
    text = str(source)
    if text.lstrip().startswith("{"):
        return Problem.from_json(text)
    return Problem.from_file(text)


__all__ = [
    "Problem",
    "Solution",
    "VngaleError",
    "__version__",
    "certify",
    "growth_table",
    "load_problem",
    "path",
    "run_cli",
    "solution_json",
    "solve",
]
