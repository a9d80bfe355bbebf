"""
Problem files: one JSON document per ProblemSpec.

    {
      "states":      [[0], [1], ...],            # point per state
      "actions":     [[-1], [0], [1]],           # point per action
      "alpha":       0.45,
      "ambiguity":   {"q": 1, "epsilon": 0.1},
      "center":      [[[...], ...], ...],        # [state][action] -> weights
      "true_kernel": [[[...], ...], ...],        # optional, same shape
      "reward":      [[[...], ...], ...]         # [state][action][next_state]
    }

Usage:
    from drmdp.problem_io import dump_problem, load_problem

    problem = load_problem("problems/cointoss.json")
    dump_problem(problem, "copy.json")
"""

import json
import re
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np

from .errors import ParseError
from .mdp_core import (
    ActionSpace,
    AmbiguityConfig,
    ProblemSpec,
    RewardTable,
    StateSpace,
    TransitionKernel,
    build_problem,
)
from .utils import INPUT_SUM_TOL

PathLike = Union[str, Path]

INVALID_JSON = "InvalidJSON"
MISSING_FIELD = "MissingField"
SHAPE = "Shape"
DISTRIBUTION_SUM = "DistributionSum"
TYPE = "Type"

REQUIRED_FIELDS = ("states", "actions", "alpha", "ambiguity", "center", "reward")
FIELD_ORDER = REQUIRED_FIELDS[:5] + ("true_kernel", "reward")


class _Document:
    """Parsed JSON plus the raw text, for line lookups in diagnostics."""

    def __init__(self, text: str, data: Dict[str, Any]):
        self.text = text
        self.data = data

    def line_of(self, name: str) -> Optional[int]:
        match = re.search(rf'"{re.escape(name)}"\s*:', self.text)
        if match is None:
            return None
        return self.text.count("\n", 0, match.start()) + 1

    def fail(self, kind: str, message: str, field: str) -> ParseError:
        top = re.split(r"[.\[]", field, maxsplit=1)[0]
        return ParseError(kind, message, field=field, line=self.line_of(top))

    def require(self, name: str) -> Any:
        if name not in self.data:
            raise ParseError(MISSING_FIELD, "required field is absent", field=name)
        return self.data[name]


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _check_numbers(doc: _Document, value: Any, field: str) -> None:
    if isinstance(value, list):
        for index, item in enumerate(value):
            _check_numbers(doc, item, f"{field}[{index}]")
    elif not _is_number(value):
        raise doc.fail(TYPE, f"expected a number, got {type(value).__name__}", field)


def _array(doc: _Document, value: Any, field: str, ndim: int) -> np.ndarray:
    if not isinstance(value, list):
        raise doc.fail(TYPE, f"expected an array, got {type(value).__name__}", field)
    _check_numbers(doc, value, field)
    try:
        array = np.array(value, dtype=float)
    except ValueError as exc:
        raise doc.fail(SHAPE, "array is ragged", field) from exc
    if array.ndim != ndim:
        raise doc.fail(
            SHAPE, f"expected {ndim} nested levels, got shape {array.shape}", field
        )
    return array


def _points(doc: _Document, name: str) -> np.ndarray:
    value = doc.require(name)
    if isinstance(value, list) and value and all(_is_number(v) for v in value):
        value = [[v] for v in value]
    points = _array(doc, value, name, ndim=2)
    if points.shape[0] == 0:
        raise doc.fail(SHAPE, "point set is empty", name)
    return points


def _number(doc: _Document, value: Any, field: str) -> float:
    if not _is_number(value):
        raise doc.fail(TYPE, f"expected a number, got {type(value).__name__}", field)
    return float(value)


def _ambiguity(doc: _Document) -> AmbiguityConfig:
    value = doc.require("ambiguity")
    if not isinstance(value, dict):
        raise doc.fail(TYPE, "expected an object with q and epsilon", "ambiguity")
    for key in ("q", "epsilon"):
        if key not in value:
            raise ParseError(
                MISSING_FIELD,
                "required field is absent",
                field=f"ambiguity.{key}",
                line=doc.line_of("ambiguity"),
            )
    q = value["q"]
    if not _is_number(q) or not float(q).is_integer():
        raise doc.fail(TYPE, f"q must be an integer, got {q!r}", "ambiguity.q")
    epsilon = _number(doc, value["epsilon"], "ambiguity.epsilon")
    return AmbiguityConfig(q=int(q), epsilon=epsilon)


def _kernel(
    doc: _Document, name: str, n_states: int, n_actions: int
) -> TransitionKernel:
    table = _array(doc, doc.data[name], name, ndim=3)
    if table.shape != (n_states, n_actions, n_states):
        raise doc.fail(
            SHAPE,
            f"expected shape {(n_states, n_actions, n_states)}, got {table.shape}",
            name,
        )
    sums = table.sum(axis=2)
    bad = np.argwhere(np.abs(sums - 1.0) > INPUT_SUM_TOL)
    if bad.size:
        x, a = (int(i) for i in bad[0])
        raise doc.fail(
            DISTRIBUTION_SUM,
            f"weights sum to {sums[x, a]!r}, expected 1",
            f"{name}[{x}][{a}]",
        )
    return TransitionKernel(table)


def parse_problem(text: str) -> ProblemSpec:
    """
    Build a ProblemSpec from the text of a problem file.

    Raises:
        ParseError: malformed document (kind, field and line when known)
        ValidationError: well-formed data that violates a model invariant
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(INVALID_JSON, exc.msg, line=exc.lineno) from exc
    if not isinstance(data, dict):
        raise ParseError(TYPE, "top level must be a JSON object", line=1)
    doc = _Document(text, data)

    for name in REQUIRED_FIELDS:
        doc.require(name)

    states = StateSpace(_points(doc, "states"))
    actions = ActionSpace(_points(doc, "actions"))
    alpha = _number(doc, data["alpha"], "alpha")
    ambiguity = _ambiguity(doc)
    center = _kernel(doc, "center", states.size, actions.size)
    true_kernel = None
    if data.get("true_kernel") is not None:
        true_kernel = _kernel(doc, "true_kernel", states.size, actions.size)

    rewards = _array(doc, data["reward"], "reward", ndim=3)
    expected = (states.size, actions.size, states.size)
    if rewards.shape != expected:
        raise doc.fail(
            SHAPE, f"expected shape {expected}, got {rewards.shape}", "reward"
        )

    return build_problem(
        states,
        actions,
        center,
        true_kernel,
        RewardTable(rewards),
        alpha,
        ambiguity,
    )


def load_problem(path: PathLike) -> ProblemSpec:
    """
    Read and validate a problem file.

    Raises:
        RuntimeError: the file could not be read
        ParseError / ValidationError: see parse_problem
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise RuntimeError(f"Could not read file {path}") from e
    return parse_problem(text)


def problem_to_dict(problem: ProblemSpec) -> Dict[str, Any]:
    data: Dict[str, Any] = {
        "states": problem.states.points.tolist(),
        "actions": problem.actions.points.tolist(),
        "alpha": problem.alpha,
        "ambiguity": {
            "q": problem.ambiguity.q,
            "epsilon": problem.ambiguity.epsilon,
        },
        "center": problem.center.table.tolist(),
        "reward": problem.reward.values.tolist(),
    }
    if problem.true_kernel is not None:
        data["true_kernel"] = problem.true_kernel.table.tolist()
    return data


def dump_problem(problem: ProblemSpec, path: PathLike) -> None:
    """
    Write `problem` as a problem file, one top-level field per line.
    load_problem(path) gives back an equal ProblemSpec.
    """
    data = problem_to_dict(problem)
    lines = [
        f"  {json.dumps(name)}: {json.dumps(data[name])}"
        for name in FIELD_ORDER
        if name in data
    ]
    try:
        Path(path).write_text("{\n" + ",\n".join(lines) + "\n}\n", encoding="utf-8")
    except OSError as e:
        raise RuntimeError(f"Could not write file {path}") from e
