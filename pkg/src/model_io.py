"""JSON model files.

A model is ``{"variables": [...], "decision_order": [...]}``. Each variable
has ``name``, ``kind``, ``states`` and ``parents`` (by name); chance and
utility variables also carry a flat ``table`` in row-major order over
``parents + [self]`` (chance) or ``parents`` (utility). The document is
checked by the pydantic models below before any diagram is built.
"""

import json
import math
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from .errors import ModelFormatError
from .influence_diagram import InfluenceDiagram, Variable, VariableKind
from .log import get_logger

logger = get_logger()


class VariableEntry(BaseModel):
    name: str
    kind: VariableKind
    states: List[str] = Field(default_factory=list, description="State labels, in index order")
    parents: List[str] = Field(default_factory=list, description="Parent names, in table order")
    table: Optional[List[float]] = Field(
        default=None, description="Row-major CPT or utility table; absent for decisions"
    )

    @field_validator("states", mode="before")
    @classmethod
    def labels_as_text(cls, value):
        if isinstance(value, (list, tuple)):
            return [str(s) for s in value]
        return value

    @model_validator(mode="after")
    def table_matches_kind(self) -> "VariableEntry":
        if self.kind is not VariableKind.DECISION and self.table is None:
            raise ValueError(f"variable '{self.name}': missing field 'table'")
        return self


class ModelDocument(BaseModel):
    variables: List[VariableEntry]
    decision_order: Optional[List[str]] = Field(
        default=None, description="Decision names; file order of the decisions when absent"
    )

    @model_validator(mode="after")
    def names_resolve(self) -> "ModelDocument":
        """
        Validates:
        1. Variable names are unique.
        2. Parents and the decision order name existing variables.
        3. Every table has one entry per parent (and own) state combination.
        """
        by_name: Dict[str, VariableEntry] = {}
        for entry in self.variables:
            if entry.name in by_name:
                raise ValueError(f"duplicate name '{entry.name}'")
            by_name[entry.name] = entry

        for entry in self.variables:
            unknown = [p for p in entry.parents if p not in by_name]
            if unknown:
                raise ValueError(
                    f"variable '{entry.name}': field 'parents' names unknown variables {unknown}"
                )
            if entry.kind is VariableKind.DECISION:
                continue
            expected = math.prod(len(by_name[p].states) for p in entry.parents)
            if entry.kind is VariableKind.CHANCE:
                expected *= len(entry.states)
            if len(entry.table) != expected:
                raise ValueError(
                    f"variable '{entry.name}': field 'table' has {len(entry.table)} entries, "
                    f"expected {expected}"
                )

        unknown = [name for name in self.decision_order or [] if name not in by_name]
        if unknown:
            raise ValueError(f"field 'decision_order' names unknown variables {unknown}")
        return self

    def to_diagram(self) -> InfluenceDiagram:
        ids = {entry.name: position for position, entry in enumerate(self.variables)}
        variables, cpts, utilities = [], {}, {}
        for position, entry in enumerate(self.variables):
            parents = tuple(ids[p] for p in entry.parents)
            states = tuple(entry.states)
            variables.append(Variable(position, entry.name, entry.kind, states, parents))
            if entry.kind is VariableKind.DECISION:
                continue
            shape = tuple(len(self.variables[p].states) for p in parents)
            if entry.kind is VariableKind.CHANCE:
                shape += (len(states),)
                cpts[position] = np.asarray(entry.table, dtype=float).reshape(shape)
            else:
                utilities[position] = np.asarray(entry.table, dtype=float).reshape(shape)

        order = self.decision_order
        if order is None:
            order = [e.name for e in self.variables if e.kind is VariableKind.DECISION]
        return InfluenceDiagram(tuple(variables), cpts, utilities, tuple(ids[n] for n in order))


def _location(loc) -> str:
    text = ""
    for part in loc:
        if isinstance(part, int):
            text += f"[{part}]"
        else:
            text += f".{part}" if text else str(part)
    return text or "model"


def _describe(error: Dict[str, Any]) -> str:
    """One pydantic error as ``location: problem``, naming the offending field."""
    loc = error["loc"]
    if error["type"] == "missing":
        return f"{_location(loc[:-1])}: missing field '{loc[-1]}'"
    if error["type"] == "enum":
        return f"{_location(loc)}: unknown kind '{error['input']}'"
    message = error["msg"]
    if message.startswith("Value error, "):
        message = message[len("Value error, ") :]
    return f"{_location(loc)}: {message}"


def diagram_from_dict(data: Dict[str, Any]) -> InfluenceDiagram:
    """Build a diagram from a parsed model document."""
    try:
        document = ModelDocument.model_validate(data)
    except ValidationError as exc:
        raise ModelFormatError("; ".join(_describe(e) for e in exc.errors())) from None
    return document.to_diagram()


def diagram_to_dict(diagram: InfluenceDiagram) -> Dict[str, Any]:
    entries = []
    for var in diagram.variables:
        table = None
        if var.kind is VariableKind.CHANCE:
            table = diagram.cpts[var.id].ravel().tolist()
        elif var.kind is VariableKind.UTILITY:
            table = diagram.utilities[var.id].ravel().tolist()
        entries.append(
            VariableEntry(
                name=var.name,
                kind=var.kind,
                states=list(var.states),
                parents=[diagram.variables[p].name for p in var.parents],
                table=table,
            )
        )
    order = [diagram.variables[d].name for d in diagram.decision_order]
    document = ModelDocument(variables=entries, decision_order=order)
    return document.model_dump(mode="json", exclude_none=True)


def load_model(path: str) -> InfluenceDiagram:
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    except OSError as exc:
        raise ModelFormatError(f"cannot read model {path}: {exc}") from exc
    diagram = diagram_from_dict(data)
    logger.debug(f"Loaded {len(diagram.variables)} variables from {path}")
    return diagram


def dump_model(diagram: InfluenceDiagram, path: str) -> None:
    with open(path, "w") as f:
        json.dump(diagram_to_dict(diagram), f, indent=2)
    logger.info(f"Wrote model with {len(diagram.variables)} variables to {path}")
