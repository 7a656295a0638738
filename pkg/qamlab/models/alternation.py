from enum import Enum
from fractions import Fraction
from typing import Any, Hashable, NamedTuple, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from qamlab.models.base import ExactModel
from qamlab.models.machines import CENT, DOLLAR, StateLabel
from qamlab.models.rational import ExactRational

# Label of the implicit restart outcome when it is bound to a branch
RESTART = "restart"


class NodeKind(str, Enum):
    EXISTENTIAL = "existential"
    UNIVERSAL = "universal"
    ACCEPT = "accept"
    REJECT = "reject"

    @property
    def halting(self) -> bool:
        return self in (NodeKind.ACCEPT, NodeKind.REJECT)


class QConfig(NamedTuple):
    """A classical snapshot and the unconditional register."""

    classical: Hashable
    register: tuple[Fraction, ...]


class Leaf(NamedTuple):
    """Classical part of a halting configuration that has no machine state of its own."""

    accept: bool
    reason: str


class Branch(NamedTuple):
    label: str
    classical: Hashable


# Table-driven q-1AFA


class HeadMove(str, Enum):
    R = "R"
    S = "S"


class QTransition(BaseModel):
    model_config = ConfigDict(frozen=True)

    state: str
    move: HeadMove


class OperatorBinding(BaseModel):
    """Operation elements of one universal (state, symbol) pair.

    Element i decides branch i of the pair. `restart` names the halting state
    that receives the residual mass when the elements are not complete.
    """

    model_config = ConfigDict(frozen=True)

    elements: tuple[tuple[str, tuple[tuple[ExactRational, ...], ...]], ...]
    restart: Optional[str] = None


class QMachineSpec(BaseModel):
    """
    A one-way q-alternating finite automaton.

    The head reads ¢ x $ left to right and either moves right or stays;
    universal (state, symbol) pairs carry an operator binding with exactly one
    element per classical branch.
    """

    model_config = ConfigDict(frozen=True)

    name: str = ""
    states: tuple[str, ...]
    input_alphabet: tuple[str, ...]
    start: str
    accept: str
    reject: str
    labels: dict[str, StateLabel] = Field(default_factory=dict)
    dim: int = Field(ge=1)
    initial: tuple[ExactRational, ...]
    delta: dict[tuple[str, str], tuple[QTransition, ...]] = Field(default_factory=dict)
    superops: dict[tuple[str, str], OperatorBinding] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_machine(self) -> "QMachineSpec":
        states = set(self.states)
        if len(states) != len(self.states):
            raise ValueError("States must be listed once each")
        special = (self.start, self.accept, self.reject)
        if len(set(special)) != 3 or not set(special) <= states:
            raise ValueError("start, accept and reject must be three distinct states")
        if {CENT, DOLLAR} & set(self.input_alphabet):
            raise ValueError("¢ and $ are the end markers and cannot be input symbols")
        if len(self.initial) != self.dim:
            raise ValueError(f"Initial register has {len(self.initial)} entries, dim is {self.dim}")
        if all(v == 0 for v in self.initial):
            raise ValueError("The initial register must be nonzero")

        tape = set(self.input_alphabet) | {CENT, DOLLAR}
        for state in self.states:
            if state not in (self.accept, self.reject) and state not in self.labels:
                raise ValueError(f"State {state} has no label")

        for (state, symbol), transitions in self.delta.items():
            if state not in states or symbol not in tape:
                raise ValueError(f"delta entry ({state}, {symbol}) uses unknown symbols")
            if state in (self.accept, self.reject):
                raise ValueError(f"Halting state {state} cannot have transitions")
            if not transitions:
                raise ValueError(f"delta({state}, {symbol}) is empty")
            if any(t.state not in states for t in transitions):
                raise ValueError(f"delta({state}, {symbol}) targets an unknown state")
            if symbol == DOLLAR and any(t.move is HeadMove.R for t in transitions):
                raise ValueError(f"delta({state}, $) would move past the right end marker")
            label = self.labels[state]
            if label is StateLabel.DETERMINISTIC and len(transitions) != 1:
                raise ValueError(f"Deterministic delta({state}, {symbol}) must have one transition")
            if label is StateLabel.UNIVERSAL:
                binding = self.superops.get((state, symbol))
                if binding is None:
                    raise ValueError(f"Universal pair ({state}, {symbol}) has no superop block")
                if len(binding.elements) != len(transitions):
                    raise ValueError(
                        f"superoperator/branch-count mismatch at ({state}, {symbol}): "
                        f"{len(binding.elements)} elements for {len(transitions)} branches"
                    )

        for (state, symbol), binding in self.superops.items():
            if self.labels.get(state) is not StateLabel.UNIVERSAL:
                raise ValueError(f"superop block for non-universal state {state}")
            if (state, symbol) not in self.delta:
                raise ValueError(f"superop block for ({state}, {symbol}) has no transitions")
            if binding.restart is not None and binding.restart not in (self.accept, self.reject):
                raise ValueError(f"Restart outcome of ({state}, {symbol}) must halt")
            for label, rows in binding.elements:
                if label == RESTART:
                    raise ValueError(f"Element label {RESTART!r} is reserved")
                if len(rows) != self.dim or any(len(row) != self.dim for row in rows):
                    raise ValueError(f"Element {label!r} of ({state}, {symbol}) is not {self.dim}x{self.dim}")
        return self


# Search results


class SearchStatus(str, Enum):
    ACCEPTED = "Accepted"
    NO_SUBTREE_WITHIN_LIMIT = "NoSubtreeWithinLimit"
    REJECT_CERTIFICATE = "RejectCertificate"


class SubtreeNode(ExactModel):
    """One node of a witness or refutation tree.

    Witness trees keep one child under existential nodes and every surviving
    outcome under universal ones; refutation trees are the dual.
    """

    label: str = ""
    kind: NodeKind
    configuration: str
    register: list[ExactRational]
    note: str = ""
    children: list["SubtreeNode"] = []

    def leaves(self) -> list["SubtreeNode"]:
        if not self.children:
            return [self]
        return [leaf for child in self.children for leaf in child.leaves()]

    def size(self) -> int:
        return 1 + sum(child.size() for child in self.children)

    def depth(self) -> int:
        return 1 + max((child.depth() for child in self.children), default=0)


SubtreeNode.model_rebuild()


class SearchResult(ExactModel):
    status: SearchStatus
    depth_limit: int
    nodes_expanded: int = 0
    witness: Optional[SubtreeNode] = None
    certificate: Optional[SubtreeNode] = None


class Verdict(str, Enum):
    ACCEPT = "Accept"
    REJECT = "Reject"


class HaltingCertificate(ExactModel):
    configurations: int
    dimension: int
    step_bound: int
    method: str


class StrongEvaluation(ExactModel):
    verdict: Verdict
    certificate: HaltingCertificate
    search: SearchResult


class StrategyTree(BaseModel):
    """Existential choices (by rendered configuration) and the depth they cover."""

    model_config = ConfigDict(frozen=True)

    choices: dict[str, str] = {}
    depth: int = 0

    @classmethod
    def from_witness(cls, witness: SubtreeNode) -> "StrategyTree":
        choices: dict[str, Any] = {}
        stack = [witness]
        while stack:
            node = stack.pop()
            if node.kind is NodeKind.EXISTENTIAL and node.children:
                choices[node.configuration] = node.children[0].label
            stack.extend(node.children)
        return cls(choices=choices, depth=witness.depth() - 1)
