from enum import Enum
from typing import NamedTuple, Optional

from pydantic import BaseModel, ConfigDict, model_validator

from qamlab.models.base import ExactModel
from qamlab.models.rational import ExactRational


class ConfigClass(str, Enum):
    READ = "read"
    COMM_0 = "comm-0"
    COMM_1 = "comm-1"
    ACC = "acc"
    REJ = "rej"

    @property
    def halting(self) -> bool:
        return self in (ConfigClass.ACC, ConfigClass.REJ)

    @property
    def comm(self) -> bool:
        return self in (ConfigClass.COMM_0, ConfigClass.COMM_1)


class IPSConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    cls: ConfigClass
    children: tuple[str, ...] = ()


class IPSVerifierSpec(BaseModel):
    """
    The configuration graph of a verifier on one input.

    Read configurations flip a fair coin over their one or two children;
    communication configurations write their bit and move to child 0 or 1
    according to the prover's answer.
    """

    model_config = ConfigDict(frozen=True)

    name: str = ""
    initial: str
    configs: tuple[IPSConfig, ...]

    @model_validator(mode="after")
    def _check_graph(self) -> "IPSVerifierSpec":
        names = [c.name for c in self.configs]
        if len(set(names)) != len(names):
            raise ValueError("Configurations must be listed once each")
        if self.initial not in names:
            raise ValueError(f"Initial configuration {self.initial} is not listed")
        for config in self.configs:
            arity = len(config.children)
            if config.cls.halting and arity:
                raise ValueError(f"Halting configuration {config.name} cannot have children")
            if config.cls is ConfigClass.READ and arity not in (1, 2):
                raise ValueError(f"Read configuration {config.name} needs one or two children")
            if config.cls.comm and arity != 2:
                raise ValueError(f"Communication configuration {config.name} needs exactly two children")
            missing = [c for c in config.children if c not in names]
            if missing:
                raise ValueError(f"{config.name} refers to unknown configuration(s) {', '.join(missing)}")
        return self

    def config(self, name: str) -> IPSConfig:
        for config in self.configs:
            if config.name == name:
                return config
        raise KeyError(name)

    def cls(self, name: str) -> ConfigClass:
        return self.config(name).cls


class TreeKind(str, Enum):
    READ_COMM = "READ-COMM"
    COMM_01 = "COMM-01"
    COMM_0 = "COMM-0"
    COMM_1 = "COMM-1"
    ACC = "ACC"
    REJ = "REJ"
    LOOP = "LOOP"

    @property
    def leaf(self) -> bool:
        return self in (TreeKind.ACC, TreeKind.REJ, TreeKind.LOOP)


class ValueKind(str, Enum):
    TRUE = "true"
    FALSE = "false"
    LOOP = "loop"


class TreeValue(NamedTuple):
    kind: ValueKind
    depth: Optional[int] = None

    @classmethod
    def loop(cls, depth: int) -> "TreeValue":
        return cls(ValueKind.LOOP, depth)

    def __str__(self) -> str:
        if self.kind is ValueKind.LOOP:
            return f"loop[{self.depth}]"
        return self.kind.value


TRUE = TreeValue(ValueKind.TRUE)
FALSE = TreeValue(ValueKind.FALSE)


class TreeNode(BaseModel):
    """
    A node of the verifier's finite computation tree.

    `configs` is the sorted subset of configurations the node stands for.
    Children of COMM-0 and COMM-1 nodes carry the prover `answer` they
    follow; LOOP leaves carry the depth of the node they repeat. `value` is
    filled in by evaluation.
    """

    kind: TreeKind
    configs: list[str]
    depth: int
    answer: Optional[int] = None
    loop_depth: Optional[int] = None
    children: list["TreeNode"] = []
    value: Optional[TreeValue] = None

    def size(self) -> int:
        return 1 + sum(child.size() for child in self.children)

    def height(self) -> int:
        return max((child.height() + 1 for child in self.children), default=0)

    def leaves(self) -> list["TreeNode"]:
        if not self.children:
            return [self]
        return [leaf for child in self.children for leaf in child.leaves()]


TreeNode.model_rebuild()


class StrategyAcceptance(ExactModel):
    """Best acceptance probability over belief-based prover strategies."""

    probability: ExactRational
    accepted: bool
    strategy: dict[str, int] = {}
    strategies_checked: int


class TreeEvaluation(ExactModel):
    accepted: bool
    value: str
    nodes: int
    height: int
    depth_cap: int
    trace: list[str] = []
    oracle: Optional[StrategyAcceptance] = None
