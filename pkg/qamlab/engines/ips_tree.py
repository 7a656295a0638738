"""Finite computation trees for interactive proof verifiers with a 0/1 channel.

Each node stands for the set of verifier configurations the prover cannot
tell apart. READ-COMM nodes advance every read configuration by one coin
flip while communication configurations wait; COMM-01 nodes split on the
written bit; COMM-0 and COMM-1 nodes branch on the prover's answer. Values
live in {true, false, loop[depth]} and are combined with the tables below.
"""

import itertools
import logging
from fractions import Fraction
from typing import Iterable, Optional

import sympy
from pydantic import ValidationError

from qamlab.core.errors import MalformedInstance, SpecError
from qamlab.formats.common import validation_message
from qamlab.models.trees import (
    FALSE,
    TRUE,
    ConfigClass,
    IPSConfig,
    IPSVerifierSpec,
    StrategyAcceptance,
    TreeEvaluation,
    TreeKind,
    TreeNode,
    TreeValue,
    ValueKind,
)

logger = logging.getLogger(__name__)

# Belief-based prover strategies are enumerated exhaustively
MAX_ORACLE_BELIEFS = 12

COMM_KINDS = {ConfigClass.COMM_0: TreeKind.COMM_0, ConfigClass.COMM_1: TreeKind.COMM_1}


def make_spec(initial: str, configs: Iterable[tuple], name: str = "") -> IPSVerifierSpec:
    """Build a spec from (name, class, children...) tuples."""
    try:
        return IPSVerifierSpec(
            name=name,
            initial=initial,
            configs=tuple(
                IPSConfig(name=c[0], cls=ConfigClass(c[1]), children=tuple(c[2:])) for c in configs
            ),
        )
    except ValidationError as e:
        raise MalformedInstance(validation_message(e)) from None
    except ValueError as e:
        raise MalformedInstance(str(e)) from None


# Three-valued combination


def and_combine(v1: TreeValue, v2: TreeValue) -> TreeValue:
    if ValueKind.FALSE in (v1.kind, v2.kind):
        return FALSE
    if ValueKind.TRUE in (v1.kind, v2.kind):
        return TRUE
    return TreeValue.loop(min(v1.depth, v2.depth))


def or_combine(v1: TreeValue, v2: TreeValue) -> TreeValue:
    if ValueKind.TRUE in (v1.kind, v2.kind):
        return TRUE
    if v1.kind is ValueKind.FALSE:
        return v2
    if v2.kind is ValueKind.FALSE:
        return v1
    return TreeValue.loop(min(v1.depth, v2.depth))


def _fold(combine, values: list[TreeValue]) -> TreeValue:
    # v1 op (v2 op (... op vk))
    result = values[-1]
    for value in reversed(values[:-1]):
        result = combine(value, result)
    return result


# Construction


def classify(spec: IPSVerifierSpec, configs: frozenset[str]) -> TreeKind:
    classes = {spec.cls(c) for c in configs}
    if ConfigClass.READ in classes:
        return TreeKind.READ_COMM
    if classes == {ConfigClass.COMM_0, ConfigClass.COMM_1}:
        return TreeKind.COMM_01
    (cls,) = classes
    return COMM_KINDS[cls]


class _Builder:
    def __init__(self, spec: IPSVerifierSpec, depth_cap: int) -> None:
        self.spec = spec
        self.depth_cap = depth_cap

    def leaf(self, config: str, depth: int, answer: Optional[int]) -> Optional[TreeNode]:
        cls = self.spec.cls(config)
        if cls is ConfigClass.ACC:
            return TreeNode(kind=TreeKind.ACC, configs=[config], depth=depth, answer=answer)
        if cls is ConfigClass.REJ:
            return TreeNode(kind=TreeKind.REJ, configs=[config], depth=depth, answer=answer)
        return None

    @staticmethod
    def first_seen(path: dict[frozenset[str], int], config: str) -> int:
        return min(depth for configs, depth in path.items() if config in configs)

    def node(
        self,
        configs: frozenset[str],
        depth: int,
        path: dict[frozenset[str], int],
        answer: Optional[int] = None,
    ) -> TreeNode:
        members = sorted(configs)
        if configs in path:
            return TreeNode(
                kind=TreeKind.LOOP, configs=members, depth=depth, answer=answer, loop_depth=path[configs]
            )
        if depth > self.depth_cap:
            # Truncated branch; its loop value points below every ancestor
            return TreeNode(kind=TreeKind.LOOP, configs=members, depth=depth, answer=answer, loop_depth=depth)

        kind = classify(self.spec, configs)
        node = TreeNode(kind=kind, configs=members, depth=depth, answer=answer)
        path = {**path, configs: depth}
        if kind is TreeKind.READ_COMM:
            node.children = self.read_children(members, depth, path)
        elif kind is TreeKind.COMM_01:
            for cls in (ConfigClass.COMM_0, ConfigClass.COMM_1):
                subset = frozenset(c for c in members if self.spec.cls(c) is cls)
                node.children.append(self.node(subset, depth + 1, path))
        else:
            node.children = self.answer_children(members, kind, depth, path)
        return node

    def read_children(self, members: list[str], depth: int, path: dict) -> list[TreeNode]:
        children: list[TreeNode] = []
        collected: set[str] = set()
        for config in members:
            spec = self.spec.config(config)
            if spec.cls.comm:
                collected.add(config)
                continue
            for child in spec.children:
                leaf = self.leaf(child, depth + 1, None)
                if leaf is not None:
                    children.append(leaf)
                elif self.spec.cls(child) is ConfigClass.READ and child in members:
                    children.append(
                        TreeNode(
                            kind=TreeKind.LOOP,
                            configs=[child],
                            depth=depth + 1,
                            loop_depth=self.first_seen(path, child),
                        )
                    )
                else:
                    collected.add(child)
        if collected:
            children.append(self.node(frozenset(collected), depth + 1, path))
        return children

    def answer_children(self, members: list[str], kind: TreeKind, depth: int, path: dict) -> list[TreeNode]:
        children: list[TreeNode] = []
        own = ConfigClass.COMM_0 if kind is TreeKind.COMM_0 else ConfigClass.COMM_1
        for answer in (0, 1):
            collected: set[str] = set()
            for config in members:
                child = self.spec.config(config).children[answer]
                leaf = self.leaf(child, depth + 1, answer)
                if leaf is not None:
                    children.append(leaf)
                elif self.spec.cls(child) is own and child in members:
                    children.append(
                        TreeNode(
                            kind=TreeKind.LOOP,
                            configs=[child],
                            depth=depth + 1,
                            answer=answer,
                            loop_depth=self.first_seen(path, child),
                        )
                    )
                else:
                    collected.add(child)
            if collected:
                children.append(self.node(frozenset(collected), depth + 1, path, answer))
        return children


def build_tree(spec: IPSVerifierSpec, depth_cap: Optional[int] = None) -> TreeNode:
    """
    Expand the verifier's configuration graph into its finite tree.

    A node whose configuration set already occurs on its path becomes a LOOP
    leaf pointing at the shallowest occurrence. `depth_cap` defaults to
    2^|C|, which no repetition-free path can reach; a smaller cap truncates
    the tree for experiments.
    """
    cap = 2 ** len(spec.configs) if depth_cap is None else depth_cap
    if cap < 0:
        raise SpecError(f"Depth cap must be nonnegative, got {cap}")
    builder = _Builder(spec, cap)
    root = builder.leaf(spec.initial, 0, None)
    if root is None:
        root = builder.node(frozenset({spec.initial}), 0, {})
    logger.debug("Built tree for %s: %d nodes, height %d", spec.name or "spec", root.size(), root.height())
    return root


# Evaluation


def evaluate(root: TreeNode) -> TreeValue:
    """Fill in every node's value bottom-up and return the root's."""
    kind = root.kind
    if kind is TreeKind.ACC:
        value = TRUE
    elif kind is TreeKind.REJ:
        value = FALSE
    elif kind is TreeKind.LOOP:
        value = TreeValue.loop(root.loop_depth)
    else:
        values = [evaluate(child) for child in root.children]
        if kind in (TreeKind.READ_COMM, TreeKind.COMM_01):
            value = _fold(and_combine, values)
        else:
            groups = []
            for answer in (0, 1):
                group = [v for child, v in zip(root.children, values) if child.answer == answer]
                if group:
                    groups.append(_fold(and_combine, group))
            value = _fold(or_combine, groups)
        if value.kind is ValueKind.LOOP and value.depth == root.depth:
            value = FALSE
    root.value = value
    return value


def render_tree(root: TreeNode) -> str:
    """Indented text form, one node per line."""
    lines = []
    stack = [(root, 0)]
    while stack:
        node, level = stack.pop()
        text = f"{node.kind.value} {{{', '.join(node.configs)}}} d={node.depth}"
        if node.answer is not None:
            text = f"[{node.answer}] {text}"
        if node.kind is TreeKind.LOOP:
            text += f" -> {node.loop_depth}"
        if node.value is not None:
            text += f" = {node.value}"
        lines.append("  " * level + text)
        stack.extend((child, level + 1) for child in reversed(node.children))
    return "\n".join(lines) + "\n"


def tree_eval(spec: IPSVerifierSpec, depth_cap: Optional[int] = None) -> TreeEvaluation:
    root = build_tree(spec, depth_cap)
    value = evaluate(root)
    logger.info("Tree value for %s: %s", spec.name or "spec", value)
    return TreeEvaluation(
        accepted=value == TRUE,
        value=str(value),
        nodes=root.size(),
        height=root.height(),
        depth_cap=2 ** len(spec.configs) if depth_cap is None else depth_cap,
        trace=render_tree(root).splitlines(),
    )


# Strategy oracle

Belief = frozenset[str]
State = tuple[str, frozenset[str]]


def comm_closure(spec: IPSVerifierSpec, configs: Iterable[str], cls: ConfigClass) -> Belief:
    """Communication configurations of class `cls` reachable from `configs` by coin flips alone."""
    seen: set[str] = set()
    stack = list(configs)
    found = set()
    while stack:
        config = stack.pop()
        if config in seen:
            continue
        seen.add(config)
        kind = spec.cls(config)
        if kind is cls:
            found.add(config)
        elif kind is ConfigClass.READ:
            stack.extend(spec.config(config).children)
    return frozenset(found)


def beliefs(spec: IPSVerifierSpec) -> list[Belief]:
    """Every set of configurations the prover may face when it is asked to answer."""
    found: set[Belief] = set()
    start = frozenset({spec.initial})
    seen = {start}
    queue = [start]
    while queue:
        after = queue.pop()
        for cls in (ConfigClass.COMM_0, ConfigClass.COMM_1):
            belief = comm_closure(spec, after, cls)
            if not belief:
                continue
            found.add(belief)
            for answer in (0, 1):
                nxt = frozenset(spec.config(c).children[answer] for c in belief)
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
    return sorted(found, key=lambda b: (len(b), sorted(b)))


def acceptance_probability(spec: IPSVerifierSpec, strategy: dict[Belief, int]) -> Fraction:
    """Exact probability of reaching acc when the prover follows `strategy`.

    Chain states pair a configuration with the set of configurations that
    followed the prover's last answer.
    """
    start: State = (spec.initial, frozenset({spec.initial}))
    moves: dict[State, list[tuple[State, Fraction]]] = {}
    stack = [start]
    while stack:
        state = stack.pop()
        if state in moves:
            continue
        config, after = state
        spec_config = spec.config(config)
        if spec_config.cls.halting:
            moves[state] = []
            continue
        if spec_config.cls is ConfigClass.READ:
            p = Fraction(1, len(spec_config.children))
            succ = [((child, after), p) for child in spec_config.children]
        else:
            belief = comm_closure(spec, after, spec_config.cls)
            answer = strategy[belief]
            nxt = frozenset(spec.config(c).children[answer] for c in belief)
            succ = [((spec_config.children[answer], nxt), Fraction(1))]
        moves[state] = succ
        stack.extend(s for s, _ in succ)

    def accepting(state: State) -> bool:
        return spec.cls(state[0]) is ConfigClass.ACC

    # States that can still reach acc
    alive = {s for s in moves if accepting(s)}
    changed = True
    while changed:
        changed = False
        for state, succ in moves.items():
            if state not in alive and any(s in alive for s, _ in succ):
                alive.add(state)
                changed = True
    if start not in alive:
        return Fraction(0)
    if accepting(start):
        return Fraction(1)

    transient = sorted((s for s in alive if not accepting(s)), key=lambda s: (s[0], sorted(s[1])))
    index = {s: i for i, s in enumerate(transient)}
    n = len(transient)
    a = sympy.eye(n)
    b = sympy.zeros(n, 1)
    for state in transient:
        i = index[state]
        for succ, p in moves[state]:
            weight = sympy.Rational(p.numerator, p.denominator)
            if accepting(succ):
                b[i] += weight
            elif succ in index:
                a[i, index[succ]] -= weight
    x = a.LUsolve(b)
    value = sympy.Rational(x[index[start]])
    return Fraction(int(value.p), int(value.q))


def strategy_acceptance(spec: IPSVerifierSpec) -> StrategyAcceptance:
    """
    Best acceptance probability over deterministic prover strategies.

    The prover only sees the bits the verifier writes, so a strategy assigns
    an answer to each set of configurations the verifier may be in when it
    writes.
    """
    options = beliefs(spec)
    if len(options) > MAX_ORACLE_BELIEFS:
        raise SpecError(f"{len(options)} prover views exceed the oracle limit of {MAX_ORACLE_BELIEFS}")

    best: Optional[tuple[Fraction, dict[Belief, int]]] = None
    checked = 0
    for answers in itertools.product((0, 1), repeat=len(options)):
        strategy = dict(zip(options, answers))
        probability = acceptance_probability(spec, strategy)
        checked += 1
        if best is None or probability > best[0]:
            best = (probability, strategy)
        if probability == 1:
            break
    probability, strategy = best
    logger.info("Oracle for %s: %s after %d strategies", spec.name or "spec", probability, checked)
    return StrategyAcceptance(
        probability=probability,
        accepted=probability == 1,
        strategy={"{" + ", ".join(sorted(b)) + "}": a for b, a in strategy.items()},
        strategies_checked=checked,
    )
