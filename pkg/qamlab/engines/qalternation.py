"""q-alternating machines and the accepting-subtree search.

A configuration is a classical snapshot paired with an unconditional
register. Existential steps change only the classical part; universal steps
apply the superoperator bound to the classical state and keep the outcomes of
positive probability, each paired with its classical branch. An input is
accepted when some existential strategy yields a finite subtree all of whose
leaves accept.

The search is a memoized AND-OR evaluation with three results: an accepting
witness, a refutation (every strategy meets a reject leaf), or nothing found
within the depth limit.
"""

import logging
from abc import ABC, abstractmethod
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, NamedTuple, Optional

import numpy as np

from qamlab.core.config import settings
from qamlab.core.errors import InvariantViolation, MachineError, NotCertifiedHalting, SpecError
from qamlab.engines.halting import density_halting_index, make_nonhalting_system
from qamlab.engines.linalg import (
    as_matrix,
    as_vector,
    identity,
    is_zero,
    make_superoperator,
    superop_apply,
    superop_validate,
    zeros,
)
from qamlab.engines.machines import (
    decode_symbols,
    initial_config,
    successors,
    validate_normal_form,
)
from qamlab.engines.qam import make_verifier_config
from qamlab.engines.verifier import ControlState, Phase, RejectStep, Step, VerifierMachine
from qamlab.models.alternation import (
    RESTART,
    Branch,
    HaltingCertificate,
    HeadMove,
    Leaf,
    NodeKind,
    QConfig,
    QMachineSpec,
    SearchResult,
    SearchStatus,
    StrongEvaluation,
    SubtreeNode,
    Verdict,
)
from qamlab.models.machines import (
    CENT,
    DOLLAR,
    LEFT,
    RIGHT,
    MachineKind,
    MachineSpec,
    StateLabel,
)
from qamlab.models.protocol import ProtocolMode
from qamlab.models.superoperator import Superoperator

logger = logging.getLogger(__name__)


class QMachine(ABC):
    """A q-alternating machine given by its classical step relation.

    Subclasses describe classical snapshots only; registers are handled by
    `qstep`. Halting snapshots that have no state of their own are `Leaf`s.
    """

    name: str = ""
    dim: int

    @abstractmethod
    def initial(self, x: str) -> QConfig: ...

    @abstractmethod
    def node_kind(self, classical: Hashable) -> NodeKind: ...

    @abstractmethod
    def branches(self, classical: Hashable) -> list[Branch]:
        """Classical branches; for universal nodes, one per operation element plus an
        optional RESTART branch for the residual mass."""

    def superoperator(self, classical: Hashable) -> Superoperator:
        raise MachineError(f"{self.render(classical)} is not universal")

    def refutation(self, qc: QConfig) -> Optional[str]:
        """A reason why every finite subtree below qc has a reject leaf, if one is known."""
        return None

    def certified_bound(self, x: str) -> Optional[int]:
        """Depth within which every path halts, when the construction guarantees one."""
        return None

    def render(self, classical: Hashable) -> str:
        return str(classical)

    def kind(self, classical: Hashable) -> NodeKind:
        if isinstance(classical, Leaf):
            return NodeKind.ACCEPT if classical.accept else NodeKind.REJECT
        return self.node_kind(classical)


def _leaf_text(leaf: Leaf) -> str:
    return f"{'accept' if leaf.accept else 'reject'}: {leaf.reason}"


def expand(machine: QMachine, qc: QConfig) -> list[tuple[str, QConfig]]:
    """Labeled children of a non-halting configuration."""
    kind = machine.kind(qc.classical)
    if kind.halting:
        raise MachineError(f"{machine.render(qc.classical)} is a halting configuration")
    branches = machine.branches(qc.classical)
    if kind is NodeKind.EXISTENTIAL:
        return [(b.label, QConfig(b.classical, qc.register)) for b in branches]

    op = machine.superoperator(qc.classical)
    labels = [b.label for b in branches if b.label != RESTART]
    if labels != op.labels:
        raise MachineError(
            f"superoperator/branch-count mismatch at {machine.render(qc.classical)}: "
            f"outcomes {op.labels}, branches {labels}"
        )
    application = superop_apply(op, as_vector(qc.register))
    vectors = dict(application.outcomes)
    has_restart = any(b.label == RESTART for b in branches)
    if application.restart_mass > 0 and not has_restart:
        raise MachineError(
            f"Residual mass {application.restart_mass} at {machine.render(qc.classical)} "
            "has no restart branch"
        )

    children = []
    for b in branches:
        if b.label == RESTART:
            # the restart child always halts, so its register is never read
            if application.restart_mass > 0:
                children.append((RESTART, QConfig(b.classical, qc.register)))
            continue
        vector = vectors[b.label]
        if not is_zero(vector):
            children.append((b.label, QConfig(b.classical, tuple(Fraction(v) for v in vector))))
    return children


def qstep(machine: QMachine, qc: QConfig) -> list[QConfig]:
    return [child for _, child in expand(machine, qc)]


# Search


class _Outcome(NamedTuple):
    status: SearchStatus
    tree: Optional[SubtreeNode]
    # Unknown because a configuration repeated on the current path
    cut: bool = False


UNKNOWN = _Outcome(SearchStatus.NO_SUBTREE_WITHIN_LIMIT, None)


@dataclass
class _Frame:
    qc: QConfig
    label: str
    remaining: int
    kind: NodeKind
    children: list[tuple[str, QConfig]]
    index: int = 0
    kept: list[SubtreeNode] = field(default_factory=list)
    decided: Optional[SearchStatus] = None
    unknown: bool = False
    cut: bool = False


class _Search:
    def __init__(self, machine: QMachine) -> None:
        self.machine = machine
        self.final: dict[QConfig, _Outcome] = {}
        # Largest remaining depth at which a configuration stayed unresolved
        self.unresolved: dict[QConfig, int] = {}
        self.on_path: set[QConfig] = set()
        self.expanded = 0

    def node(self, label: str, qc: QConfig, kind: NodeKind, note: str = "", children=()) -> SubtreeNode:
        return SubtreeNode(
            label=label,
            kind=kind,
            configuration=self.machine.render(qc.classical),
            register=list(qc.register),
            note=note,
            children=list(children),
        )

    def settle(self, label: str, qc: QConfig, remaining: int) -> Optional[_Outcome]:
        """Resolve qc without expanding it, or return None."""
        kind = self.machine.kind(qc.classical)
        if kind is NodeKind.ACCEPT:
            return _Outcome(SearchStatus.ACCEPTED, self.node(label, qc, kind))
        if kind is NodeKind.REJECT:
            return _Outcome(SearchStatus.REJECT_CERTIFICATE, self.node(label, qc, kind))
        known = self.final.get(qc)
        if known is not None:
            return known._replace(tree=known.tree.model_copy(update={"label": label}))
        reason = self.machine.refutation(qc)
        if reason is not None:
            outcome = _Outcome(
                SearchStatus.REJECT_CERTIFICATE, self.node(label, qc, kind, note=f"refuted: {reason}")
            )
            self.final[qc] = outcome
            return outcome
        if remaining <= 0 or self.unresolved.get(qc, -1) >= remaining:
            return UNKNOWN
        if qc in self.on_path:
            return _Outcome(SearchStatus.NO_SUBTREE_WITHIN_LIMIT, None, cut=True)
        return None

    def open(self, label: str, qc: QConfig, remaining: int) -> _Frame:
        self.expanded += 1
        self.on_path.add(qc)
        return _Frame(
            qc=qc,
            label=label,
            remaining=remaining,
            kind=self.machine.kind(qc.classical),
            children=expand(self.machine, qc),
        )

    @staticmethod
    def absorb(frame: _Frame, outcome: _Outcome) -> None:
        frame.cut = frame.cut or outcome.cut
        # OR at existential nodes, AND at universal ones
        wins = SearchStatus.ACCEPTED if frame.kind is NodeKind.EXISTENTIAL else SearchStatus.REJECT_CERTIFICATE
        if outcome.status is wins:
            frame.kept = [outcome.tree]
            frame.decided = wins
        elif outcome.status is SearchStatus.NO_SUBTREE_WITHIN_LIMIT:
            frame.unknown = True
        else:
            frame.kept.append(outcome.tree)

    def close(self, frame: _Frame) -> _Outcome:
        self.on_path.discard(frame.qc)
        if frame.decided is not None:
            status = frame.decided
        elif frame.unknown:
            if not frame.cut:
                self.unresolved[frame.qc] = max(self.unresolved.get(frame.qc, -1), frame.remaining)
            return _Outcome(SearchStatus.NO_SUBTREE_WITHIN_LIMIT, None, frame.cut)
        elif frame.kind is NodeKind.EXISTENTIAL:
            status = SearchStatus.REJECT_CERTIFICATE
        else:
            status = SearchStatus.ACCEPTED
        outcome = _Outcome(status, self.node(frame.label, frame.qc, frame.kind, children=frame.kept))
        self.final[frame.qc] = outcome
        return outcome

    def run(self, root: QConfig, depth_limit: int) -> _Outcome:
        settled = self.settle("", root, depth_limit)
        if settled is not None:
            return settled
        stack = [self.open("", root, depth_limit)]
        returned: Optional[_Outcome] = None
        while stack:
            frame = stack[-1]
            if returned is not None:
                self.absorb(frame, returned)
                returned = None
            if frame.decided is not None or frame.index >= len(frame.children):
                stack.pop()
                returned = self.close(frame)
                continue
            label, child = frame.children[frame.index]
            frame.index += 1
            returned = self.settle(label, child, frame.remaining - 1)
            if returned is None:
                stack.append(self.open(label, child, frame.remaining - 1))
        assert returned is not None
        return returned


def accepting_subtree_search(
    machine: QMachine, x: str, depth_limit: Optional[int] = None
) -> SearchResult:
    """Look for a finite accepting subtree of depth at most `depth_limit`."""
    depth_limit = settings.DEFAULT_SEARCH_DEPTH if depth_limit is None else depth_limit
    if depth_limit < 1:
        return SearchResult(status=SearchStatus.NO_SUBTREE_WITHIN_LIMIT, depth_limit=depth_limit)

    search = _Search(machine)
    outcome = search.run(machine.initial(x), depth_limit)
    logger.info(
        "Subtree search for %s on %r: %s after %d expansion(s)",
        machine.name or type(machine).__name__,
        x,
        outcome.status.value,
        search.expanded,
    )
    return SearchResult(
        status=outcome.status,
        depth_limit=depth_limit,
        nodes_expanded=search.expanded,
        witness=outcome.tree if outcome.status is SearchStatus.ACCEPTED else None,
        certificate=outcome.tree if outcome.status is SearchStatus.REJECT_CERTIFICATE else None,
    )


def verify_witness(machine: QMachine, x: str, witness: SubtreeNode) -> bool:
    """Replay a witness: one child per existential node, every surviving outcome
    under universal nodes, matching registers and only accepting leaves."""
    stack = [(machine.initial(x), witness)]
    while stack:
        qc, node = stack.pop()
        kind = machine.kind(qc.classical)
        if node.kind is not kind or node.register != list(qc.register):
            return False
        if kind is NodeKind.ACCEPT:
            continue
        if kind is NodeKind.REJECT:
            return False
        children = dict(expand(machine, qc))
        labels = [child.label for child in node.children]
        if kind is NodeKind.EXISTENTIAL:
            if len(labels) != 1 or labels[0] not in children:
                return False
        elif sorted(labels) != sorted(children):
            return False
        stack.extend((children[child.label], child) for child in node.children)
    return True


# Machines built from the configuration-stream protocols


@dataclass(frozen=True)
class Awaiting:
    """The verifier waits for the prover's next symbol."""

    x: str
    control: ControlState
    sent: int


@dataclass(frozen=True)
class Applying:
    """The verifier applies the index-th operator triggered by `symbol`."""

    x: str
    before: ControlState
    symbol: str
    index: int
    sent: int


class ProtocolQMachine(QMachine):
    """
    One round of a configuration-stream protocol as a q-alternating automaton.

    Existential nodes choose the prover's next symbol, universal nodes are the
    verifier's operators, and the auxiliary (restart) outcome accepts instead
    of starting a new round. In the strong mode the verifier also counts the
    symbols it has read and rejects past a bound derived from the number of
    configurations of the simulated ATM, so every path halts.
    """

    def __init__(self, spec: MachineSpec, mode: ProtocolMode) -> None:
        self.spec = spec
        self.mode = mode
        self.strong = mode is ProtocolMode.STRONG
        self.name = f"{spec.name or spec.kind.value}/{mode.value}"
        self.dim = 5 if self.strong else 4
        channel = (DOLLAR, LEFT, RIGHT) if self.strong else (DOLLAR,)
        self.alphabet = spec.alphabet + channel
        self._verifiers: dict[str, VerifierMachine] = {}
        self._fed: dict[tuple[str, ControlState, str], tuple[ControlState, list[Step]]] = {}

    def verifier(self, x: str) -> VerifierMachine:
        if x not in self._verifiers:
            vc = make_verifier_config(
                self.spec,
                x,
                self.mode,
                max_transcript=self.symbol_bound(x) if self.strong else settings.FALLBACK_MAX_TRANSCRIPT,
            )
            self._verifiers[x] = VerifierMachine(self.spec, vc, x)
        return self._verifiers[x]

    def symbol_bound(self, x: str) -> int:
        """Symbols in a transcript that visits every configuration at most once."""
        cells = len(x) + 2
        inner = len(self.spec.tape_alphabet) - 1
        configurations = len(self.spec.states) * cells * inner ** (cells - 2)
        # configuration tokens, two $ and one exchange symbol per block
        return configurations * (cells + 4)

    def certified_bound(self, x: str) -> Optional[int]:
        if not self.strong:
            return None
        # every symbol costs one existential edge and at most one operator
        return 2 * self.symbol_bound(x) + 1

    def _feed(self, x: str, before: ControlState, symbol: str) -> tuple[ControlState, list[Step]]:
        key = (x, before, symbol)
        if key not in self._fed:
            self._fed[key] = self.verifier(x).feed(before, symbol)
        return self._fed[key]

    def initial(self, x: str) -> QConfig:
        control, register, _ = self.verifier(x).start()
        return QConfig(Awaiting(x, control, 0), tuple(Fraction(v) for v in register))

    def node_kind(self, classical: Hashable) -> NodeKind:
        if isinstance(classical, Awaiting):
            if self.strong and classical.sent >= self.symbol_bound(classical.x):
                return NodeKind.REJECT
            return NodeKind.EXISTENTIAL
        return NodeKind.UNIVERSAL

    def branches(self, classical: Hashable) -> list[Branch]:
        if isinstance(classical, Awaiting):
            return [self._send(classical, symbol) for symbol in self.alphabet]

        after, steps = self._feed(classical.x, classical.before, classical.symbol)
        step = steps[classical.index]
        result = []
        for label in step.op.labels:
            effect = step.effects[label]
            if effect == "continue":
                if classical.index + 1 < len(steps):
                    target = Applying(
                        classical.x, classical.before, classical.symbol, classical.index + 1, classical.sent
                    )
                else:
                    target = Awaiting(classical.x, after, classical.sent)
            elif effect == "branch":
                target = Awaiting(classical.x, self.verifier(classical.x).after_coin(after, label), classical.sent)
            elif effect == "accept":
                target = Leaf(True, "accept")
            else:
                target = Leaf(False, "successor check" if label == "check" else "reject")
            result.append(Branch(label, target))
        result.append(Branch(RESTART, Leaf(True, "auxiliary outcome")))
        return result

    def _send(self, node: Awaiting, symbol: str) -> Branch:
        control, steps = self._feed(node.x, node.control, symbol)
        if not steps:
            return Branch(symbol, Awaiting(node.x, control, node.sent + 1))
        if isinstance(steps[0], RejectStep):
            return Branch(symbol, Leaf(False, steps[0].reason))
        return Branch(symbol, Applying(node.x, node.control, symbol, 0, node.sent + 1))

    def superoperator(self, classical: Hashable) -> Superoperator:
        if not isinstance(classical, Applying):
            return super().superoperator(classical)
        _, steps = self._feed(classical.x, classical.before, classical.symbol)
        return steps[classical.index].op

    def refutation(self, qc: QConfig) -> Optional[str]:
        """The configuration being sent cannot be the one the register expects.

        In block 1 that is the initial configuration. Later blocks must repeat
        next(c) of the previous block, which the register holds as q2 / q1.
        """
        classical = qc.classical
        if isinstance(classical, Awaiting):
            control = classical.control
        elif isinstance(classical, Applying):
            control = self._feed(classical.x, classical.before, classical.symbol)[0]
        else:
            return None
        if control.phase not in (Phase.CONFIG, Phase.FIRST_DOLLAR):
            return None

        verifier = self.verifier(classical.x)
        if control.block == 1:
            expected = verifier.initial
        else:
            q1, q2 = qc.register[0], qc.register[1]
            if q1 == 0:
                return None
            ratio = Fraction(q2) / Fraction(q1)
            if ratio.denominator != 1 or ratio <= 0:
                return None
            expected = decode_symbols(int(ratio), verifier.dm)
            if expected is None:
                return None

        tokens = control.tokens
        complete = control.phase is Phase.FIRST_DOLLAR
        if tokens == expected or (not complete and tokens == expected[: len(tokens)]):
            return None
        return f"block {control.block} sends {''.join(tokens)!r}, expected {''.join(expected)!r}"

    def render(self, classical: Hashable) -> str:
        if isinstance(classical, Leaf):
            return _leaf_text(classical)
        if isinstance(classical, Awaiting):
            control = classical.control
            return (
                f"block {control.block} {control.phase.value} "
                f"[{''.join(control.tokens)}] after {classical.sent} symbol(s)"
            )
        op = self.superoperator(classical)
        return f"{op.name} on {classical.symbol!r} after {classical.sent} symbol(s)"


def q1afa_from_protocol(dtm: MachineSpec) -> ProtocolQMachine:
    """The single-round weak verifier with its auxiliary outcome turned into acceptance."""
    if dtm.kind is not MachineKind.DTM:
        raise SpecError("q1afa_from_protocol wraps the protocol for DTMs")
    return ProtocolQMachine(dtm, ProtocolMode.WEAK)


def q1afa_from_strong_protocol(atm: MachineSpec) -> ProtocolQMachine:
    """The single-round strong verifier with a symbol counter; halts on every path."""
    if atm.kind is not MachineKind.ATM:
        raise SpecError("q1afa_from_strong_protocol wraps the protocol for normal-form ATMs")
    violations = validate_normal_form(atm)
    if violations:
        raise MachineError("ATM is not in normal form: " + "; ".join(violations))
    return ProtocolQMachine(atm, ProtocolMode.STRONG)


# Table-driven automata


class Head(NamedTuple):
    state: str
    position: int
    x: str


class TableQMachine(QMachine):
    """A one-way q-alternating finite automaton read from a q-machine file."""

    def __init__(self, spec: QMachineSpec) -> None:
        self.spec = spec
        self.name = spec.name
        self.dim = spec.dim
        self._ops: dict[tuple[str, str], Superoperator] = {}
        for (state, symbol), binding in spec.superops.items():
            op = make_superoperator(
                [(label, as_matrix(rows)) for label, rows in binding.elements],
                name=f"{state},{symbol}",
            )
            if not superop_validate(op):
                raise SpecError(f"Superoperator at ({state}, {symbol}) is not trace-decreasing")
            if not is_zero(op.slack) and binding.restart is None:
                raise SpecError(f"Superoperator at ({state}, {symbol}) is incomplete and has no restart outcome")
            self._ops[(state, symbol)] = op

    def initial(self, x: str) -> QConfig:
        bad = [s for s in x if s not in self.spec.input_alphabet]
        if bad:
            raise SpecError(f"Invalid input symbol(s) {bad} for {self.name or 'the automaton'}")
        return QConfig(Head(self.spec.start, 0, x), tuple(Fraction(v) for v in self.spec.initial))

    @staticmethod
    def _scanned(head: Head) -> str:
        tape = CENT + head.x + DOLLAR
        return tape[head.position]

    def node_kind(self, classical: Hashable) -> NodeKind:
        state = classical.state
        if state == self.spec.accept:
            return NodeKind.ACCEPT
        if state == self.spec.reject:
            return NodeKind.REJECT
        if self.spec.labels[state] is StateLabel.UNIVERSAL:
            return NodeKind.UNIVERSAL
        return NodeKind.EXISTENTIAL

    def branches(self, classical: Hashable) -> list[Branch]:
        symbol = self._scanned(classical)
        transitions = self.spec.delta.get((classical.state, symbol))
        if transitions is None:
            raise MachineError(f"delta({classical.state}, {symbol}) is undefined")

        def target(state: str, move: HeadMove) -> Head:
            return Head(state, classical.position + (1 if move is HeadMove.R else 0), classical.x)

        if self.node_kind(classical) is not NodeKind.UNIVERSAL:
            return [Branch(f"{i}:{t.state}", target(t.state, t.move)) for i, t in enumerate(transitions, 1)]
        binding = self.spec.superops[(classical.state, symbol)]
        result = [
            Branch(label, target(t.state, t.move))
            for (label, _), t in zip(binding.elements, transitions)
        ]
        if binding.restart is not None:
            result.append(Branch(RESTART, Head(binding.restart, classical.position, classical.x)))
        return result

    def superoperator(self, classical: Hashable) -> Superoperator:
        return self._ops[(classical.state, self._scanned(classical))]

    def render(self, classical: Hashable) -> str:
        return f"{classical.state}@{classical.position}"


class CoinQMachine(QMachine):
    """An ATM whose universal branchings are decided by the coin {(1/2)I, (1/2)I}
    on a one-dimensional register; the residual mass accepts."""

    dim = 1

    def __init__(self, spec: MachineSpec) -> None:
        if spec.kind is not MachineKind.ATM:
            raise SpecError("Coin machines are built from ATMs")
        self.spec = spec
        self.name = f"{spec.name or 'ATM'}/coin"
        half = as_matrix([[Fraction(1, 2)]])
        self.coin = make_superoperator([(LEFT, half), (RIGHT, half.copy())], name="coin")

    def initial(self, x: str) -> QConfig:
        return QConfig(initial_config(self.spec, x), (Fraction(1),))

    def node_kind(self, classical: Hashable) -> NodeKind:
        state = next(s for s in classical.symbols if s in self.spec.states)
        if state == self.spec.accept:
            return NodeKind.ACCEPT
        if state == self.spec.reject:
            return NodeKind.REJECT
        if self.spec.label(state) is StateLabel.UNIVERSAL:
            return NodeKind.UNIVERSAL
        return NodeKind.EXISTENTIAL

    def branches(self, classical: Hashable) -> list[Branch]:
        children = successors(self.spec, classical)
        if len(children) == 1:
            return [Branch("step", children[0])]
        result = [Branch(label, child) for label, child in zip((LEFT, RIGHT), children)]
        if self.node_kind(classical) is NodeKind.UNIVERSAL:
            result.append(Branch(RESTART, Leaf(True, "auxiliary outcome")))
        return result

    def superoperator(self, classical: Hashable) -> Superoperator:
        return self.coin

    def render(self, classical: Hashable) -> str:
        if isinstance(classical, Leaf):
            return _leaf_text(classical)
        return str(classical)


# Halting certification and strong evaluation


def certify_halting(machine: QMachine, x: str) -> HaltingCertificate:
    """Bound the length of every computation path of `machine` on x.

    Machines with a bound by construction report it. Otherwise the reachable
    nonhalting classical configurations are enumerated, each branch becomes an
    operation element on (configuration) x (register) space, and the density
    iteration decides whether everything halts within N^2 steps. Existential
    branches are weighted 1/k so the elements stay sub-complete; only zero
    versus nonzero matters.
    """
    bound = machine.certified_bound(x)
    if bound is not None:
        return HaltingCertificate(configurations=0, dimension=machine.dim, step_bound=bound, method="counter")

    root = machine.initial(x)
    index: dict[Hashable, int] = {}
    queue = deque([root.classical])
    while queue:
        classical = queue.popleft()
        if classical in index or machine.kind(classical).halting:
            continue
        if len(index) >= settings.CERTIFY_MAX_CONFIGS:
            raise NotCertifiedHalting(
                f"{machine.name or 'machine'} reaches more than {settings.CERTIFY_MAX_CONFIGS} "
                f"classical configurations on {x!r}"
            )
        index[classical] = len(index)
        queue.extend(b.classical for b in machine.branches(classical))

    if not index:
        return HaltingCertificate(configurations=0, dimension=machine.dim, step_bound=0, method="density")

    d = machine.dim
    n = len(index) * d
    elements = []
    for classical, i in index.items():
        kind = machine.kind(classical)
        branches = [b for b in machine.branches(classical) if b.label != RESTART]
        if kind is NodeKind.UNIVERSAL:
            op = machine.superoperator(classical)
            blocks = [(b, op.element(b.label)) for b in branches]
        else:
            blocks = [(b, identity(d) * Fraction(1, len(branches))) for b in branches]
        for b, block in blocks:
            if b.classical not in index:
                continue
            j = index[b.classical]
            element = zeros(n)
            element[j * d : (j + 1) * d, i * d : (i + 1) * d] = block
            elements.append(element)

    psi = as_vector(root.register)
    r = index[root.classical]
    nu0 = zeros(n)
    nu0[r * d : (r + 1) * d, r * d : (r + 1) * d] = np.outer(psi, psi)
    result = density_halting_index(make_nonhalting_system(elements, nu0, validate=False))
    if not result.halts:
        raise NotCertifiedHalting(
            f"{machine.name or 'machine'} has a path on {x!r} that survives {result.bound} steps"
        )
    return HaltingCertificate(
        configurations=len(index), dimension=d, step_bound=result.index, method="density"
    )


def strong_eval(machine: QMachine, x: str) -> StrongEvaluation:
    """Accept iff some strategy's subtree has no reject leaf; needs certified halting."""
    certificate = certify_halting(machine, x)
    search = accepting_subtree_search(machine, x, max(certificate.step_bound, 1))
    if search.status is SearchStatus.NO_SUBTREE_WITHIN_LIMIT:
        raise InvariantViolation(
            f"Search within the certified bound {certificate.step_bound} was inconclusive"
        )
    verdict = Verdict.ACCEPT if search.status is SearchStatus.ACCEPTED else Verdict.REJECT
    logger.info("Strong evaluation of %r: %s", x, verdict.value)
    return StrongEvaluation(verdict=verdict, certificate=certificate, search=search)
