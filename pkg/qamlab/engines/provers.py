"""Prover strategies for the configuration-stream protocols.

A strategy maps the public history of the current round to the next
transcript symbol. Every verifier outcome the prover could condition on is
in that history (coin outcomes appear as verifier events), so strategies are
plain functions of it and are evaluated lazily, one symbol at a time.
"""

import logging
from abc import ABC, abstractmethod
from typing import Iterator, Mapping, Optional, Sequence

from qamlab.core.config import settings
from qamlab.core.errors import MachineError, SpecError
from qamlab.engines.machines import (
    digit_map,
    evaluate_from,
    initial_config,
    is_halting,
    run_dtm,
    state_index,
    step,
    successors,
)
from qamlab.models.machines import (
    BLANK,
    DOLLAR,
    LEFT,
    RIGHT,
    Configuration,
    MachineKind,
    MachineSpec,
    StateLabel,
)
from qamlab.models.protocol import ProverKind, ProverSpec, PublicEvent

logger = logging.getLogger(__name__)


def round_position(history: Sequence[PublicEvent]) -> tuple[int, tuple[str, ...]]:
    """Symbols the prover already sent this round, and the coin outcomes so far."""
    sent = 0
    coins: list[str] = []
    for event in history:
        if event.party == "round":
            sent, coins = 0, []
        elif event.party == "prover":
            sent += 1
        else:
            coins.append(event.symbol)
    return sent, tuple(coins)


def round_number(history: Sequence[PublicEvent]) -> int:
    rounds = [int(e.symbol) for e in history if e.party == "round"]
    return rounds[-1] if rounds else 1


def honest_configurations(
    spec: MachineSpec, x: str, limit: Optional[int] = None
) -> list[Configuration]:
    """c1 ... ct of a DTM run, where next(ct) is the first halting configuration."""
    limit = settings.HONEST_STEP_LIMIT if limit is None else limit
    trail = run_dtm(spec, x, limit)
    if not is_halting(spec, trail[-1]):
        raise MachineError(f"{spec.name or 'DTM'} does not halt on {x!r} within {limit} steps")
    return trail[:-1]


class ProverStrategy(ABC):
    """A total response function over public histories."""

    # Stationary strategies behave identically in every round
    stationary: bool = True

    @abstractmethod
    def respond(self, x: str, history: Sequence[PublicEvent]) -> str: ...


class SilentProver(ProverStrategy):
    def __init__(self, symbol: str = BLANK) -> None:
        self.symbol = symbol

    def respond(self, x: str, history: Sequence[PublicEvent]) -> str:
        return self.symbol


class StreamProver(ProverStrategy):
    """
    Streams c1 $$ c2 $$ ... along the computation path fixed by the coins.

    Before a configuration whose state branches (ATMs only), the prover
    announces its branch choice and waits for the public coin. Subclasses
    corrupt the stream through `edit_block`.
    """

    filler = BLANK

    def __init__(self, spec: MachineSpec, limit: Optional[int] = None) -> None:
        self.spec = spec
        self.dm = digit_map(spec)
        self.limit = settings.HONEST_STEP_LIMIT if limit is None else limit
        self._streams: dict[tuple[str, tuple[str, ...]], tuple[Iterator[str], list[str]]] = {}

    def respond(self, x: str, history: Sequence[PublicEvent]) -> str:
        sent, coins = round_position(history)
        key = (x, coins)
        if key not in self._streams:
            self._streams[key] = (self.symbols(x, coins), [])
        stream, produced = self._streams[key]
        while len(produced) <= sent:
            symbol = next(stream, None)
            if symbol is None:
                return self.filler
            produced.append(symbol)
        return produced[sent]

    def choose(self, c: Configuration) -> str:
        """Branch the prover announces at an exchange."""
        return LEFT

    def edit_block(self, block: int, c: Configuration) -> Optional[list[str]]:
        """Symbols sent for block `block`; None skips the block."""
        return list(c.symbols)

    def stop_after(self, block: int, successor: Configuration) -> bool:
        return is_halting(self.spec, successor)

    def symbols(self, x: str, coins: tuple[str, ...]) -> Iterator[str]:
        spec = self.spec
        outcomes = iter(coins)
        c = initial_config(spec, x)
        for block in range(1, self.limit + 1):
            tokens = self.edit_block(block, c)
            branch = 0
            if tokens is not None:
                state = c.symbols[state_index(spec, c.symbols)]
                label = spec.label(state)
                if spec.kind is MachineKind.ATM and label is not StateLabel.DETERMINISTIC:
                    choice = self.choose(c)
                    yield choice
                    outcome = next(outcomes, None)
                    if outcome is None:
                        return
                    chosen = choice if label is StateLabel.EXISTENTIAL else outcome
                    branch = 0 if chosen == LEFT else 1
                yield from tokens
                yield DOLLAR
                yield DOLLAR
            successor = step(spec, c, branch)
            if self.stop_after(block, successor):
                return
            c = successor


class HonestDTM(StreamProver):
    pass


class HonestATM(StreamProver):
    """Honest path prover; existential choices come from a strategy table.

    The table is keyed by a rendered configuration or by a state name, the
    configuration taking precedence. Unlisted choices go to a branch whose
    subtree accepts, or to the left branch when neither does.
    """

    def __init__(
        self,
        spec: MachineSpec,
        strategy: Mapping[str, str] | None = None,
        limit: Optional[int] = None,
    ) -> None:
        super().__init__(spec, limit)
        self.strategy = dict(strategy or {})
        self._values: dict[Configuration, bool] = {}
        for key, value in self.strategy.items():
            if value not in (LEFT, RIGHT):
                raise SpecError(f"Strategy entry {key}={value} must choose l or r")

    def choose(self, c: Configuration) -> str:
        state = c.symbols[state_index(self.spec, c.symbols)]
        if str(c) in self.strategy:
            return self.strategy[str(c)]
        if state in self.strategy:
            return self.strategy[state]
        for label, child in zip((LEFT, RIGHT), successors(self.spec, c)):
            try:
                if evaluate_from(self.spec, child, self._values):
                    return label
            except MachineError:
                break
        return LEFT


class DefectDigit(HonestATM):
    """Shifts digit j of configuration i cyclically by delta."""

    def __init__(self, spec: MachineSpec, block: int, position: int, delta: int, **kwargs) -> None:
        super().__init__(spec, **kwargs)
        if delta % self.dm.max_digit == 0:
            raise SpecError(f"A shift by {delta} leaves every digit unchanged")
        self.block, self.position, self.delta = block, position, delta

    def edit_block(self, block: int, c: Configuration) -> Optional[list[str]]:
        tokens = list(c.symbols)
        if block != self.block:
            return tokens
        if not 1 <= self.position <= len(tokens):
            raise SpecError(
                f"Digit position {self.position} is outside configuration {block} of length {len(tokens)}"
            )
        digit = self.dm[tokens[self.position - 1]]
        shifted = (digit - 1 + self.delta) % self.dm.max_digit + 1
        tokens[self.position - 1] = self.dm.symbol(shifted)
        return tokens


class SkipConfig(HonestATM):
    def __init__(self, spec: MachineSpec, block: int, **kwargs) -> None:
        super().__init__(spec, **kwargs)
        self.block = block

    def edit_block(self, block: int, c: Configuration) -> Optional[list[str]]:
        return None if block == self.block else list(c.symbols)


class WrongLength(HonestATM):
    """Pads configuration i with one extra blank before its last cell."""

    def __init__(self, spec: MachineSpec, block: int = 2, **kwargs) -> None:
        super().__init__(spec, **kwargs)
        self.block = block

    def edit_block(self, block: int, c: Configuration) -> Optional[list[str]]:
        tokens = list(c.symbols)
        if block == self.block:
            tokens.insert(len(tokens) - 1, BLANK)
        return tokens


class PrematureAccept(HonestATM):
    """Sends c1, then a fabricated configuration whose successor accepts."""

    def __init__(self, spec: MachineSpec, **kwargs) -> None:
        super().__init__(spec, **kwargs)
        self.fabricated = self._fabricate(spec)

    @staticmethod
    def _fabricate(spec: MachineSpec) -> list[str]:
        for (state, symbol), transitions in sorted(spec.delta.items()):
            if any(t.state == spec.accept for t in transitions):
                return [spec.terminal, state, symbol, spec.terminal]
        raise SpecError(f"No transition of {spec.name or 'the machine'} enters {spec.accept}")

    def edit_block(self, block: int, c: Configuration) -> Optional[list[str]]:
        return list(c.symbols) if block == 1 else list(self.fabricated)

    def stop_after(self, block: int, successor: Configuration) -> bool:
        return block >= 2

    def symbols(self, x: str, coins: tuple[str, ...]) -> Iterator[str]:
        c = initial_config(self.spec, x)
        yield from c.symbols
        yield from (DOLLAR, DOLLAR)
        yield from self.fabricated
        yield from (DOLLAR, DOLLAR)


def parse_prover_spec(text: str, strategy: Sequence[str] = ()) -> ProverSpec:
    """Parse a prover description from the command line or an API request.

    Args:
        text: One of "honest", "defect-digit:2:3:+1", "skip-config:2",
            "premature-accept", "silent" or "wrong-length:2".
        strategy: `state=l` entries fixing the branch taken at universal states.

    Returns:
        The validated ProverSpec.

    Raises:
        SpecError: If the kind is unknown or its parameters are malformed.
    """
    table = {}
    for entry in strategy:
        key, sep, value = entry.partition("=")
        if not sep:
            raise SpecError(f"Strategy entry {entry!r} must look like q=l")
        table[key.strip()] = value.strip()

    name, *args = text.strip().split(":")
    try:
        kind = ProverKind(name)
    except ValueError:
        raise SpecError(f"Unknown prover kind {name!r}") from None
    try:
        numbers = [int(a) for a in args]
    except ValueError:
        raise SpecError(f"Prover parameters must be integers: {text!r}") from None

    if kind is ProverKind.DEFECT_DIGIT:
        if len(numbers) != 3:
            raise SpecError("defect-digit takes block:position:delta")
        return ProverSpec(
            kind=kind, block=numbers[0], position=numbers[1], delta=numbers[2], strategy=table
        )
    if kind in (ProverKind.SKIP_CONFIG, ProverKind.WRONG_LENGTH):
        if len(numbers) > 1:
            raise SpecError(f"{kind.value} takes a single block number")
        return ProverSpec(kind=kind, block=numbers[0] if numbers else 2, strategy=table)
    if numbers:
        raise SpecError(f"{kind.value} takes no parameters")
    return ProverSpec(kind=kind, strategy=table)


def make_prover(ps: ProverSpec, spec: MachineSpec) -> ProverStrategy:
    """Instantiate the strategy described by `ps` for `spec`."""
    match ps.kind:
        case ProverKind.HONEST_DTM | ProverKind.HONEST_ATM:
            if spec.kind is MachineKind.DTM:
                return HonestDTM(spec)
            return HonestATM(spec, ps.strategy)
        case ProverKind.DEFECT_DIGIT:
            return DefectDigit(spec, ps.block, ps.position, ps.delta, strategy=ps.strategy)
        case ProverKind.SKIP_CONFIG:
            return SkipConfig(spec, ps.block, strategy=ps.strategy)
        case ProverKind.PREMATURE_ACCEPT:
            return PrematureAccept(spec, strategy=ps.strategy)
        case ProverKind.SILENT:
            return SilentProver()
        case ProverKind.WRONG_LENGTH:
            return WrongLength(spec, ps.block, strategy=ps.strategy)
    raise SpecError(f"Unsupported prover kind {ps.kind}")
