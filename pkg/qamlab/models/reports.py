import json
from typing import Any, Optional

from qamlab.models.base import ExactModel
from qamlab.models.protocol import ProtocolMode, ProtocolOutcome, RoundResult
from qamlab.models.rational import ExactRational
from qamlab.models.subset_sum import SubsetSumRound


class SubsetSumRun(ExactModel):
    """Ledger of one committed selection and the overall acceptance it implies."""

    round: SubsetSumRound
    overall_accept: ExactRational


class ProtocolRun(ExactModel):
    mode: ProtocolMode
    max_transcript: int
    outcome: ProtocolOutcome
    # Per-round paths and traces, only kept when tracing
    rounds: list[RoundResult] = []


class RunReport(ExactModel):
    """
    What every CLI subcommand prints and every route returns.

    `arguments` echoes the invocation; `result` is the engine's own model.
    """

    command: str
    arguments: dict[str, Any] = {}
    result: Any = None
    trace_file: Optional[str] = None

    def to_json(self) -> str:
        return json.dumps(self.to_report(), sort_keys=True, ensure_ascii=False, indent=2) + "\n"
