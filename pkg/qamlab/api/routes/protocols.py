from typing import Any, Optional

from fastapi import APIRouter
from pydantic import BaseModel, Field

from qamlab.api.deps import engine_errors
from qamlab.engines.runs import run_machine_protocol
from qamlab.models.protocol import ProtocolMode


class ProverRequest(BaseModel):
    kind: str = "honest"
    strategy: list[str] = []


class ProtocolRequest(BaseModel):
    """A machine-spec file, the input and the prover to run against."""

    machine: str
    input: str = ""
    prover: ProverRequest = ProverRequest()
    rounds: Optional[int] = Field(default=None, ge=1)
    max_transcript: Optional[int] = Field(default=None, ge=1)
    trace: bool = False


router = APIRouter(prefix="/protocols", tags=["protocols"])


def _run(body: ProtocolRequest, mode: ProtocolMode) -> Any:
    with engine_errors():
        report = run_machine_protocol(
            body.machine,
            body.input,
            body.prover.kind,
            strategy=body.prover.strategy,
            rounds=body.rounds,
            max_transcript=body.max_transcript,
            trace=body.trace,
            mode=mode,
        )
    return report.to_report()


@router.post("/dtm")
def dtm_protocol(body: ProtocolRequest) -> Any:
    """Weak protocol on a DTM."""
    return _run(body, ProtocolMode.WEAK)


@router.post("/atm")
def atm_protocol(body: ProtocolRequest) -> Any:
    """Strong protocol on a normal-form ATM."""
    return _run(body, ProtocolMode.STRONG)
