from typing import Any, Optional

from fastapi import APIRouter
from pydantic import BaseModel, Field

from qamlab.api.deps import SettingsDep, engine_errors
from qamlab.engines.runs import run_q1afa


class Q1afaRequest(BaseModel):
    machine: str
    input: str = ""
    depth: Optional[int] = Field(default=None, ge=0)


router = APIRouter(prefix="/alternation", tags=["alternation"])


@router.post("/q1afa")
def q1afa(body: Q1afaRequest, settings: SettingsDep) -> Any:
    """Search for an accepting subtree of a DTM, ATM or q1afa machine file.

    Raises:
        HTTPException: 422 for invalid machines or uncertified halting where
            certification is required, 500 if an exact search was inconclusive.
    """
    depth = settings.DEFAULT_SEARCH_DEPTH if body.depth is None else body.depth
    with engine_errors():
        return run_q1afa(body.machine, body.input, depth).to_report()
