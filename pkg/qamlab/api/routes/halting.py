from typing import Any

from fastapi import APIRouter
from pydantic import BaseModel

from qamlab.api.deps import engine_errors
from qamlab.engines.runs import run_halting_bound


class HaltingRequest(BaseModel):
    elements: str


router = APIRouter(prefix="/halting", tags=["halting"])


@router.post("/bound")
def halting_bound(body: HaltingRequest) -> Any:
    """Decide absolute halting of an elements file within N^2 steps."""
    with engine_errors():
        return run_halting_bound(body.elements).to_report()
