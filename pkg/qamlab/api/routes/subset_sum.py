from typing import Any, Optional

from fastapi import APIRouter
from pydantic import BaseModel

from qamlab.api.deps import engine_errors
from qamlab.engines.runs import run_subset_sum


class SubsetSumRequest(BaseModel):
    instance: str
    selection: Optional[list[int]] = None
    maximize: bool = False
    trace: bool = False


router = APIRouter(prefix="/subset-sum", tags=["subset-sum"])


@router.post("")
def subset_sum(body: SubsetSumRequest) -> Any:
    """Run the SUBSET-SUM protocol.

    With a selection the prover commits to it for one round; otherwise the
    best selection over all subsets is reported.

    Raises:
        HTTPException: 422 for a malformed instance or selection.
    """
    selection = None if body.maximize else body.selection
    with engine_errors():
        return run_subset_sum(body.instance, selection, trace=body.trace).to_report()
