from typing import Any, Optional

from fastapi import APIRouter
from pydantic import BaseModel, Field

from qamlab.api.deps import engine_errors
from qamlab.engines.runs import run_tree_eval


class TreeRequest(BaseModel):
    spec: str
    depth_cap: Optional[int] = Field(default=None, ge=0)
    oracle: bool = False


router = APIRouter(prefix="/trees", tags=["trees"])


@router.post("/evaluate")
def evaluate_tree(body: TreeRequest) -> Any:
    with engine_errors():
        return run_tree_eval(body.spec, body.depth_cap, body.oracle).to_report()
