from typing import Any

from fastapi import APIRouter

from qamlab.api.deps import SettingsDep

router = APIRouter()


@router.get("/")
def ping() -> Any:
    return "pong"


@router.get("/settings")
def read_settings(settings: SettingsDep) -> Any:
    """
    Engine limits in effect for this server.
    """
    return {
        "display_digits": settings.DISPLAY_DIGITS,
        "default_search_depth": settings.DEFAULT_SEARCH_DEPTH,
        "adaptive_round_horizon": settings.ADAPTIVE_ROUND_HORIZON,
        "max_transcript_factor": settings.MAX_TRANSCRIPT_FACTOR,
        "trace_enabled": settings.TRACE_ENABLED,
    }
