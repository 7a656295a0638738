from fastapi import APIRouter

from qamlab.api.routes import (
    alternation_router,
    halting_router,
    protocols_router,
    root_router,
    subset_sum_router,
    trees_router,
)

api_router = APIRouter()
api_router.include_router(root_router)
api_router.include_router(subset_sum_router)
api_router.include_router(protocols_router)
api_router.include_router(alternation_router)
api_router.include_router(trees_router)
api_router.include_router(halting_router)
