from contextlib import contextmanager
from typing import Annotated, Iterator

from fastapi import Depends, status
from fastapi.exceptions import HTTPException

from qamlab.core.config import Settings, get_settings
from qamlab.core.errors import InvariantViolation, SpecError

SettingsDep = Annotated[Settings, Depends(get_settings)]


@contextmanager
def engine_errors() -> Iterator[None]:
    """
    Map engine failures onto HTTP errors: anything the caller can fix is a 422,
    a failed exactness check is a 500.
    """
    try:
        yield
    except SpecError as e:
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=str(e))
    except InvariantViolation as e:
        raise HTTPException(status_code=status.HTTP_500_INTERNAL_SERVER_ERROR, detail=str(e))
