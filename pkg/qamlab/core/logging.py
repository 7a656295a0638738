import logging

from qamlab.core.config import settings

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(level: str | None = None) -> logging.Logger:
    """Attach a single stream handler to the package logger.

    Safe to call repeatedly; later calls only adjust the level.
    """
    logger = logging.getLogger("qamlab")
    logger.setLevel(level or settings.LOG_LEVEL)

    if not any(getattr(h, "_qamlab", False) for h in logger.handlers):
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handler._qamlab = True  # type: ignore[attr-defined]
        logger.addHandler(handler)
    logger.propagate = False

    return logger
