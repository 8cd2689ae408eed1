import logging

from rich.logging import RichHandler

PACKAGE = "nccw"


def package_level(verbose: int) -> int:
    if verbose >= 2:
        return logging.DEBUG
    if verbose == 1:
        return logging.INFO
    return logging.WARNING


def configure_logging(verbose: int = 0) -> None:
    """
    Route every logger through one RichHandler.

    Module loggers under ``nccw`` follow -v/-vv. The root logger, and with it
    jsonschema, sympy, numpy and scipy, stays at WARNING until -vvv.
    """
    logging.basicConfig(
        level=logging.DEBUG if verbose >= 3 else logging.WARNING,
        format="%(name)s: %(message)s" if verbose >= 2 else "%(message)s",
        handlers=[RichHandler(rich_tracebacks=True, show_path=False, show_time=False)],
        force=True,
    )
    logging.getLogger(PACKAGE).setLevel(package_level(verbose))
