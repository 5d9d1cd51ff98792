import logging

from rich.console import Console
from rich.logging import RichHandler

_configured = False


def configure_logging(level: str = "INFO") -> None:
    """Install a rich handler on the ``pbn`` logger (idempotent).

    Records go to stderr so that tables written to stdout stay parseable.
    """
    global _configured
    logger = logging.getLogger("pbn")
    logger.setLevel(level.upper())
    if _configured:
        return
    handler = RichHandler(console=Console(stderr=True), rich_tracebacks=True, show_path=False)
    handler.setFormatter(logging.Formatter("%(message)s", datefmt="[%X]"))
    logger.addHandler(handler)
    _configured = True
