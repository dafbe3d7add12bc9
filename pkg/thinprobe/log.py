"""
Console logging for thinprobe.

Records render with the project prefix and a status tag, e.g.::

    [thinprobe] [OK] identity residual 3.1e-09
    [thinprobe] [WARN] eps=0.025 below floor, excluded from fit
    [thinprobe] [FAIL] I3 slope 2.41 < 2.85
"""

import logging
import os
import sys

PREFIX = "[thinprobe]"
BANNER = "=" * 70

_TAGS = {
    logging.DEBUG: "[i]",
    logging.INFO: "[OK]",
    logging.WARNING: "[WARN]",
    logging.ERROR: "[FAIL]",
    logging.CRITICAL: "[FAIL]",
}


class TagFormatter(logging.Formatter):
    """Prefix every record with the project name and a status tag."""

    def format(self, record):
        tag = getattr(record, "tag", None) or _TAGS.get(record.levelno, "[i]")
        return f"{PREFIX} {tag} {record.getMessage()}"


def configure(verbose=False, stream=None):
    """Attach a single tagged handler to the package logger.

    ``THINPROBE_VERBOSE=1`` enables debug output like ``verbose=True``.
    """
    if os.environ.get("THINPROBE_VERBOSE", "").lower() in ("1", "true", "yes"):
        verbose = True
    root = logging.getLogger("thinprobe")
    for handler in list(root.handlers):
        if getattr(handler, "_thinprobe", False):
            root.removeHandler(handler)
    handler = logging.StreamHandler(stream or sys.stderr)
    handler.setFormatter(TagFormatter())
    handler._thinprobe = True
    root.addHandler(handler)
    root.setLevel(logging.DEBUG if verbose else logging.INFO)
    root.propagate = False
    return root


def ok(logger, message, *args):
    """Log a passing verdict."""
    logger.info(message, *args, extra={"tag": "[OK]"})


def fail(logger, message, *args):
    """Log a failing verdict (a check, not a crash)."""
    logger.warning(message, *args, extra={"tag": "[FAIL]"})
