"""
Version information for thinprobe.

Format: VERSION_BRANCH_BUILD-YYYYMMDD-COMMITHASH, e.g.
``0.3.0-alpha_main_41-20261012-5e0c9ab``. The parsed form is what every
run manifest records under ``version``.
"""
import re

MAJOR = 0
MINOR = 3
PATCH = 0

# alpha, beta, rc1, ...; None for stable releases
PHASE = "alpha"

__version__ = "0.3.0-alpha_main_41-20261012-5e0c9ab"

_VERSION_RE = re.compile(
    r"^(?P<base>[^_]+)_(?P<branch>[^_]+)_(?P<build>\d+)(?:-(?P<date>\d{8}))?(?:-(?P<commit>[0-9a-f]+))?$"
)

_PHASE_SUFFIX = {"alpha": "a0", "beta": "b0"}


def get_version():
    """Return the full version string including branch and build info."""
    return __version__


def _semantic():
    base = f"{MAJOR}.{MINOR}.{PATCH}"
    return f"{base}-{PHASE}" if PHASE else base


def get_base_version():
    """Semantic version with optional phase, taken from ``__version__`` when it parses."""
    match = _VERSION_RE.match(__version__)
    return match["base"] if match else _semantic()


def get_version_dict():
    match = _VERSION_RE.match(__version__)
    if match is None:
        return {"full": __version__, "base": _semantic(), "branch": "unknown", "build": "0", "date": "", "commit": ""}
    fields = {key: value or "" for key, value in match.groupdict().items()}
    return {"full": __version__, **fields}


def get_pip_version():
    """
    PEP 440 form for setuptools: ``0.3.0a0`` on main, ``0.3.0a0.dev41`` elsewhere.
    """
    base = f"{MAJOR}.{MINOR}.{PATCH}"
    if PHASE:
        base += _PHASE_SUFFIX.get(PHASE, PHASE)
    info = get_version_dict()
    if info["branch"] in ("main", "unknown"):
        return base
    return f"{base}.dev{info['build'] or 0}"


VERSION = get_version()
BASE_VERSION = get_base_version()
PIP_VERSION = get_pip_version()
