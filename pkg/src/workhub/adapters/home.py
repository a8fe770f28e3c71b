"""Home-directory ownership check shared by every workspace application.

A provisioned home carries a read-only `.id` marker holding the owning
user's id; applications refuse to serve anyone else even when their token
is valid (misconfiguration defense).
"""

from __future__ import annotations

from pathlib import Path

MARKER_FILENAME = ".id"


def check_home_ownership(home, verified_user: str) -> bool:
    """True iff the marker exists and its trimmed content equals
    verified_user. Missing or unreadable markers fail closed."""
    if not verified_user:
        return False
    marker = getattr(home, "marker_path", None)
    if marker is None:
        marker = Path(home) / MARKER_FILENAME
    try:
        content = Path(marker).read_text()
    except OSError:
        return False
    return content.strip() == verified_user
