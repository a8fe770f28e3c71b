"""First-login home provisioning.

Runs as its own privilege context: it is the only component that writes
under the shared storage root. It creates the user's home, seeds starter
files, and writes the read-only `.id` ownership marker that applications
check before serving anyone.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from ..adapters.home import MARKER_FILENAME
from .templates import validate_user_id

MARKER_MODE = 0o444


class AlreadyProvisionedError(Exception):
    pass


class StorageFailureError(Exception):
    pass


@dataclass(frozen=True)
class HomeDirectory:
    root: Path
    user: str
    path: Path
    marker_path: Path


class Provisioner:
    def __init__(self, shared_root: str | Path, starter_files: Mapping[str, str] | None = None) -> None:
        self.shared_root = Path(shared_root)
        self.starter_files = dict(starter_files or {})

    def home_for(self, user: str) -> HomeDirectory:
        validate_user_id(user)
        path = self.shared_root / "home" / user
        return HomeDirectory(root=self.shared_root, user=user, path=path, marker_path=path / MARKER_FILENAME)

    def is_provisioned(self, user: str) -> bool:
        return self.home_for(user).path.exists()

    def provision(self, user: str, starter_files: Mapping[str, str] | None = None) -> HomeDirectory:
        """Create and seed the home; the `.id` marker ends up read-only to
        the workspace user (no write bits)."""
        home = self.home_for(user)
        if home.path.exists():
            raise AlreadyProvisionedError(f"home for {user!r} already exists")
        files = {**self.starter_files, **(starter_files or {})}
        try:
            home.path.mkdir(parents=True)
            for rel, content in files.items():
                target = home.path / rel
                target.parent.mkdir(parents=True, exist_ok=True)
                target.write_text(content)
            home.marker_path.write_text(user + "\n")
            os.chmod(home.marker_path, MARKER_MODE)
        except OSError as exc:
            raise StorageFailureError(str(exc)) from exc
        return home
