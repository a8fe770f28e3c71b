"""Per-application stack templates and task-definition rendering.

A template declares the container image, port, environment, bind mounts
(host side relative to the shared storage root, with a `{user}`
placeholder), the health check, and the role policy. Rendering
substitutes the user id, which must be a single safe path segment, and
refuses any mount that would escape the shared root.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import yaml

from ..backend.interface import TaskDefinitionRecord

USER_ID_RE = re.compile(r"^[a-z0-9_-]{1,32}$")
USER_PLACEHOLDER = "{user}"


class UnsafeUserIdError(ValueError):
    pass


class TemplateError(ValueError):
    pass


@dataclass(frozen=True)
class MountSpec:
    container: str
    host: str  # relative to the shared root; may contain {user}


@dataclass(frozen=True)
class RolePolicy:
    document: Mapping[str, object]
    boundary_policy: str

    def __post_init__(self) -> None:
        if not self.boundary_policy:
            raise TemplateError("role policy requires a boundary policy reference")


@dataclass(frozen=True)
class StackTemplate:
    application: str
    display_name: str
    image: str
    container_port: int
    environment: Mapping[str, str]
    mounts: tuple[MountSpec, ...]
    health_check_path: str
    expected_status: frozenset[int]
    role_policy: RolePolicy
    cull_overrides: Mapping[str, float] = field(default_factory=dict)
    starter_files: Mapping[str, str] = field(default_factory=dict)


def validate_user_id(user: str) -> str:
    if not USER_ID_RE.match(user or ""):
        raise UnsafeUserIdError(f"user id {user!r} is not a safe path segment")
    return user


def _substitute(text: str, user: str) -> str:
    return text.replace(USER_PLACEHOLDER, user)


def render_task_definition(
    template: StackTemplate,
    user: str,
    shared_root: str | Path,
    extra_env: Mapping[str, str] | None = None,
) -> TaskDefinitionRecord:
    """Pure function of (template, user, root): substituted environment and
    mounts, with every host path kept under the shared root."""
    validate_user_id(user)
    root = Path(shared_root).resolve()
    mounts: dict[str, str] = {}
    for spec in template.mounts:
        host_rel = _substitute(spec.host, user).lstrip("/")
        host_abs = (root / host_rel).resolve()
        if host_abs != root and root not in host_abs.parents:
            raise TemplateError(f"mount {spec.host!r} escapes the shared root")
        mounts[_substitute(spec.container, user)] = str(host_abs)
    environment = {k: _substitute(v, user) for k, v in template.environment.items()}
    if extra_env:
        environment.update(extra_env)
    return TaskDefinitionRecord(
        image=template.image,
        container_port=template.container_port,
        environment=environment,
        mounts=mounts,
        log_stream=f"workspaces/{user}/{template.application}",
    )


def render_health_check_path(template: StackTemplate, user: str) -> str:
    return _substitute(template.health_check_path, validate_user_id(user))


def load_template(path: str | Path) -> StackTemplate:
    data = yaml.safe_load(Path(path).read_text())
    return template_from_mapping(data, source=str(path))


def template_from_mapping(data: Mapping, source: str = "<mapping>") -> StackTemplate:
    try:
        role = data.get("role_policy") or {}
        return StackTemplate(
            application=data["application"],
            display_name=data.get("display_name", data["application"]),
            image=data["image"],
            container_port=int(data["container_port"]),
            environment=dict(data.get("environment", {})),
            mounts=tuple(MountSpec(m["container"], m["host"]) for m in data.get("mounts", [])),
            health_check_path=data["health_check_path"],
            expected_status=frozenset(int(s) for s in data["expected_status"]),
            role_policy=RolePolicy(
                document=dict(role.get("document", {})),
                boundary_policy=role.get("boundary_policy", ""),
            ),
            cull_overrides={k: float(v) for k, v in (data.get("cull") or {}).items()},
            starter_files=dict(data.get("starter_files", {})),
        )
    except KeyError as exc:
        raise TemplateError(f"{source}: missing template field {exc}") from exc


def load_templates_dir(directory: str | Path) -> dict[str, StackTemplate]:
    templates = {}
    for path in sorted(Path(directory).glob("*.yaml")) + sorted(Path(directory).glob("*.yml")):
        template = load_template(path)
        templates[template.application] = template
    return templates


def builtin_templates() -> dict[str, StackTemplate]:
    """The three stock applications, mirroring the reference deployment's
    mount and health conventions."""
    boundary = "workspace-boundary"
    jupyter = StackTemplate(
        application="jupyter",
        display_name="Jupyter",
        image="jupyter-workspace",
        container_port=8888,
        environment={"BASE_URL": "/{user}/jupyter", "WORKSPACE_USER": "{user}"},
        mounts=(MountSpec("/home/jovyan", "home/{user}"),),
        health_check_path="/{user}/jupyter",
        expected_status=frozenset({302}),
        role_policy=RolePolicy({"statements": ["workspace-default"]}, boundary),
    )
    rstudio = StackTemplate(
        application="rstudio",
        display_name="RStudio",
        image="rstudio-workspace",
        container_port=8787,
        environment={"BASE_URL": "/{user}/rstudio", "WORKSPACE_USER": "{user}"},
        mounts=(MountSpec("/home/rstudio", "home/{user}"),),
        health_check_path="/ping",
        expected_status=frozenset({200}),
        role_policy=RolePolicy({"statements": ["workspace-default"]}, boundary),
    )
    vnc = StackTemplate(
        application="vnc",
        display_name="Desktop (VNC)",
        image="vnc-workspace",
        container_port=6901,
        environment={"BASE_URL": "/{user}/vnc", "WORKSPACE_USER": "{user}"},
        mounts=(MountSpec("/headless", "home/{user}"),),
        health_check_path="/{user}/vnc",
        expected_status=frozenset({200}),
        role_policy=RolePolicy({"statements": ["workspace-default"]}, boundary),
    )
    return {t.application: t for t in (jupyter, rstudio, vnc)}
