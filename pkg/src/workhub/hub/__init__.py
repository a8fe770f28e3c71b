"""Control plane: stack templates, home provisioning, the connect flow,
and the hub HTTP API."""

from .api import HubApp
from .provision import (
    AlreadyProvisionedError,
    HomeDirectory,
    Provisioner,
    StorageFailureError,
)
from .stacks import (
    BackendFailureError,
    ConnectOutcome,
    ControlPlane,
    IdentityMismatchError,
    InventorySnapshot,
    NoSuchStackError,
    RoleRecord,
    StackExistsError,
    UnknownApplicationError,
    WorkspaceStack,
)
from .templates import (
    MountSpec,
    RolePolicy,
    StackTemplate,
    TemplateError,
    UnsafeUserIdError,
    builtin_templates,
    load_template,
    load_templates_dir,
    render_task_definition,
    template_from_mapping,
    validate_user_id,
)

__all__ = [
    "AlreadyProvisionedError",
    "BackendFailureError",
    "ConnectOutcome",
    "ControlPlane",
    "HomeDirectory",
    "HubApp",
    "IdentityMismatchError",
    "InventorySnapshot",
    "MountSpec",
    "NoSuchStackError",
    "Provisioner",
    "RolePolicy",
    "RoleRecord",
    "StackExistsError",
    "StackTemplate",
    "StorageFailureError",
    "TemplateError",
    "UnknownApplicationError",
    "UnsafeUserIdError",
    "WorkspaceStack",
    "builtin_templates",
    "load_template",
    "load_templates_dir",
    "render_task_definition",
    "template_from_mapping",
    "validate_user_id",
]
