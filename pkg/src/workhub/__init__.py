"""Self-contained secure collaborative-workspace platform.

Subpackages: auth (token validation), gateway (authenticating reverse
proxy), hub (control plane), lifecycle (reconciliation and culling),
backend (simulated container runtime), adapters (per-application
authentication), hardening (egress controls).
"""

__version__ = "0.1.0"
