"""Operator surface: role-scoped command bus, HTTP+JSON API, interactive
shell, and the scenario runner."""

from .bus import CommandBus, MUTATING_OPS
from .roles import ROLES, Role, load_token_table

__all__ = ["CommandBus", "MUTATING_OPS", "ROLES", "Role", "load_token_table"]
