"""campusnet — a discrete-event simulator of a multi-building campus
network (stacked cores, spanning-tree-paired access switches,
campus-wide VLANs, port security, redundant firewalling routers)
together with its management plane: inventory database, ghosting
orchestration, security monitoring, and an audited operator shell/API.
"""

__version__ = "0.1.0"

from .runtime import CampusRuntime  # noqa: F401
