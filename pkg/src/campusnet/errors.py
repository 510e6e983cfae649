"""Exception types shared across the simulator and management plane."""


class CampusNetError(Exception):
    """Base class for all simulator errors."""


# -- simcore ---------------------------------------------------------------

class PastTime(CampusNetError):
    """An event was scheduled before the current virtual clock."""


# -- topology --------------------------------------------------------------

class ParseError(CampusNetError):
    def __init__(self, line_no, message):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class DanglingReference(CampusNetError):
    """An entity refers to another entity that does not exist."""


class DuplicateMac(CampusNetError):
    pass


class RingNotRedundant(CampusNetError):
    """A stack ring does not survive the loss of a full UPS feed."""


class UnknownTarget(CampusNetError):
    pass


class NoSpare(CampusNetError):
    pass


class ElementNotFailed(CampusNetError):
    pass


# -- stp -------------------------------------------------------------------

class NoConvergence(CampusNetError):
    pass


class NotEdgePort(CampusNetError):
    """Portfast requested on a port carrying an inter-switch link."""


# -- l2switch --------------------------------------------------------------

class VlanNotAllowed(CampusNetError):
    pass


class UnknownVlan(CampusNetError):
    pass


class TrunkPort(CampusNetError):
    pass


class UnknownPort(CampusNetError):
    pass


# -- fwengine --------------------------------------------------------------

class UnresolvedName(CampusNetError):
    pass


class DuplicateChain(CampusNetError):
    pass


class ValidationFailed(CampusNetError):
    pass


class NoNatRule(CampusNetError):
    pass


# -- routerha --------------------------------------------------------------

class NoRoute(CampusNetError):
    pass


class PeerDown(CampusNetError):
    pass


class BothDown(CampusNetError):
    pass


# -- ghosting --------------------------------------------------------------

class TwoServersOneVlan(CampusNetError):
    pass


class PortAlreadyGhosting(CampusNetError):
    pass


class EmptySession(CampusNetError):
    pass


class SessionNotActive(CampusNetError):
    pass


# -- inventory -------------------------------------------------------------

class UnknownHost(CampusNetError):
    pass


class Unpatched(CampusNetError):
    pass


class UnknownView(CampusNetError):
    pass


class Forbidden(CampusNetError):
    pass


# -- control ---------------------------------------------------------------

class ScriptError(CampusNetError):
    def __init__(self, message, line_no=None):
        super().__init__(message)
        self.line_no = line_no
