"""Exception hierarchy shared by every polygate layer.

Two broad families matter to the gateway's HTTP mapping: UserError subclasses
become 400 responses, UnavailableError subclasses become 503. Anything else
escaping a request handler is a 500.
"""


class PolygateError(Exception):
    """Base class for all polygate errors."""


class UserError(PolygateError):
    """The request (query text, spec, data) is at fault."""


class UnavailableError(PolygateError):
    """A required engine is not reachable right now."""


class ParseError(UserError):
    """Query text rejected; carries a 1-based position and offending token."""

    def __init__(self, message, line, col, token):
        super().__init__(message)
        self.line = line
        self.col = col
        self.token = token

    def position(self):
        return f"{self.line}:{self.col}"

    def __str__(self):
        return f"{super().__str__()} at {self.line}:{self.col} (near {self.token!r})"


class PlanError(UserError):
    """Query is well-formed but cannot be compiled or planned."""


class CoerceError(UserError):
    """Value cannot be converted to the requested kind."""


class SchemaMismatch(UserError):
    """Rows or cells do not conform to the object's schema."""


class DuplicateObject(UserError):
    """An object with that name already exists."""


class NoSuchObject(UserError):
    """No object with that name exists."""


class NoSuchEngine(UserError):
    """No engine with that name/id is registered."""


class IslandKindMismatch(UserError):
    """Object island does not match the hosting engine's kind."""


class KindMismatch(UserError):
    """Engine is of the wrong kind for the requested operation."""


class CoordOutOfBounds(UserError):
    """Array cell coordinate outside the declared box."""


class InvalidRange(UserError):
    """Scan range has start > end."""


class SpecMismatch(UserError):
    """A cast mapping spec does not fit the source result schema."""


class DuplicateCoordinate(UserError):
    """Two source rows map to the same array coordinate."""


class NullCoordinate(UserError):
    """A dimension column holds Null; coordinates must be concrete."""


class SnapshotError(PolygateError):
    """A snapshot file is malformed."""


class ConfigError(PolygateError):
    """Cluster config file is invalid."""


class BindError(PolygateError):
    """The HTTP listener could not bind its address."""


class EngineUnavailable(UnavailableError):
    """The engine named in .engine is down."""

    def __init__(self, message, engine=None):
        super().__init__(message)
        self.engine = engine


class NoUpEngineForIsland(UnavailableError):
    """No engine of the island named in .island is up."""

    def __init__(self, message, island=None):
        super().__init__(message)
        self.island = island
