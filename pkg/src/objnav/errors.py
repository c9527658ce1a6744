"""Exception hierarchy shared across the package."""


class ObjNavError(Exception):
    """Base class for all package errors."""


class SceneError(ObjNavError, ValueError):
    pass


class SceneParseError(SceneError):
    def __init__(self, message, line=None, field=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)
        self.line = line
        self.field = field


class SceneInvariantError(SceneError):
    def __init__(self, invariant, message):
        super().__init__(f"{invariant}: {message}")
        self.invariant = invariant


class GenerationError(ObjNavError):
    pass


class NoInstanceError(ObjNavError, LookupError):
    pass


class UnreachableError(ObjNavError):
    pass


class MapDimensionError(ObjNavError, ValueError):
    pass


class OutOfMapError(ObjNavError):
    pass


class NoFrontierError(ObjNavError):
    """Raised when the map has no (reachable) frontier left."""


class SourcesBlockedError(ObjNavError, ValueError):
    pass


class PlannerSignal(ObjNavError):
    """Non-error outcomes of :func:`objnav.planner.next_action`."""


class AtGoal(PlannerSignal):
    pass


class Stuck(PlannerSignal):
    pass


class EpisodeSpecError(ObjNavError, ValueError):
    pass


class InfeasibleBinsError(ObjNavError):
    pass


class MetricsError(ObjNavError, ValueError):
    pass


class RerunMismatchError(ObjNavError):
    pass


class UnpairedEpisodesError(ObjNavError):
    def __init__(self, missing_a, missing_b):
        self.missing_a = sorted(missing_a)
        self.missing_b = sorted(missing_b)
        parts = []
        if self.missing_a:
            parts.append(f"missing from first: {', '.join(self.missing_a)}")
        if self.missing_b:
            parts.append(f"missing from second: {', '.join(self.missing_b)}")
        super().__init__("unpaired episodes; " + "; ".join(parts))


class ConfigError(ObjNavError, ValueError):
    pass
