"""Exception types shared across the package."""


class ShopSimError(Exception):
    """Base class for all package-specific errors."""


class InvalidPoint(ShopSimError):
    """A point with non-finite coordinates was rejected."""


class InvalidRange(ShopSimError):
    """A numeric range was empty or inverted."""


class InsufficientCatalog(ShopSimError):
    """The catalog has too few eligible items for a shopping list."""


class DimensionError(ShopSimError):
    """A joint vector or matrix has the wrong length/shape."""


class IkFailure(ShopSimError):
    """Inverse kinematics did not converge within the iteration budget."""


class SamplingExhausted(ShopSimError):
    """Roadmap sampling rejected nearly every candidate configuration."""


class StartInCollision(ShopSimError):
    """A planning query started from a configuration in collision."""


class NoPath(ShopSimError):
    """No collision-free path connects the query endpoints."""


class GoalBlocked(ShopSimError):
    """No free base pose exists along the item's outward axis."""


class InvalidEndpoint(ShopSimError):
    """A grid query started or ended on an occupied cell."""


class Unreachable(ShopSimError):
    """A tour instance contains indices with no finite pairwise cost."""

    def __init__(self, indices):
        super().__init__(f"unreachable indices: {sorted(indices)}")
        self.indices = list(indices)


class FollowTimeout(ShopSimError):
    """The path follower stalled before reaching its final waypoint."""


class FollowAbort(ShopSimError):
    """The path follower predicted a collision and stopped."""


class StreamError(ShopSimError):
    """A sensor stream violated timestamp monotonicity."""


class NoInstance(ShopSimError):
    """No pickable item instance was available to select."""


class PlanInfeasible(ShopSimError):
    """The requested grasp type cannot be anchored on this item."""


class SignalError(ShopSimError):
    """Grasp verification was called without the signals its tool needs."""


class FsmViolation(ShopSimError):
    """An event was raised in a state that has no edge for it."""


class ConfigError(ShopSimError):
    """A configuration file or argument set is inconsistent."""


class EmptyInput(ShopSimError):
    """A metric was requested over an empty log collection."""


class TaxonomyError(ShopSimError):
    """A run log carries a failure cause missing from the taxonomy."""
