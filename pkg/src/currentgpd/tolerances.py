"""Numeric tolerances used across the library.

Defaults can be overridden per call or through the CLI config.
"""

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    tol_chart: float = 1e-9       # point equality, composability, chart round trips
    h_fd: float = 1e-5            # finite-difference step for derivative cross-checks
    tol_fd: float = 1e-6          # relative AD-vs-FD agreement
    tol_theta: float = 1e-10      # (projection, sigma) inversion residual
    tol_rank: float = 1e-8        # relative singular-value floor for rank tests
    tol_bracket: float = 1e-5     # algebroid bracket identities

    def with_overrides(self, **kwargs) -> "Tolerances":
        return replace(self, **kwargs)


DEFAULT = Tolerances()

TOLERANCE_KEYS = ("tol_chart", "h_fd", "tol_fd", "tol_theta", "tol_rank", "tol_bracket")
