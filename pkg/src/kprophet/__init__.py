"""kprophet: certified k-window threshold policies for i.i.d. value streams.

Computes optimal and near-optimal stopping policies that use at most k
distinct thresholds over a horizon of n i.i.d. draws, certifies their
approximation factors against the prophet benchmark E[max] (closed forms,
breakpoint solvers, dual certificates, and a discretized-LP oracle), and
validates the resulting policies by Monte Carlo simulation on arbitrary
continuous distributions. A FastAPI service exposes the solvers; the CLI
is a thin client of that service.
"""

from .reporting import TOOL_VERSION as __version__

__all__ = ["__version__"]
