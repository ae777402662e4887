"""radionet: synchronous radio-network simulation and leader election.

Subpackages cover the simulation engine (packet model without collision
detection, and the beep model), the decay broadcast family, superimposed
codes, the two leader-election protocol stacks, and an experiment harness
with a CLI.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .engine import Model
from .graphs import Graph, bfs_distances, load_graph
from .rng import RandomSource

__version__ = "0.1.0"

__all__ = [
    "Graph",
    "Model",
    "RandomSource",
    "bfs_distances",
    "load_graph",
    "KERNEL_BACKEND",
]
