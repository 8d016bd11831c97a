"""Assembly line worker integration and balancing (ALWIBP) toolkit."""

from .instance import (Instance, InfeasibleError, InstanceError, LineSolution, Station,
                       WorkerProfile, big_m, close_and_sink, positional_weights, reverse_graph,
                       validate, violations)

__version__ = "0.1.0"
