"""Wi-Fi network slicing lab: packet simulator, QoS accounting and
state-augmented primal-dual slicing policies."""
from .domain import (ConfigError, DualMultipliers, FlowSpec, NetworkConfig,
                     NetworkRealization, QosSpec, SlaCategory, SliceAllocation,
                     WindowMetrics)
from .simulator import KERNEL

__version__ = "0.1.0"

__all__ = ["ConfigError", "DualMultipliers", "FlowSpec", "KERNEL", "NetworkConfig",
           "NetworkRealization", "QosSpec", "SlaCategory", "SliceAllocation",
           "WindowMetrics"]
