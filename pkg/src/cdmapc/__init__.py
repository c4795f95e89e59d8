"""Distributed uplink CDMA power control from large-system SINR analysis."""

from .errors import ConfigurationError, ConvergenceError, FeasibilityError
from .model import (GainQuantileTable, SystemConfig, UserChannelSet,
                    build_gain_quantile_table, sample_channels, sample_spreading_codes)
from .power_control import (PowerAllocation, conventional_iterative_allocation,
                            equal_received_power_allocation, proposed_linear_allocation,
                            proposed_sic_allocation)
from .receivers import ReceiverInput, sinr_linear_all, sinr_sic

__all__ = [
    "ConfigurationError", "ConvergenceError", "FeasibilityError",
    "GainQuantileTable", "SystemConfig", "UserChannelSet",
    "build_gain_quantile_table", "sample_channels", "sample_spreading_codes",
    "PowerAllocation", "conventional_iterative_allocation",
    "equal_received_power_allocation", "proposed_linear_allocation",
    "proposed_sic_allocation", "ReceiverInput", "sinr_linear_all", "sinr_sic",
]
