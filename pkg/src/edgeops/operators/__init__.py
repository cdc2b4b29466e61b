from .early_exit import ExitReport, early_exit
from .hybrid import compose_qe, compose_qep
from .oracle import brute_force_partition, enumerate_valid_cuts
from .partition import (PartitionPlan, Strategy, apply_partition, find_partition_branch_interior,
                        find_partition_single, find_partition_two_branch, partition_auto, rejoin)
from .quantize import QuantReport, make_calibration, quantize_static

__all__ = [
    "ExitReport", "early_exit", "compose_qe", "compose_qep", "brute_force_partition",
    "enumerate_valid_cuts", "PartitionPlan", "Strategy", "apply_partition",
    "find_partition_branch_interior", "find_partition_single", "find_partition_two_branch",
    "partition_auto", "rejoin", "QuantReport", "make_calibration", "quantize_static",
]
