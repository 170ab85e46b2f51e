"""mergedse: merge-aware HW/SW partitioning and early DSE over a mini-IR."""

__version__ = "0.1.0"
