"""Detection of dc jumps (large Barkhausen jumps) in single-axis magnetometer windows."""

__version__ = "0.1.0"
