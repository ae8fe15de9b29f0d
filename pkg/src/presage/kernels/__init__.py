"""Kernel corpus used by the campaigns."""

from .builder import FunctionBuilder, Loop
from .corpus import KERNELS, KernelSpec, benchmark_names, build, draw_sizes, gen_inputs, lookup

__all__ = [
    "FunctionBuilder", "KERNELS", "KernelSpec", "Loop", "benchmark_names", "build",
    "draw_sizes", "gen_inputs", "lookup",
]
