"""viskern: visualization-kernel benchmark harness.

Three kernels (Gaussian stencil smoothing, Marching Cubes isocontouring, RK4
particle advection), each in a coarse loop-parallel style and a data-parallel
worklet style, instrumented with marker-region performance counters and driven
by the `bench` command line.
"""

__version__ = "0.1.0"
