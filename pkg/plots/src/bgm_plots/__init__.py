"""Readers and renderers for boosted-generative-model run artifacts.

These scripts consume the files the experiment runner writes (grid.csv with
its .meta.json sidecar, metrics.json) and produce images.  They never
modify inputs and re-running them on the same artifacts yields identical
images.
"""

__version__ = "0.1.0"
