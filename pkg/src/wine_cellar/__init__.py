"""wine-cellar: digital-twin simulator for wireless-augmented HPC interconnects.

Models terahertz/free-space-optical link budgets, ray-traces beams inside a
machine room with a ceiling reflector array, augments wired interconnect
topologies with wireless links, and reports latency, utilization and
benchmark-speedup metrics.
"""

__version__ = "0.1.0"
