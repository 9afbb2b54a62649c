"""impdr: informative monitoring with a receding-horizon planner.

Library for simulating fleets of acceleration-limited surface vehicles that
keep a field of growing point rewards low, planned step by step by a
nonlinear model-predictive controller, plus grid-based team-orienteering
baselines and a kinematic orienteering mode for benchmark instances.
"""

__version__ = "0.1.0"
