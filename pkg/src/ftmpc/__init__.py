"""Fault-tolerant model-predictive trajectory tracking for an over-actuated
vehicle with wheel-individual steering, drive, and brake actuation.

The package pairs an adaptive MPC tracking controller with a double-track
simulation plant and a catalog of actuator degradations, so closed-loop
tracking quality can be evaluated before and after controller
reconfiguration.
"""

__version__ = "0.1.0"

from .params import ActuatorLimits, TireParams, VehicleParams  # noqa: F401
