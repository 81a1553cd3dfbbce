"""Software twin of a wireless adapter for cable-driven surgical instruments.

Sub-modules:

* ``kinematics``  -- disc angles to tip pose, coupling, marker layout
* ``actuation``   -- stepper-motor twin (microsteps, backlash, noise, timing)
* ``protocol`` / ``controller`` -- firmware twin behind a line protocol
* ``stereo``      -- pinhole projection, triangulation, rig calibration
* ``calibration`` -- piecewise-linear maps from maxima measurements
* ``evaluation``  -- repeatability / hysteresis experiment and statistics
"""

__version__ = "0.1.0"
