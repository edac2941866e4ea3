"""relnav: single-beacon relative acoustic navigation for small AUV fleets.

Signal-level simulation and the full receive-side stack: chirp template
banks, PHAT matched-filter ranging, pair-decomposed beamforming, a factored
particle filter, beacon-relative behaviors, mission orchestration, and a
telemetry/control bridge for an operator console.
"""

__version__ = "0.1.0"
