"""swarmtrack: a seedable simulator of a UAV radar fleet tracking a flying target.

Each UAV carries a monostatic radar with some mix of ranging, bearing, and
Doppler capability, runs a local extended Kalman filter over measurements
shared via a range-limited multi-hop network, and steers itself by
descending an information-volume cost under kinematic, anti-collision, and
obstacle constraints.
"""

__version__ = "0.1.0"
