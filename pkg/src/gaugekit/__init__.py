"""Dense simulation of finite-group lattice gauging with measurement and feedforward.

Builds quantum double ground states on closed 2d cellulations by gauging a
chain of abelian normal subgroups, one measurement round per chain link, with
outcome-dependent string corrections applied classically between rounds.
"""

from gaugekit import cellulation, feedforward, gates, groups, kwmaps, protocols, register, verify

__all__ = [
    "cellulation",
    "feedforward",
    "gates",
    "groups",
    "kwmaps",
    "protocols",
    "register",
    "verify",
]

__version__ = "0.1.0"
