"""Security analysis toolkit for high-dimensional time-bin key distribution.

Photon pairs correlated across M time bins carry log2(M) bits each; an
interferometric check on randomly chosen frames bounds what an
intercepting measurement can learn.  This package models the states
(`statevec`), the interferometer statistics (`franson`), the
bin-diagonal intercept measurements (`attacks`), the resulting
information/disturbance trade-offs (`metrics`), a Monte Carlo protocol
simulation (`mcsim`), and the binary-tree analyzer that measures the
conjugate basis directly (`mubnet`).  The `franson-sec` console script
exposes sweeps, simulations, formula verification, and analyzer
synthesis.
"""
from __future__ import annotations

__version__ = "0.1.0"

from . import attacks, franson, mcsim, metrics, mubnet, statevec

__all__ = [
    "__version__",
    "attacks",
    "franson",
    "mcsim",
    "metrics",
    "mubnet",
    "statevec",
]
