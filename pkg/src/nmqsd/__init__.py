"""Non-Markovian quantum state diffusion solver with an adaptive operator hierarchy.

The package simulates open two-level (and general d-level) systems coupled to
a bosonic environment with an exponentially decaying memory kernel.  The
stochastic Schroedinger equation is closed with a hierarchy of auxiliary
system operators that is truncated adaptively, trajectory by trajectory.

Layout:

* :mod:`nmqsd.operators`   dense operator helpers (commutators, trace norms)
* :mod:`nmqsd.noise`       exact sampling of the colored driving noise
* :mod:`nmqsd.hierarchy`   auxiliary-operator hierarchy and its right-hand side
* :mod:`nmqsd.trajectory`  single-trajectory integration
* :mod:`nmqsd.ensemble`    Monte Carlo averaging, error estimates
* :mod:`nmqsd.reference`   independent low-order reference equations
* :mod:`nmqsd.config`      run configuration parsing
* :mod:`nmqsd.outputs`     CSV / metadata writers
* :mod:`nmqsd.cli`         command line entry point
"""

__version__ = "0.1.0"
