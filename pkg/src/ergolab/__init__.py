"""Numerical laboratory for equilibration and entanglement structure in
finite spin chains.

Submodules are imported explicitly (``from ergolab import states``) so that
the command-line entry point can configure thread limits before any heavy
numerical import happens.
"""

__version__ = "0.1.0"

CATALOG_VERSION = "1"
