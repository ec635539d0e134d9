"""Vacuum entanglement harvesting by three detectors and its nonlocality.

Modules: ``windows`` (coupling profiles), ``correlator`` (smeared
amplitudes), ``wick`` (higher moments), ``rho`` (density matrix, filter),
``nonlocality`` (Svetlichny and hybrid-model tests), ``oracle`` (lattice
cross-check), ``config``/``pipeline``/``cli`` (orchestration).
"""

__version__ = "0.1.0"
