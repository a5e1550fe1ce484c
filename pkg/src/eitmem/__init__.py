"""Slow-light delay lines and quantum memories in Lambda media.

Subpackages and modules:

- ``params``     physical parameters, derived quantities, validity checks
- ``sde``        positive-P stochastic simulation (compiled kernel + fallback)
- ``analytic``   linearised Heisenberg-Langevin spectra
- ``storage``    write / hold / read maps of the spin-wave memory
- ``benchmarks`` fidelity and T-V quantum-memory benchmarks
- ``io``         configuration files and output writers
"""

__version__ = "0.1.0"
