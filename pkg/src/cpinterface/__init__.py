"""Interface of the one-dimensional finite-range contact process.

Modules:
    graphical    Harris construction, infection paths and forward closures
    contact      coupled processes, edges r_t and l_t, the interface rho_t
    opercolation oriented site percolation and the Gamma(i) events
    renorm       block field Phi/Psi, beta-expanding points and barriers
    montecarlo   replica runs, tail and speed estimates, persistence
    cli          command-line front end (python -m cpinterface)
"""

from .graphical import HarrisEvents, Kernel, Window, sample_harris
from .contact import Configuration, ContaminationError, interface_series
from .montecarlo import ExperimentConfig, run_experiment

__all__ = ["HarrisEvents", "Kernel", "Window", "sample_harris", "Configuration",
           "ContaminationError", "interface_series", "ExperimentConfig", "run_experiment"]
__version__ = "0.1.0"
