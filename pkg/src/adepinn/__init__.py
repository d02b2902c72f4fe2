"""adepinn: mesh-free advection-diffusion solvers.

Physics-informed network training with soft penalties or hard
initial/boundary constraints (distance/extension composition), Fourier
sub-network ensembles against spectral bias, problem presets with
manufactured forcing, uniform collocation samplers, error metrics, and an
independent Crank-Nicolson oracle for 1D verification.
"""

__version__ = "0.1.0"
