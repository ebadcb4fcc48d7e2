"""Propagation speed of almost-planar solutions to a viscous semilinear parabolic equation."""
