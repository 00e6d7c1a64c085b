"""logquotient: log-linear reaction quotient dynamics for chemical reaction networks."""

__version__ = "0.1.0"
