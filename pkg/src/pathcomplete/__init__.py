"""Path-complete graph Lyapunov functions for switched systems."""
