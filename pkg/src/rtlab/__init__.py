"""Numerical laboratory for wave-packet analysis and weighted ergodic averages."""
