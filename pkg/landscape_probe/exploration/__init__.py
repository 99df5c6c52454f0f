"""Static plots of curves, traces and surfaces."""
