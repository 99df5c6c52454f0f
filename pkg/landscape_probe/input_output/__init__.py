"""Input and output of data formats."""
