"""End-to-end runs of experiments and the command line."""
