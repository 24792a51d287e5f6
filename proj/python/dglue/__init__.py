"""Python access to the glued-space verification library."""

import json

from ._dglue import DglueError, catalogue, christoffel_oracle, fibre, inspect, koszul, run_json

__all__ = ["DglueError", "catalogue", "christoffel_oracle", "fibre", "inspect", "koszul", "run"]


def run(path, suites=(), mode=None, seed=None):
    """Run suites on a scenario file and return the report as a dict."""
    return json.loads(run_json(str(path), list(suites), mode, seed))
