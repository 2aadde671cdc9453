"""Energy transfer efficiency of open exciton networks."""

__version__ = "0.1.0"
