"""Piano key weir design generation and surrogate benchmark tooling."""

__version__ = "0.1.0"
