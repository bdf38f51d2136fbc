"""Community-aware graph embedding with two-layer random walks."""

from importlib import resources

__version__ = "0.1.0"


def data_file(name: str) -> str:
    """Path of a bundled fixture such as ``"karate.edges"`` or ``"barbell.edges"``."""
    return str(resources.files(__name__) / "data" / name)


def schema_file() -> str:
    """Path of the JSON schema every command output validates against."""
    return str(resources.files(__name__) / "output.schema.json")
