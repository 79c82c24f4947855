"""Turn semi-structured how-to instructions into a PROHOW Linked Data graph,
link it to an entity catalog and to other processes, and measure link quality."""

__version__ = "0.1.0"
