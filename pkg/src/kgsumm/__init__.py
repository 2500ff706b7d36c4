"""Knowledge-guided rhetorical parsing and RS-tree based extractive summarization."""

__version__ = "0.1.0"
