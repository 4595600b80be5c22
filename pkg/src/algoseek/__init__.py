"""algoseek: find algorithm implementations in source code using pseudo code queries."""

__version__ = "0.1.0"
