"""isacbeam Test Suite"""

__version__ = "0.1.0"
