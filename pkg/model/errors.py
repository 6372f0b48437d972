"""
Error types raised by loaders, oracles and the harness
"""


class GraphFormatError(ValueError):
    """Malformed graph file; carries the offending line number"""

    def __init__(self, message, line_number=None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class CampaignFormatError(ValueError):
    pass


class AttentionFormatError(ValueError):
    pass


class AllocationFormatError(ValueError):
    pass


class CollectionFormatError(ValueError):
    pass


class ConfigError(ValueError):
    pass


class OracleCapError(RuntimeError):
    """Exact enumeration refused because the instance is too large"""


class BruteForceCapError(RuntimeError):
    pass
