class PrmError(ValueError):
    """Raised for invalid data or arguments anywhere in the toolkit."""
