class NumericError(RuntimeError):
    """A computation could not produce a meaningful result from the given data
    (insufficient decay range, flat correlation, all-zero input, ...).

    Maps to CLI exit code 4; plain ValueError (bad arguments / invalid
    configuration) maps to exit code 2.
    """
