class ReportError(Exception):
    """Unusable input file or an unsatisfiable plot/summary request."""
