from .pareto import CSV_COLUMNS, METRICS, PlotError, load_rows, plot_pareto

__all__ = ["plot_pareto", "load_rows", "PlotError", "CSV_COLUMNS", "METRICS"]
