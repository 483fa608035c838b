"""Traffic-aware routing on road networks: single-query search, all-pairs
lookup and K-shortest-path preselection, with a benchmark harness."""

__version__ = "0.1.0"
