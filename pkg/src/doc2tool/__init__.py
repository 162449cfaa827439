"""doc2tool: turn unstructured REST API documentation into validated,
executable tool definitions.

Pipeline stages: extract structured API descriptions from documentation
pages, compile them into tool specs, validate each tool against its live
endpoint, refine failures with candidate parameter values from a knowledge
base, then export executable tool files and serve them over HTTP.
"""

__version__ = "0.1.0"
