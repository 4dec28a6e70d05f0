"""polygate: a desk-scale polystore middleware.

Three embedded engines (relational, array, text) behind three island query
languages, a catalog, cross-island casts, an HTTP query endpoint and a
cluster-control surface.
"""

__version__ = "0.1.0"
