"""Polystore query language: parsing, pretty-printing and island compilers."""

from .ast import (
    AflAggregate,
    AflApply,
    AflFilter,
    AflProject,
    AflScan,
    AflSubarray,
    AggCall,
    CastNode,
    JoinClause,
    MappingSpec,
    PolyQuery,
    ScopedQuery,
    SelectItem,
    SelectStmt,
    TableRef,
    TextSpec,
    map_sources,
    render_poly,
    render_scoped,
)
from .compiler import TextScanParams, compile_arr, compile_rel, compile_text
from .parser import parse_poly

__all__ = [
    "AflAggregate",
    "AflApply",
    "AflFilter",
    "AflProject",
    "AflScan",
    "AflSubarray",
    "AggCall",
    "CastNode",
    "JoinClause",
    "MappingSpec",
    "PolyQuery",
    "ScopedQuery",
    "SelectItem",
    "SelectStmt",
    "TableRef",
    "TextScanParams",
    "TextSpec",
    "compile_arr",
    "compile_rel",
    "compile_text",
    "map_sources",
    "parse_poly",
    "render_poly",
    "render_scoped",
]
