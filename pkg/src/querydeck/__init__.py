"""querydeck: mine SQL query logs into interactive widget interfaces."""

from .tree import (AstNode, NodePath, GrammarAnnotations, PathError,
                   CollectionError, node_at, replace_at)
from .parser import ParseError, parse, serialize, default_grammar
from .diff import Delta, DiffSet, MismatchError, align, apply, extract_deltas
from .graph import InteractionGraph, EmptyLogError, build_graph
from .widgets import Widget, WidgetType, WidgetLibrary, default_library
from .mapper import InterfaceModel, map_interface
from .estimator import InterfaceMiner

__all__ = [
    "AstNode", "NodePath", "GrammarAnnotations", "PathError", "CollectionError",
    "node_at", "replace_at",
    "ParseError", "parse", "serialize", "default_grammar",
    "Delta", "DiffSet", "MismatchError", "align", "apply", "extract_deltas",
    "InteractionGraph", "EmptyLogError", "build_graph",
    "Widget", "WidgetType", "WidgetLibrary", "default_library",
    "InterfaceModel", "map_interface",
    "InterfaceMiner",
]

__version__ = "0.1.0"
