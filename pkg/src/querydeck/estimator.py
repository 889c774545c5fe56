"""Scikit-learn style front door for the mining pipeline.

``InterfaceMiner`` is fit on an ordered query log (SQL strings or parsed
trees) and exposes the mined interface, closure membership prediction and
hold-out scoring::

    miner = InterfaceMiner(window=2, pruning="lca").fit(queries)
    miner.predict(["SELECT ..."])   # -> [True, False, ...]
    doc = miner.export()
"""

from __future__ import annotations

from .evaluate import expressiveness, in_closure
from .graph import build_graph
from .mapper import map_interface
from .parser import default_grammar, parse
from .specdoc import export_document
from .tree import AstNode, GrammarAnnotations
from .widgets import WidgetLibrary, default_library


class NotFittedError(RuntimeError):
    pass


class InterfaceMiner:
    """Mines a widget interface from a query log.

    Parameters mirror the pipeline knobs: sliding ``window`` size,
    ancestor ``pruning`` mode ("lca" or "none"), the log coverage target
    ``gamma`` (only full coverage is implemented) and optional overrides
    for the widget library and grammar annotations.
    """

    def __init__(self, window: int = 2, pruning: str = "lca", gamma: float = 1.0,
                 widget_library: WidgetLibrary | None = None,
                 grammar: GrammarAnnotations | None = None):
        self.window = window
        self.pruning = pruning
        self.gamma = gamma
        self.widget_library = widget_library
        self.grammar = grammar

    def get_params(self, deep: bool = True) -> dict:
        return {
            "window": self.window,
            "pruning": self.pruning,
            "gamma": self.gamma,
            "widget_library": self.widget_library,
            "grammar": self.grammar,
        }

    def set_params(self, **params) -> "InterfaceMiner":
        for key, value in params.items():
            if key not in self.get_params():
                raise ValueError(f"unknown parameter {key!r}")
            setattr(self, key, value)
        return self

    def _validate(self):
        if self.gamma != 1.0:
            raise ValueError(
                "coverage targets below 1.0 are not implemented; gamma must be 1.0")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.pruning not in ("lca", "none"):
            raise ValueError(f"pruning must be 'lca' or 'none', got {self.pruning!r}")

    def _coerce(self, X) -> list[AstNode]:
        ann = self.grammar or default_grammar()
        out = []
        for q in X:
            out.append(parse(q, ann) if isinstance(q, str) else q)
        return out

    def fit(self, X, y=None) -> "InterfaceMiner":
        """Mine an interface from an ordered query log."""
        self._validate()
        ann = self.grammar or default_grammar()
        lib = self.widget_library or default_library()
        queries = self._coerce(X)
        self.graph_ = build_graph(queries, window=self.window,
                                  pruning=self.pruning, ann=ann)
        self.model_ = map_interface(self.graph_, lib, ann)
        self.q0_ = self.graph_.vertices[self.model_.initial_query]
        self.n_queries_ = len(queries)
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise NotFittedError("call fit() before using the miner")

    @property
    def widgets_(self):
        self._check_fitted()
        return self.model_.sorted_widgets()

    @property
    def cost_(self) -> float:
        self._check_fitted()
        return self.model_.total_cost

    def predict(self, X) -> list[bool]:
        """Closure membership for each query."""
        self._check_fitted()
        ann = self.grammar or default_grammar()
        return [in_closure(self.model_.widgets, self.q0_, q, ann)
                for q in self._coerce(X)]

    def score(self, X, y=None) -> float:
        """Fraction of ``X`` inside the mined interface's closure."""
        self._check_fitted()
        ann = self.grammar or default_grammar()
        return expressiveness(self.model_.widgets, self.q0_, self._coerce(X), ann)

    def export(self) -> dict:
        """The interface document the web client consumes."""
        self._check_fitted()
        ann = self.grammar or default_grammar()
        return export_document(self.model_.widgets, self.q0_, ann)
