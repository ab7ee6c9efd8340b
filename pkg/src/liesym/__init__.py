"""Lie point symmetries of second-order evolution equations in two space dimensions."""

from liesym.expr import Expr, Func, Jet, Power, Product, Rational, Sum, Symbol
from liesym.normal import normalize
from liesym.parsing import ParseContext, ParseError, parse, to_string

__version__ = "0.1.0"

__all__ = [
    "Expr",
    "Func",
    "Jet",
    "Power",
    "Product",
    "Rational",
    "Sum",
    "Symbol",
    "ParseContext",
    "ParseError",
    "normalize",
    "parse",
    "to_string",
]
