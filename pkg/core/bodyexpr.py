"""
Expressions textuelles de corps convexes.

    body := "point:" INT | "ball:" INT "," REAL | "box:" REAL {"," REAL}
          | "cube:" INT ["," REAL] | "product(" body ";" body ")"
          | "scale(" REAL ";" body ")" | "embed(" body ";" INT ")"
          | "translate(" REAL {"," REAL} ";" body ")"

`cube:n` est la Box de n côtés unité ; `cube:n,s` vaut `scale(s;cube:n)`.
"""

import re
from typing import List

from services.bodies import (
    Ball,
    BodyError,
    BodySpec,
    Box,
    Embedded,
    Point,
    Product,
    Scaled,
    Translated,
)

_INT = re.compile(r"\d+")
_REAL = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_KEYWORD = re.compile(r"[a-z]+")


class BodyExprError(ValueError):
    """Expression invalide ; `offset` est la position (en octets) de l'erreur."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (position {offset})")
        self.offset = offset


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip_space(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def fail(self, message: str, offset=None):
        index = self.pos if offset is None else offset
        raise BodyExprError(message, len(self.text[:index].encode("utf-8")))

    def expect(self, literal: str):
        if not self.text.startswith(literal, self.pos):
            self.fail(f"« {literal} » attendu")
        self.pos += len(literal)

    def accept(self, literal: str) -> bool:
        if self.text.startswith(literal, self.pos):
            self.pos += len(literal)
            return True
        return False

    def token(self, pattern, label: str) -> str:
        match = pattern.match(self.text, self.pos)
        if not match:
            self.fail(f"{label} attendu")
        self.pos = match.end()
        return match.group()

    def integer(self) -> int:
        return int(self.token(_INT, "entier"))

    def real(self) -> float:
        return float(self.token(_REAL, "réel"))

    def reals(self) -> List[float]:
        values = [self.real()]
        while self.accept(","):
            values.append(self.real())
        return values

    def body(self) -> BodySpec:
        start = self.pos
        keyword = self.token(_KEYWORD, "type de corps")
        try:
            return self._node(keyword, start)
        except BodyError as exc:
            self.fail(f"Corps incohérent: {exc}", start)

    def _node(self, keyword: str, start: int) -> BodySpec:
        if keyword == "point":
            self.expect(":")
            return Point(self.integer())
        if keyword == "ball":
            self.expect(":")
            n = self.integer()
            self.expect(",")
            return Ball(n, self.real())
        if keyword == "box":
            self.expect(":")
            return Box(tuple(self.reals()))
        if keyword == "cube":
            self.expect(":")
            cube = Box((1.0,) * self.integer())
            if self.accept(","):
                return Scaled(self.real(), cube)
            return cube
        if keyword == "product":
            self.expect("(")
            left = self.body()
            self.expect(";")
            right = self.body()
            self.expect(")")
            return Product(left, right)
        if keyword == "scale":
            self.expect("(")
            factor = self.real()
            self.expect(";")
            inner = self.body()
            self.expect(")")
            return Scaled(factor, inner)
        if keyword == "embed":
            self.expect("(")
            inner = self.body()
            self.expect(";")
            extra = self.integer()
            self.expect(")")
            return Embedded(inner, extra)
        if keyword == "translate":
            self.expect("(")
            offset = self.reals()
            self.expect(";")
            inner = self.body()
            self.expect(")")
            return Translated(tuple(offset), inner)
        self.fail(f"Type de corps inconnu: {keyword}", start)


def parse_body(text: str) -> BodySpec:
    parser = _Parser(text)
    parser.skip_space()
    body = parser.body()
    parser.skip_space()
    if parser.pos != len(parser.text):
        parser.fail("Caractères inattendus après le corps")
    return body


def _real(value: float) -> str:
    return repr(float(value))


def format_body(body: BodySpec) -> str:
    """Forme textuelle canonique ; parse_body(format_body(b)) == b."""
    if isinstance(body, Point):
        return f"point:{body.ambient_dim}"
    if isinstance(body, Ball):
        return f"ball:{body.ambient_dim},{_real(body.radius)}"
    if isinstance(body, Box):
        return "box:" + ",".join(_real(s) for s in body.lengths)
    if isinstance(body, Product):
        return f"product({format_body(body.left)};{format_body(body.right)})"
    if isinstance(body, Scaled):
        return f"scale({_real(body.factor)};{format_body(body.inner)})"
    if isinstance(body, Embedded):
        return f"embed({format_body(body.inner)};{body.extra_dims})"
    if isinstance(body, Translated):
        offset = ",".join(_real(v) for v in body.offset)
        return f"translate({offset};{format_body(body.inner)})"
    raise BodyError(f"Type de corps inconnu: {type(body).__name__}")
