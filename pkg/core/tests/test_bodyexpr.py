from django.test import SimpleTestCase

from core.bodyexpr import BodyExprError, format_body, parse_body
from core.corpus import corpus_expressions
from services.bodies import Ball, Box, Embedded, Point, Product, Scaled, Translated


class ParseBodyTests(SimpleTestCase):
    def test_primitives(self):
        self.assertEqual(parse_body("point:3"), Point(3))
        self.assertEqual(parse_body("ball:2,1.5"), Ball(2, 1.5))
        self.assertEqual(parse_body("box:1,2,3"), Box((1, 2, 3)))
        self.assertEqual(parse_body("box:1e-3,.5"), Box((0.001, 0.5)))

    def test_cubes(self):
        self.assertEqual(parse_body("cube:3"), Box((1, 1, 1)))
        self.assertEqual(parse_body("cube:2,0.5"), Scaled(0.5, Box((1, 1))))

    def test_compositions(self):
        self.assertEqual(parse_body("product(box:1,2;ball:2,1)"), Product(Box((1, 2)), Ball(2, 1)))
        self.assertEqual(parse_body("scale(2;ball:2,1)"), Scaled(2, Ball(2, 1)))
        self.assertEqual(parse_body("embed(cube:3;2)"), Embedded(Box((1, 1, 1)), 2))
        self.assertEqual(
            parse_body("translate(1,-2.5;box:1,1)"),
            Translated((1.0, -2.5), Box((1, 1))),
        )

    def test_surrounding_whitespace_is_ignored(self):
        self.assertEqual(parse_body("  cube:2\n"), Box((1, 1)))

    def test_syntax_errors_carry_offset(self):
        cases = {
            "sphere:2": 0,
            "box:": 4,
            "ball:2": 6,
            "product(box:1;box:2": 19,
            "cube:2x": 6,
        }
        for text, offset in cases.items():
            with self.assertRaises(BodyExprError) as ctx:
                parse_body(text)
            self.assertEqual(ctx.exception.offset, offset, text)

    def test_offsets_count_bytes_of_the_original_input(self):
        cases = {
            "  sphere:2": 2,
            " box:1,2,x": 9,
            "\tcube:2 x": 8,
            "box:1é": 5,
            "\u00a0cube:2 x": 9,
        }
        for text, offset in cases.items():
            with self.assertRaises(BodyExprError) as ctx:
                parse_body(text)
            self.assertEqual(ctx.exception.offset, offset, text)

    def test_inconsistent_bodies_are_rejected(self):
        with self.assertRaises(BodyExprError) as ctx:
            parse_body("translate(1;box:1,1)")
        self.assertEqual(ctx.exception.offset, 0)
        with self.assertRaises(BodyExprError):
            parse_body("box:1,-2")
        with self.assertRaises(BodyExprError):
            parse_body("point:0")


class FormatBodyTests(SimpleTestCase):
    def test_round_trip_on_corpus(self):
        for text in corpus_expressions():
            body = parse_body(text)
            self.assertEqual(parse_body(format_body(body)), body, text)

    def test_round_trip_on_nested_body(self):
        body = Translated((0.1, 1e-20, 3.0), Embedded(Product(Scaled(1 / 3, Ball(1, 0.7)), Point(1)), 1))
        self.assertEqual(parse_body(format_body(body)), body)
