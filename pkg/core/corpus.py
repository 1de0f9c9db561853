"""Corpus de référence utilisé par `ivlab corpus-verify`."""

from typing import List, Tuple

from services.bodies import BodySpec

from .bodyexpr import parse_body

CUBE_SCALES = (0.1, 0.5, 1.0, 2.0, 10.0)
BALL_RADII = (0.5, 1.0, 2.0)


def corpus_expressions() -> List[str]:
    expressions = ["point:3"]
    expressions += [f"cube:{n}" for n in range(1, 9)]
    expressions += [f"cube:6,{s:g}" for s in CUBE_SCALES]
    expressions += ["box:1,2,3", "box:0.5,0.5,4,4"]
    expressions += [f"ball:{n},{r:g}" for n in range(2, 7) for r in BALL_RADII]
    expressions += ["product(box:1,2;ball:2,1)", "embed(cube:3;2)"]
    return expressions


def corpus() -> List[Tuple[str, BodySpec]]:
    return [(text, parse_body(text)) for text in corpus_expressions()]
