from dataclasses import dataclass
from typing import Iterable, List, Optional


@dataclass(frozen=True)
class Check:
    """Résultat d'une vérification : `lhs <= rhs` (ou égalité) à tolérance près."""

    check_id: str
    passed: bool
    lhs: Optional[float] = None
    rhs: Optional[float] = None
    # Les vérifications « advisory » sont rapportées sans influer sur le code retour.
    advisory: bool = False


def leq(check_id: str, lhs: float, rhs: float, slack: float = 0.0, advisory: bool = False) -> Check:
    return Check(check_id, bool(lhs <= rhs + slack), float(lhs), float(rhs), advisory)


def close(
    check_id: str,
    lhs: float,
    rhs: float,
    rel_tol: float,
    abs_tol: float = 0.0,
    advisory: bool = False,
) -> Check:
    scale = max(abs(lhs), abs(rhs))
    ok = abs(lhs - rhs) <= max(rel_tol * scale, abs_tol)
    return Check(check_id, bool(ok), float(lhs), float(rhs), advisory)


def failures(checks: Iterable[Check]) -> List[Check]:
    return [check for check in checks if not check.passed and not check.advisory]
