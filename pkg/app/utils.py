from __future__ import annotations
import math
from typing import Any, Dict, Iterable, Optional


def merge_deep(a: Dict[str, Any] | None, b: Dict[str, Any] | None) -> Dict[str, Any]:
    a = dict(a or {})
    for k, v in (b or {}).items():
        if isinstance(v, dict) and isinstance(a.get(k), dict):
            a[k] = merge_deep(a.get(k), v)
        else:
            a[k] = v
    return a


def pos(v: float) -> float:
    """Positive part max(v, 0)."""
    return v if v > 0.0 else 0.0


def is_grid_multiple(value: float, h: float, rtol: float = 1e-9) -> bool:
    k = value / h
    return abs(k - round(k)) <= rtol * max(1.0, abs(k))


def grid_count(value: float, h: float) -> int:
    return int(round(value / h))


def fmt_num(v: Optional[float]) -> str:
    if v is None:
        return "-"
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return f"{v:.6g}"


def finite_or_str(v: Any) -> Any:
    """JSON-safe number: non-finite floats become 'inf', '-inf' or 'nan'."""
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    return v


def jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if hasattr(obj, "item") and callable(obj.item):
        obj = obj.item()
    return finite_or_str(obj)


def parse_values(text: str) -> list[float]:
    """'0.05, 0.5,5' -> [0.05, 0.5, 5.0]"""
    return [float(tok) for tok in _split(text)]


def _split(text: str) -> Iterable[str]:
    return (tok.strip() for tok in text.split(",") if tok.strip())
