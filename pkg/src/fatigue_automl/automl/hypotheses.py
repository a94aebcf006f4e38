"""Nested feature sets compared by the study (M1 within M2 within M3)."""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class HypothesisConfig:
    name: str
    features: tuple

    def to_dict(self):
        return {"name": self.name, "features": list(self.features)}


_M1 = ("l_BP", "h_S", "t_BP", "t_S", "a_w", "R_eH", "R_m", "R", "delta_sigma_i", "Loading", "Scale", "Post-Treat")
_M2 = _M1 + ("Weld position", "Weld process")
_M3 = _M2 + ("f_T", "R_eH_filler", "R_m_filler", "Pre-Treat")

HYPOTHESES = {
    "M1": HypothesisConfig("M1", _M1),
    "M2": HypothesisConfig("M2", _M2),
    "M3": HypothesisConfig("M3", _M3),
}


def hypothesis(name, extra=()):
    """Named hypothesis, optionally extended by extra schema columns."""
    base = HYPOTHESES[name]
    if not extra:
        return base
    return HypothesisConfig(name, base.features + tuple(c for c in extra if c not in base.features))
