from __future__ import annotations

from dataclasses import dataclass, fields, replace
from typing import Optional

from ..backend import GenerationParams
from ..core import QuestionInstance
from ..prompts import ExplanationOrder, PromptTemplate, TemplateId, get_template, orders_for_t3


@dataclass(frozen=True)
class StrategyConfig:
    """Knobs shared by all strategies. Defaults follow the published setup.

    ``K`` and ``shuffle_orders`` default per instance to the answer-space
    size N and to the original + reversed justification order.
    """

    D: int = 30
    K: Optional[int] = None
    M: int = 5
    rephrase_count: int = 15
    induced_m: int = 3
    temperature_sample: float = 1.0
    temperature_det: float = 0.0
    top_p: Optional[float] = None
    max_tokens: int = 200
    shuffle_orders: Optional[tuple[ExplanationOrder, ...]] = None
    hybrid_base: str = "self_cons"
    templates_dir: Optional[str] = None
    seed: Optional[int] = None

    def __post_init__(self):
        if self.D < 1 or self.M < 1 or self.induced_m < 1:
            raise ValueError("D, M and induced_m must be >= 1")
        if self.K is not None and self.K < 1:
            raise ValueError("K must be >= 1")
        if self.rephrase_count < 2:
            raise ValueError("rephrase_count must be >= 2")
        if self.hybrid_base not in ("self_cons", "cot_cons"):
            raise ValueError("hybrid_base must be 'self_cons' or 'cot_cons'")
        if self.shuffle_orders is not None:
            orders = tuple(o if isinstance(o, ExplanationOrder) else ExplanationOrder(tuple(o))
                           for o in self.shuffle_orders)
            if not orders:
                raise ValueError("shuffle_orders must not be empty")
            object.__setattr__(self, "shuffle_orders", orders)

    @classmethod
    def from_mapping(cls, data: dict) -> "StrategyConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown strategy settings: {sorted(unknown)}")
        data = dict(data)
        if data.get("shuffle_orders") is not None:
            data["shuffle_orders"] = tuple(ExplanationOrder(tuple(o)) for o in data["shuffle_orders"])
        return cls(**data)

    def with_overrides(self, **overrides) -> "StrategyConfig":
        return replace(self, **overrides) if overrides else self

    def k_for(self, instance: QuestionInstance) -> int:
        return self.K if self.K is not None else instance.n

    def orders_for(self, instance: QuestionInstance) -> tuple[ExplanationOrder, ...]:
        if self.shuffle_orders is None:
            return tuple(orders_for_t3(instance.n))
        for o in self.shuffle_orders:
            if len(o.permutation) != instance.n:
                raise ValueError(f"shuffle order {list(o.permutation)} does not fit N={instance.n}")
        return self.shuffle_orders

    def deterministic(self, n: int = 1) -> GenerationParams:
        return GenerationParams(temperature=self.temperature_det, max_tokens=self.max_tokens,
                                num_samples=n, seed=self.seed)

    def sampling(self, n: int) -> GenerationParams:
        return GenerationParams(temperature=self.temperature_sample, max_tokens=self.max_tokens,
                                num_samples=n, top_p=self.top_p, seed=self.seed)

    def template(self, tid: TemplateId) -> PromptTemplate:
        return get_template(tid, self.templates_dir)

    def to_json(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "shuffle_orders" and v is not None:
                v = [list(o.permutation) for o in v]
            out[f.name] = v
        return out
