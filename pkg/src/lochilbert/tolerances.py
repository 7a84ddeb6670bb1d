"""Central tolerance configuration.

All numerical thresholds used by the library live in :class:`Tolerances`.
Functions take an optional ``tol`` argument; ``None`` means :data:`DEFAULT`.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Any, Mapping


@dataclass(frozen=True)
class Tolerances:
    # linear algebra kernel
    hermitian: float = 1e-10
    eig_residual: float = 1e-9
    commuting: float = 1e-8
    normal: float = 1e-10
    cluster: float = 1e-7
    orthonormal: float = 1e-9
    commutant_rank: float = 1e-9
    # operators and classification
    compatibility: float = 1e-10
    scalar: float = 1e-9
    off_block: float = 1e-9
    span: float = 1e-8
    dilation: float = 1e-10
    # disintegration
    gram_kernel: float = 1e-9
    isometry: float = 1e-8
    prefix: float = 1e-9
    cross_term: float = 1e-9
    label: float = 1e-7
    homomorphism: float = 1e-9
    restriction: float = 1e-8

    def override(self, values: Mapping[str, Any] | None) -> "Tolerances":
        """Return a copy with some fields replaced; unknown keys raise ``KeyError``."""
        if not values:
            return self
        known = {f.name for f in dataclasses.fields(self)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise KeyError(f"unknown tolerance name(s): {', '.join(unknown)}")
        return dataclasses.replace(self, **{k: float(v) for k, v in values.items()})

    def as_dict(self) -> dict[str, float]:
        return dataclasses.asdict(self)


DEFAULT = Tolerances()


def resolve(tol: Tolerances | None) -> Tolerances:
    return DEFAULT if tol is None else tol
