from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .construct import SurfaceData


def to_complex(pt: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    pt = np.asarray(pt)
    return pt[..., 0] + 1j * pt[..., 1], pt[..., 2] + 1j * pt[..., 3]


def from_complex(z1: np.ndarray, z2: np.ndarray) -> np.ndarray:
    z1 = np.asarray(z1, dtype=complex)
    z2 = np.asarray(z2, dtype=complex)
    z1, z2 = np.broadcast_arrays(z1, z2)
    return np.stack([z1.real, z1.imag, z2.real, z2.imag], axis=-1)


@dataclass(frozen=True)
class AffineMap:
    """(z1, z2) -> (a z1 + b z2 + c, d z2 + e) with d > 0 real on every generator."""

    a: complex = 1.0
    b: complex = 0.0
    c: complex = 0.0
    d: complex = 1.0
    e: complex = 0.0

    def compose(self, other: "AffineMap") -> "AffineMap":
        # self after other
        return AffineMap(
            a=self.a * other.a,
            b=self.a * other.b + self.b * other.d,
            c=self.a * other.c + self.b * other.e + self.c,
            d=self.d * other.d,
            e=self.d * other.e + self.e,
        )

    def inverse(self) -> "AffineMap":
        return AffineMap(
            a=1.0 / self.a,
            b=-self.b / (self.a * self.d),
            c=(-self.c + self.b * self.e / self.d) / self.a,
            d=1.0 / self.d,
            e=-self.e / self.d,
        )

    def power(self, n: int) -> "AffineMap":
        base = self if n >= 0 else self.inverse()
        out = AffineMap()
        for _ in range(abs(n)):
            out = base.compose(out)
        return out

    def jacobian(self) -> np.ndarray:
        return np.array([[self.a, self.b], [0.0, self.d]], dtype=complex)

    def apply_complex(self, z1: np.ndarray, z2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return self.a * z1 + self.b * z2 + self.c, self.d * z2 + self.e

    def apply(self, pt: np.ndarray) -> np.ndarray:
        z1, z2 = to_complex(pt)
        return from_complex(*self.apply_complex(z1, z2))


@dataclass(frozen=True)
class GroupElement:
    word: tuple[tuple[int, int], ...]
    affine: AffineMap

    @classmethod
    def identity(cls) -> "GroupElement":
        return cls(word=(), affine=AffineMap())

    @classmethod
    def from_word(cls, surface: "SurfaceData", word: list[tuple[int, int]] | tuple[tuple[int, int], ...]) -> "GroupElement":
        """Words read left to right as a composition: the rightmost entry acts first."""
        out = cls.identity()
        for gen, power in word:
            out = out.compose(cls.generator(surface, gen, power))
        return out

    @classmethod
    def generator(cls, surface: "SurfaceData", index: int, power: int = 1) -> "GroupElement":
        if power == 0:
            return cls.identity()
        return cls(word=((index, power),), affine=surface.generator_power(index, power))

    def compose(self, other: "GroupElement") -> "GroupElement":
        word = list(self.word)
        for gen, power in other.word:
            if word and word[-1][0] == gen:
                merged = word[-1][1] + power
                word.pop()
                if merged:
                    word.append((gen, merged))
            else:
                word.append((gen, power))
        return GroupElement(word=tuple(word), affine=self.affine.compose(other.affine))

    def inverse(self) -> "GroupElement":
        word = tuple((gen, -power) for gen, power in reversed(self.word))
        return GroupElement(word=word, affine=self.affine.inverse())

    @property
    def is_identity(self) -> bool:
        return not self.word


def apply_group(g: GroupElement, pt: np.ndarray) -> np.ndarray:
    return g.affine.apply(pt)
