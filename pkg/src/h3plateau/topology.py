"""Free-group words for the boundary loop and forced crossings with the axis segment."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import TriMesh
from .spatial import vertical_crossings

DELTA = "d"


def tau(i: int) -> str:
    if i < 1:
        raise ValueError(f"tunnel generator index must be >= 1, got {i}")
    return f"t{i}"


def _check_generator(g: str) -> None:
    if g == DELTA:
        return
    if not (g.startswith("t") and g[1:].isdigit() and int(g[1:]) >= 1):
        raise ValueError(f"malformed generator {g!r}")


@dataclass(frozen=True)
class FreeWord:
    """Word in the free group on ``d`` and ``t1, t2, ...``; letters are ``(generator, +1 | -1)``."""

    letters: tuple = ()

    def __post_init__(self):
        letters = tuple((str(g), int(e)) for g, e in self.letters)
        for g, e in letters:
            _check_generator(g)
            if e not in (1, -1):
                raise ValueError(f"exponent must be +1 or -1, got {e}")
        object.__setattr__(self, "letters", letters)

    def __len__(self) -> int:
        return len(self.letters)

    def __mul__(self, other: "FreeWord") -> "FreeWord":
        return FreeWord(self.letters + other.letters)

    def inverse(self) -> "FreeWord":
        return FreeWord(tuple((g, -e) for g, e in reversed(self.letters)))

    def generators(self) -> set:
        return {g for g, _ in self.letters}

    def text(self) -> str:
        """Canonical text: one token per letter, upper case for inverses (``"d t1 D T1"``)."""
        return " ".join(g if e == 1 else g.upper() for g, e in self.letters)

    @classmethod
    def parse(cls, text: str) -> "FreeWord":
        out = []
        for tok in text.split():
            low = tok.lower()
            out.append((low, 1 if tok == low else -1))
        return cls(tuple(out))

    def __str__(self) -> str:
        return self.text()


def alpha_word(m: int) -> FreeWord:
    """``d t1 D T1 t2 D T2 ... tm D Tm`` (``3m + 1`` letters)."""
    if m < 1:
        raise ValueError(f"number of tunnel generators must be >= 1, got {m}")
    letters = [(DELTA, 1)]
    for i in range(1, m + 1):
        letters += [(tau(i), 1), (DELTA, -1), (tau(i), -1)]
    return FreeWord(tuple(letters))


def free_reduce(w: FreeWord) -> FreeWord:
    """Cancel adjacent inverse pairs to a fixpoint (one stack pass suffices)."""
    stack: list = []
    for g, e in w.letters:
        if stack and stack[-1][0] == g and stack[-1][1] == -e:
            stack.pop()
        else:
            stack.append((g, e))
    return FreeWord(tuple(stack))


def is_reduced(w: FreeWord) -> bool:
    return all(not (a[0] == b[0] and a[1] == -b[1]) for a, b in zip(w.letters, w.letters[1:]))


def is_trivial(w: FreeWord) -> bool:
    return len(free_reduce(w)) == 0


def kill_generator(w: FreeWord, g: str) -> FreeWord:
    _check_generator(g)
    return free_reduce(FreeWord(tuple(x for x in w.letters if x[0] != g)))


@dataclass(frozen=True)
class SegmentQuery:
    """Vertical segment on the z-axis from ``(0, 0, z_lo)`` to ``(0, 0, z_hi)``."""

    z_lo: float = 0.5
    z_hi: float = 3.0

    def __post_init__(self):
        if not 0 < self.z_lo < self.z_hi:
            raise ValueError("requires 0 < z_lo < z_hi")


BETA = SegmentQuery()


def segment_intersections(m: TriMesh, q: SegmentQuery = BETA) -> np.ndarray:
    """Crossing points of the mesh with the segment, sorted by height (rows ``(0, 0, z)``)."""
    z = vertical_crossings(m.vertices, m.faces, (0.0, 0.0), q.z_lo, q.z_hi)
    return np.column_stack([np.zeros_like(z), np.zeros_like(z), z])


def verify_report(m: int, mesh: TriMesh | None, winding: int, q: SegmentQuery = BETA) -> dict:
    w = alpha_word(m)
    out = {
        "word": w.text(),
        "word_nontrivial": not is_trivial(w),
        "word_delta_killed_trivial": is_trivial(kill_generator(w, DELTA)),
        "winding": int(winding),
    }
    if mesh is not None:
        pts = segment_intersections(mesh, q)
        out["beta_count"] = int(len(pts))
        out["beta_heights"] = [float(f"{z:.12g}") for z in pts[:, 2]]
    else:
        out["beta_count"] = None
        out["beta_heights"] = []
    return out
