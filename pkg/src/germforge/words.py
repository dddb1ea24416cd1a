"""Reduced words in two generators, optionally with torsion.

Letters are ``A``, ``a`` (for ``A^-1``), ``B`` and ``b``.  A word is stored
as alternating blocks ``(base, exponent)``; with torsion ``(k, l)`` the
exponents of ``A`` (resp. ``B``) are kept in the normal form
``-k/2 < e <= k/2``.  A torsion entry of ``0`` means infinite order.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Optional, Tuple

from .errors import InputError

Torsion = Optional[Tuple[int, int]]
LETTER_ORDER = "AaBb"


@dataclass(frozen=True)
class Block:
    base: str
    exponent: int

    def __str__(self) -> str:
        return f"{self.base}^{self.exponent}"


def _order_of(base: str, torsion: Torsion) -> int:
    if torsion is None:
        return 0
    return int(torsion[0] if base == "A" else torsion[1])


def normal_exponent(e: int, n: int) -> int:
    """Representative of ``e`` mod ``n`` of smallest magnitude, ties positive."""
    if n == 0:
        return e
    r = e % n
    if 2 * r > n:
        r -= n
    return r


@dataclass(frozen=True)
class Word:
    blocks: Tuple[Block, ...]
    torsion: Torsion = None

    @property
    def letters(self) -> str:
        return "".join((b.base if b.exponent > 0 else b.base.lower()) * abs(b.exponent) for b in self.blocks)

    @property
    def letter_length(self) -> int:
        return sum(abs(b.exponent) for b in self.blocks)

    @property
    def is_empty(self) -> bool:
        return not self.blocks

    @property
    def is_pure_power(self) -> bool:
        return len(self.blocks) <= 1

    def inverse(self) -> "Word":
        return Word(tuple(Block(b.base, -b.exponent) for b in reversed(self.blocks)), self.torsion)

    def rotate(self, k: int) -> "Word":
        """Cyclic shift moving the first ``k`` blocks to the end, re-reduced."""
        k %= max(1, len(self.blocks))
        return reduce_blocks(self.blocks[k:] + self.blocks[:k], self.torsion)

    def swap_generators(self) -> "Word":
        tor = None if self.torsion is None else (self.torsion[1], self.torsion[0])
        return Word(tuple(Block("B" if b.base == "A" else "A", b.exponent) for b in self.blocks), tor)

    def __str__(self) -> str:
        return format_word(self)


def reduce_blocks(blocks, torsion: Torsion = None) -> Word:
    stack: list[list] = []
    for blk in blocks:
        base, e = blk.base, blk.exponent
        if stack and stack[-1][0] == base:
            stack[-1][1] += e
        else:
            stack.append([base, e])
        # cancellations may cascade down the stack
        while stack:
            top = stack[-1]
            top[1] = normal_exponent(top[1], _order_of(top[0], torsion))
            if top[1] != 0:
                break
            stack.pop()
            if len(stack) >= 2 and stack[-1][0] == stack[-2][0]:
                b2, e2 = stack.pop()
                stack[-1][1] += e2
            else:
                break
    return Word(tuple(Block(b, e) for b, e in stack), torsion)


def _letter_blocks(letters):
    for ch in letters:
        if ch not in LETTER_ORDER:
            raise InputError(f"unknown letter {ch!r}; use A, a, B, b")
        yield Block(ch.upper(), 1 if ch.isupper() else -1)


def reduce_word(w, torsion: Torsion = None) -> Word:
    """Reduce a raw letter sequence (string over ``AaBb``) or a Word."""
    if isinstance(w, Word):
        return reduce_blocks(w.blocks, torsion if torsion is not None else w.torsion)
    return reduce_blocks(list(_letter_blocks(w)), torsion)


def block_decompose(w: Word) -> list:
    return list(w.blocks)


def format_word(w: Word) -> str:
    return ".".join(str(b) for b in w.blocks) if w.blocks else "e"


_BLOCK = re.compile(r"([AaBb])(?:\^(-?\d+))?")


def parse_word(text: str, torsion: Torsion = None) -> Word:
    """Parse ``A^2.B^-3``, ``ABab`` or ``e``."""
    s = text.replace(" ", "").replace(".", "")
    if s in ("", "e"):
        return Word((), torsion)
    blocks = []
    pos = 0
    while pos < len(s):
        m = _BLOCK.match(s, pos)
        if not m:
            raise InputError(f"cannot parse word {text!r} at position {pos}")
        ch, e = m.group(1), int(m.group(2) or 1)
        blocks.append(Block(ch.upper(), e if ch.isupper() else -e))
        pos = m.end()
    return reduce_blocks(blocks, torsion)


def _run_allowed(run: int, positive: bool, n: int) -> bool:
    if n == 0:
        return True
    return 2 * run <= n if positive else 2 * run < n


def _max_letters(torsion: Torsion, max_blocks: int):
    if torsion is None or 0 in torsion:
        return None
    return max_blocks * max(torsion[0] // 2, torsion[1] // 2)


def enumerate_words(
    torsion: Torsion,
    max_blocks: int,
    exclude_pure_powers: bool = False,
    max_letters: Optional[int] = None,
) -> Iterator[Word]:
    """Normal-form words with at most ``max_blocks`` blocks, shortest first and
    lexicographic (``A < a < B < b``) within a length.  Infinite when a
    generator has infinite order, unless ``max_letters`` bounds it."""
    if max_blocks < 1:
        raise InputError("max_blocks must be at least 1")
    cap = _max_letters(torsion, max_blocks)
    limit = cap if max_letters is None else (max_letters if cap is None else min(cap, max_letters))
    min_blocks = 2 if exclude_pure_powers else 1
    length = 0
    while limit is None or length < limit:
        length += 1
        yield from _words_of_length(length, torsion, max_blocks, min_blocks)


def _words_of_length(length, torsion, max_blocks, min_blocks):
    out: list[str] = []

    def dfs(prefix, last, run, nblocks):
        if len(prefix) == length:
            if nblocks >= min_blocks:
                out.append(prefix)
            return
        remaining = length - len(prefix)
        for ch in LETTER_ORDER:
            base = ch.upper()
            if last is not None and ch != last and base == last.upper():
                continue                      # cancelling pair
            if ch == last:
                new_run, new_blocks = run + 1, nblocks
            else:
                new_run, new_blocks = 1, nblocks + 1
            if new_blocks > max_blocks:
                continue
            if not _run_allowed(new_run, ch.isupper(), _order_of(base, torsion)):
                continue
            # not enough letters left to reach the minimum block count
            if new_blocks + (remaining - 1) < min_blocks:
                continue
            dfs(prefix + ch, ch, new_run, new_blocks)

    dfs("", None, 0, 0)
    for s in out:
        yield reduce_word(s, torsion)
