"""Pure-Python edit-distance kernels.

Behavioural twin of the compiled extension in ``_speed.pyx``. Both modules
expose the same callables with identical results; the package ``__init__``
picks whichever is importable. Keep any semantic change in lockstep across
the two files.

``bounded_levenshtein`` runs the classic banded dynamic program: only cells
with ``|i - j| <= cap`` are materialised and a row whose minimum exceeds the
cap abandons the whole computation. ``scan_best`` folds one bucket of
candidate strings into a running top-N list, tightening its own distance
bound as better candidates arrive.
"""

from __future__ import annotations

from bisect import insort
from typing import Sequence


def levenshtein(a: str, b: str) -> int:
    """Unit-cost Levenshtein distance between two strings."""
    if a == b:
        return 0
    la, lb = len(a), len(b)
    return bounded_levenshtein(a, b, la if la > lb else lb)


def bounded_levenshtein(a: str, b: str, cap: int) -> int:
    """Levenshtein distance if it is <= cap, else cap + 1.

    cap must be >= 0. The result is exact whenever it is <= cap; values
    above the cap are all collapsed to the cap + 1 sentinel.
    """
    if cap < 0:
        raise ValueError(f"cap must be >= 0, got {cap}")
    la, lb = len(a), len(b)
    diff = la - lb if la > lb else lb - la
    if diff > cap:
        return cap + 1
    if la == 0:
        return lb
    if lb == 0:
        return la
    longest = la if la > lb else lb
    eff = cap if cap < longest else longest
    big = eff + 1

    # row[j] holds D(i, j) for the current i; cells outside the band read big.
    row = [j if j <= eff else big for j in range(lb + 1)]
    for i in range(1, la + 1):
        jlo = i - eff
        if jlo < 1:
            jlo = 1
        jhi = i + eff
        if jhi > lb:
            jhi = lb
        prev_diag = row[jlo - 1]
        cur_left = i if jlo == 1 else big
        row_min = big
        ca = a[i - 1]
        for j in range(jlo, jhi + 1):
            up = row[j]
            val = prev_diag if ca == b[j - 1] else prev_diag + 1
            if up + 1 < val:
                val = up + 1
            if cur_left + 1 < val:
                val = cur_left + 1
            if val > big:
                val = big
            prev_diag = up
            row[j] = val
            cur_left = val
            if val < row_min:
                row_min = val
        if jlo == 1:
            row[0] = i if i < big else big
        if jhi < lb:
            row[jhi + 1] = big
        if row_min > eff:
            return cap + 1
    d = row[lb]
    return d if d <= eff else cap + 1


def prepare_keys(keys: Sequence[str]) -> list[str]:
    """Preprocess candidate keys once for repeated scan_best queries.

    The pure backend needs no precomputation; the compiled twin flattens
    the keys into C arrays here. The returned object is only meaningful to
    the backend that produced it.
    """
    return list(keys)


def scan_best(
    query: str,
    prepared: list[str],
    entries: Sequence[str],
    n: int,
    best: list[tuple[int, str]],
) -> None:
    """Merge one prepared bucket of candidates into a top-N list, in place.

    ``best`` is kept sorted ascending by (distance, entry) and never grows
    beyond ``n`` items. After the call it equals the first ``n`` of
    ``sorted(old_best + [(levenshtein(query, k), e) for k, e in zip(keys,
    entries)])``. Entries must be distinct across the old list and the
    bucket. Length pruning and the running bound only skip candidates that
    provably cannot enter the final list.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    keys = prepared
    if len(keys) != len(entries):
        raise ValueError("entries and prepared keys differ in length")
    lq = len(query)
    full = len(best) >= n
    cap = best[-1][0] if full else 0
    for i, key in enumerate(keys):
        lk = len(key)
        if full:
            diff = lk - lq if lk > lq else lq - lk
            if diff > cap:
                continue
            bound = cap
        else:
            bound = lq if lq > lk else lk
        d = bounded_levenshtein(query, key, bound)
        if d > bound:
            continue
        entry = entries[i]
        if full:
            worst_d, worst_e = best[-1]
            if d > worst_d or (d == worst_d and not entry < worst_e):
                continue
        insort(best, (d, entry))
        if len(best) > n:
            best.pop()
        if len(best) >= n:
            full = True
            cap = best[-1][0]
