# cython: boundscheck=False, wraparound=False, nonecheck=False
"""Compiled edit-distance kernels.

Twin of ``_pure.py``; see that module for the behavioural contract.

``prepare_keys`` flattens a bucket of candidate strings into contiguous
code-point and bitmask arrays once, so the per-query scan never touches
Python objects until a candidate actually enters the running top-N list.
The scan prunes with two admissible lower bounds (length difference and
character-set difference) and computes surviving distances with Myers'
bit-parallel algorithm (queries up to 64 chars), falling back to banded
dynamic programming for longer or exotic queries.
"""

from bisect import insort

from cpython.mem cimport PyMem_Free, PyMem_Malloc
from libc.string cimport memset

cdef extern from "Python.h":
    int PyUnicode_KIND(object o)
    void *PyUnicode_DATA(object o)
    Py_UCS4 PyUnicode_READ(int kind, void *data, Py_ssize_t index)
    Py_ssize_t PyUnicode_GET_LENGTH(object o)

ctypedef unsigned long long u64

DEF PEQ_SIZE = 1024


cdef inline void _fill_ucs4(object s, Py_ssize_t length, Py_UCS4 *buf):
    cdef int kind = PyUnicode_KIND(s)
    cdef void *data = PyUnicode_DATA(s)
    cdef Py_ssize_t i
    for i in range(length):
        buf[i] = PyUnicode_READ(kind, data, i)


cdef inline int _char_bit(Py_UCS4 ch) noexcept nogil:
    # A-Z get private bits; everything else shares five overflow bits.
    # Collisions only weaken the set lower bound, never break it.
    cdef unsigned int c = <unsigned int> ch
    if 65 <= c and c <= 90:
        return <int> (c - 65)
    return 26 + <int> (c % 5)


cdef inline unsigned int _mask_of(const Py_UCS4 *codes, Py_ssize_t length) noexcept nogil:
    cdef unsigned int mask = 0
    cdef Py_ssize_t i
    for i in range(length):
        mask |= (<unsigned int> 1) << _char_bit(codes[i])
    return mask


cdef inline int _popcount(unsigned int x) noexcept nogil:
    cdef int n = 0
    while x:
        x &= x - 1
        n += 1
    return n


cdef int _banded(const Py_UCS4 *a, int la, const Py_UCS4 *b, int lb,
                 int eff, int *row) noexcept nogil:
    """D(a, b) exactly when <= eff, else eff + 1. Requires |la - lb| <= eff,
    la >= 1, lb >= 1 and row sized lb + 1."""
    cdef int big = eff + 1
    cdef int i, j, jlo, jhi, prev_diag, cur_left, row_min, up, val
    cdef Py_UCS4 ca
    for j in range(lb + 1):
        row[j] = j if j <= eff else big
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
            if ca == b[j - 1]:
                val = prev_diag
            else:
                val = prev_diag + 1
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
            return big
    return row[lb] if row[lb] <= eff else big


cdef int _myers(const u64 *peq, int lq, const Py_UCS4 *key, int lk,
                int cap) noexcept nogil:
    """Myers bit-parallel distance for lq in 1..64; exact when <= cap,
    else any value > cap. Abandons when the score cannot come back."""
    cdef u64 full = <u64> 0 - 1 if lq == 64 else ((<u64> 1) << lq) - 1
    cdef u64 top = (<u64> 1) << (lq - 1)
    cdef u64 pv = full
    cdef u64 mv = 0
    cdef u64 eq, xv, xh, ph, mh
    cdef int score = lq
    cdef int j
    cdef Py_UCS4 c
    for j in range(lk):
        c = key[j]
        eq = peq[c] if c < PEQ_SIZE else 0
        xv = eq | mv
        xh = (((eq & pv) + pv) ^ pv) | eq
        ph = mv | ~(xh | pv)
        mh = pv & xh
        if ph & top:
            score += 1
        elif mh & top:
            score -= 1
        ph = (ph << 1) | 1
        mh = mh << 1
        pv = (mh | ~(xv | ph)) & full
        mv = ph & xv & full
        if score - (lk - 1 - j) > cap:
            return cap + 1
    return score


cdef int _bounded_str(str a, str b, int cap) except -1:
    cdef Py_ssize_t la = PyUnicode_GET_LENGTH(a)
    cdef Py_ssize_t lb = PyUnicode_GET_LENGTH(b)
    cdef Py_ssize_t diff = la - lb if la > lb else lb - la
    if diff > cap:
        return cap + 1
    if la == 0:
        return <int> lb
    if lb == 0:
        return <int> la
    cdef int longest = <int> (la if la > lb else lb)
    cdef int eff = cap if cap < longest else longest
    cdef Py_UCS4 *abuf = <Py_UCS4 *> PyMem_Malloc((la + lb) * sizeof(Py_UCS4))
    cdef int *row = <int *> PyMem_Malloc((lb + 1) * sizeof(int))
    if abuf == NULL or row == NULL:
        PyMem_Free(abuf)
        PyMem_Free(row)
        raise MemoryError()
    cdef Py_UCS4 *bbuf = abuf + la
    cdef int d
    try:
        _fill_ucs4(a, la, abuf)
        _fill_ucs4(b, lb, bbuf)
        d = _banded(abuf, <int> la, bbuf, <int> lb, eff, row)
    finally:
        PyMem_Free(abuf)
        PyMem_Free(row)
    return d if d <= eff else cap + 1


def levenshtein(str a, str b) -> int:
    """Unit-cost Levenshtein distance between two strings."""
    if a == b:
        return 0
    cdef Py_ssize_t la = PyUnicode_GET_LENGTH(a)
    cdef Py_ssize_t lb = PyUnicode_GET_LENGTH(b)
    return _bounded_str(a, b, <int> (la if la > lb else lb))


def bounded_levenshtein(str a, str b, cap) -> int:
    """Levenshtein distance if it is <= cap, else cap + 1."""
    cdef int c = cap
    if c < 0:
        raise ValueError(f"cap must be >= 0, got {cap}")
    return _bounded_str(a, b, c)


cdef class _Prepared:
    """Contiguous code points, offsets and character masks for one bucket."""

    cdef Py_UCS4 *codes
    cdef Py_ssize_t *offsets
    cdef unsigned int *masks
    cdef readonly Py_ssize_t n
    cdef readonly Py_ssize_t max_len

    def __cinit__(self, keys):
        cdef list keys_l = list(keys) if not isinstance(keys, list) else keys
        cdef Py_ssize_t n = len(keys_l)
        cdef Py_ssize_t total = 0, i, lk
        self.n = n
        self.max_len = 0
        for i in range(n):
            lk = PyUnicode_GET_LENGTH(keys_l[i])
            total += lk
            if lk > self.max_len:
                self.max_len = lk
        self.codes = <Py_UCS4 *> PyMem_Malloc((total if total else 1) * sizeof(Py_UCS4))
        self.offsets = <Py_ssize_t *> PyMem_Malloc((n + 1) * sizeof(Py_ssize_t))
        self.masks = <unsigned int *> PyMem_Malloc((n if n else 1) * sizeof(unsigned int))
        if self.codes == NULL or self.offsets == NULL or self.masks == NULL:
            raise MemoryError()
        cdef Py_ssize_t pos = 0
        self.offsets[0] = 0
        for i in range(n):
            lk = PyUnicode_GET_LENGTH(keys_l[i])
            _fill_ucs4(keys_l[i], lk, self.codes + pos)
            pos += lk
            self.offsets[i + 1] = pos
            self.masks[i] = _mask_of(self.codes + self.offsets[i], lk)

    def __dealloc__(self):
        PyMem_Free(self.codes)
        PyMem_Free(self.offsets)
        PyMem_Free(self.masks)

    def __len__(self):
        return self.n


def prepare_keys(keys) -> _Prepared:
    """Preprocess candidate keys once for repeated scan_best queries."""
    return _Prepared(keys)


def scan_best(str query, prepared, entries, n, best) -> None:
    """Merge one prepared bucket into a running top-N list, in place.

    Same contract as the pure twin: ``best`` stays sorted ascending by
    (distance, entry), is truncated to ``n`` items, and ends up equal to a
    full rescan of old content plus this bucket.
    """
    cdef int topn = n
    if topn < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not isinstance(prepared, _Prepared):
        raise TypeError("prepared must come from this backend's prepare_keys")
    cdef _Prepared prep = <_Prepared> prepared
    cdef list entries_l = list(entries) if not isinstance(entries, list) else entries
    if len(entries_l) != prep.n:
        raise ValueError("entries and prepared keys differ in length")
    cdef list best_l = best
    cdef Py_ssize_t lq = PyUnicode_GET_LENGTH(query)

    cdef Py_UCS4 *qbuf = <Py_UCS4 *> PyMem_Malloc((lq + 1) * sizeof(Py_UCS4))
    cdef int *row = <int *> PyMem_Malloc((prep.max_len + 2) * sizeof(int))
    cdef u64 *peq = <u64 *> PyMem_Malloc(PEQ_SIZE * sizeof(u64))
    if qbuf == NULL or row == NULL or peq == NULL:
        PyMem_Free(qbuf)
        PyMem_Free(row)
        PyMem_Free(peq)
        raise MemoryError()

    cdef bint fast = 1 <= lq <= 64
    cdef unsigned int qmask = 0
    cdef Py_ssize_t i
    cdef bint full
    cdef int cap, bound, d, worst_d, eff, lb_mask
    cdef Py_ssize_t lk, diff
    cdef Py_UCS4 *kptr
    cdef object entry, worst
    try:
        _fill_ucs4(query, lq, qbuf)
        qmask = _mask_of(qbuf, lq)
        if fast:
            for i in range(lq):
                if qbuf[i] >= PEQ_SIZE:
                    fast = 0
                    break
        if fast:
            memset(peq, 0, PEQ_SIZE * sizeof(u64))
            for i in range(lq):
                peq[qbuf[i]] |= (<u64> 1) << i

        full = len(best_l) >= topn
        cap = <int> (<tuple> best_l[len(best_l) - 1])[0] if full else 0
        for i in range(prep.n):
            lk = prep.offsets[i + 1] - prep.offsets[i]
            if full:
                diff = lk - lq if lk > lq else lq - lk
                if diff > cap:
                    continue
                bound = cap
            else:
                bound = <int> (lq if lq > lk else lk)
            if lq == 0 or lk == 0:
                d = <int> (lq if lq > lk else lk)
            else:
                if full:
                    lb_mask = _popcount(qmask & ~prep.masks[i])
                    if _popcount(prep.masks[i] & ~qmask) > lb_mask:
                        lb_mask = _popcount(prep.masks[i] & ~qmask)
                    if lb_mask > cap:
                        continue
                kptr = prep.codes + prep.offsets[i]
                if fast:
                    d = _myers(peq, <int> lq, kptr, <int> lk, bound)
                else:
                    eff = bound if bound < <int> (lq if lq > lk else lk) else <int> (lq if lq > lk else lk)
                    d = _banded(qbuf, <int> lq, kptr, <int> lk, eff, row)
            if d > bound:
                continue
            entry = entries_l[i]
            if full:
                worst = best_l[len(best_l) - 1]
                worst_d = <int> (<tuple> worst)[0]
                if d > worst_d or (d == worst_d and not entry < (<tuple> worst)[1]):
                    continue
            insort(best_l, (d, entry))
            if len(best_l) > topn:
                best_l.pop()
            if len(best_l) >= topn:
                full = True
                cap = <int> (<tuple> best_l[len(best_l) - 1])[0]
    finally:
        PyMem_Free(qbuf)
        PyMem_Free(row)
        PyMem_Free(peq)
