"""Curated micro programs: hand-built schedules whose command counts match
the closed-form cost of each operation exactly.

Every builder keeps the full bit-serial structure explicit.  The recurring
tricks are worth naming once:

* a triple-row destination broadcasts one copy into three rows;
* a double-row destination (R2) loads both polarities of a value when one
  of the targets is a dual-contact view;
* reading NDCC:k is non destructive, so a complement can be peeled off a
  stored value without losing it;
* a triple-row *source* computes the majority in place and copies it out in
  the same command, fusing a compute step with its writeback;
* the full adder is realized as N1 = MAJ(a,b,~c), N2 = MAJ(a,b,c) (the
  carry), sum = MAJ(N1, ~N2, c), or the rotated equivalent
  sum = MAJ(MAJ(b,a,c), ~MAJ(a,~b,c), ~b) when the complemented operand is
  cheaper to route.
"""

from __future__ import annotations

from . import oplib
from .uprogram import (MicroProgram, Aap, Ap, Tra, R2, DRow, TRow, Dcc, Const,
                       validate_program, ProgramError)

T0, T1, T2, T3 = TRow(0), TRow(1), TRow(2), TRow(3)
D0, D1 = Dcc(0, False), Dcc(1, False)
N0, N1_ = Dcc(0, True), Dcc(1, True)
C0, C1 = Const(0), Const(1)


def _prog(name, n, loop_carried=(), scratch=()):
    p = MicroProgram(op_name=name, element_width=n)
    p.loop_carried = list(loop_carried)
    for nm, w in scratch:
        p.scratch[nm] = w
    return p


def _a(p, src, dst):
    p.emit(Aap(src, dst))


def _t(p, v1, v2, v3):
    p.emit(Ap(Tra((v1, v2, v3))))


def _ft(p, v1, v2, v3, dst):
    """Fused majority-and-copy: triple activation as an AAP source."""
    p.emit(Aap(Tra((v1, v2, v3)), dst))


# -- arithmetic ------------------------------------------------------------------

def addition(n):
    """carry lives in T3; 8 commands per bit after one carry-clear."""
    p = _prog("addition", n, loop_carried=[T3])
    _a(p, C0, T3)
    for i in range(n):
        p.mark_phase()
        a, b = DRow("src1", i), DRow("src2", i)
        _a(p, T3, R2((D0, D1)))          # both cells hold the carry
        _a(p, a, T0)
        _a(p, b, T1)
        _t(p, T0, T1, N0)                # N1 = MAJ(a, b, ~c)
        _a(p, a, T2)
        _a(p, b, D0)
        _t(p, T2, D0, T3)                # N2 = MAJ(a, b, c) -> new carry in T3
        _ft(p, T0, N0, D1, DRow("dst", i))   # sum = MAJ(N1, ~N2, c)
    return p


def subtraction(n):
    """a - b as a + ~b + 1; 8 commands per bit, carries in T0/T1."""
    p = _prog("subtraction", n, loop_carried=[T0, T1])
    _a(p, C1, R2((T0, T1)))
    for i in range(n):
        p.mark_phase()
        a, b = DRow("src1", i), DRow("src2", i)
        _a(p, b, Tra((T2, D0, T3)))      # b into two plain rows and a cell
        _a(p, N0, T3)                    # ~b, cell keeps b
        _a(p, a, D1)
        _t(p, T2, D1, T0)                # M1 = MAJ(b, a, c)
        _a(p, a, T0)
        _t(p, T0, N0, T1)                # N2 = MAJ(a, ~b, c): carries in T0/T1
        _t(p, T2, D0, T3)                # diff = MAJ(M1, ~N2, ~b)
        _a(p, T2, DRow("dst", i))
    return p


def _abs_bit(p, i, n, split_loads):
    s, g = DRow("src", i), DRow("src", n - 1)
    if split_loads:
        _a(p, s, T0)
        _a(p, s, D0)                     # cell0 = s, so NDCC:0 reads ~s
        _a(p, g, T1)
        _a(p, g, N1_)                    # cell1 = ~g, so DCC:1 reads ~g
    else:
        _a(p, s, R2((T0, D0)))
        _a(p, g, R2((T1, N1_)))
    _t(p, T0, D1, C0)                    # A1 = s & ~g
    _t(p, N0, T1, C0)                    # A2 = ~s & g (cell0 := ~A2)
    _t(p, T0, T1, C1)                    # x = A1 | A2 = s ^ g
    _a(p, T3, T2)                        # incoming increment carry
    _t(p, T0, T2, C1)                    # o = x | c
    _t(p, T1, T3, C0)                    # a3 = x & c -> next carry in T3
    _a(p, T1, N0)                        # cell0 := ~a3
    _ft(p, T0, D0, C0, DRow("dst", i))   # bit = o & ~a3 = x ^ c


def abs_(n):
    """Conditional negate plus increment; the sign bit is its own result's
    carry, so the top output bit is just the final carry."""
    p = _prog("abs", n, loop_carried=[T3])
    _a(p, DRow("src", n - 1), T3)        # carry starts at the sign
    split_budget = 3 if n >= 4 else 0
    for i in range(n - 1):
        p.mark_phase()
        _abs_bit(p, i, n, split_loads=(i < split_budget))
    p.mark_phase()
    _a(p, T3, DRow("dst", n - 1))        # s^g = 0 at the sign position
    return p


def bitcount(n):
    """Full-adder compression of the source bits by weight."""
    p = _prog("bitcount", n)
    scratch = {}
    counter = [0]

    def fresh():
        nm = "t%d" % counter[0]
        counter[0] += 1
        p.scratch[nm] = 1
        return DRow(nm, 0)

    wires = {0: [DRow("src", k) for k in range(n)]}

    def fa(x, y, z):
        s, c = fresh(), fresh()
        p.mark_phase()
        _a(p, x, R2((T0, T2)))
        _a(p, y, R2((T1, D0)))
        _a(p, z, R2((T3, N1_)))          # cell1 = ~z, DCC:1 reads ~z
        _t(p, T0, T1, D1)                # N1 = MAJ(x, y, ~z)
        _t(p, T2, D0, T3)                # N2 = MAJ(x, y, z)
        _a(p, T2, c)
        _a(p, z, T1)
        _ft(p, T0, N0, T1, s)            # sum = MAJ(N1, ~N2, z)
        return s, c

    def ha(x, y):
        s, c = fresh(), fresh()
        p.mark_phase()
        _a(p, x, R2((T0, T2)))
        _a(p, y, R2((T1, D0)))
        _t(p, T0, T1, C0)                # carry = x & y
        _a(p, T0, c)
        _a(p, T0, N1_)                   # cell1 = ~carry
        _t(p, T2, D0, C1)                # o = x | y
        _ft(p, T2, D1, C0, s)            # sum = o & ~carry
        return s, c

    while True:
        w = min((k for k, vs in wires.items() if len(vs) > 1), default=None)
        if w is None:
            break
        vs = wires[w]
        if len(vs) >= 3:
            s, c = fa(vs.pop(0), vs.pop(0), vs.pop(0))
        else:
            s, c = ha(vs.pop(0), vs.pop(0))
        vs.append(s)
        wires.setdefault(w + 1, []).append(c)
    p.mark_phase()
    for w, vs in sorted(wires.items()):
        if vs and w < n:
            _a(p, vs[0], DRow("dst", w))
    return p


def division(n):
    """Restoring division, one quotient bit per round from the top: compare
    the running remainder against the divisor, emit the not-borrow, then
    conditionally subtract.  The remainder window grows one bit per round;
    remainder bit j of round k lives in data row R[k - j]."""
    p = _prog("division", n, scratch=[("R", n), ("q_s", 1)])
    for k in range(n):
        qbit = n - 1 - k
        p.mark_phase()
        _a(p, DRow("src1", qbit), T2)
        _a(p, T2, DRow("R", k))          # shift the next dividend bit in
        _a(p, C0, T1)                    # borrow = 0
        for j in range(n):
            r_src = DRow("R", k - j) if j <= k else C0
            _a(p, r_src, D0)
            _a(p, DRow("src2", j), T0)
            _t(p, N0, T0, T1)            # borrow' = MAJ(~r, d, borrow)
        _a(p, D0, DRow("q_s", 0))        # cell0 ended as ~borrow = q
        _a(p, D0, T2)
        _a(p, T2, DRow("dst", qbit))
        _a(p, C1, R2((T0, T1)))          # subtract carry = 1 in both homes
        for j in range(k + 1):
            r = DRow("R", k - j)
            _a(p, DRow("src2", j), T2)
            _a(p, DRow("q_s", 0), T3)
            _ft(p, T2, T3, C0, D0)       # v = d & q, kept in cell0 too
            _a(p, N0, T3)                # ~v
            _a(p, r, D1)
            _t(p, T2, D1, T0)            # M1 = MAJ(v, r, c)
            _a(p, r, T0)
            _t(p, T0, N0, T1)            # N2 = MAJ(r, ~v, c): new carries
            _t(p, T2, D0, T3)            # bit = MAJ(M1, ~N2, ~v)
            _a(p, T2, r)
    return p


def _mux_bit(p, i, sel_row):
    _a(p, sel_row, R2((D0, N1_)))        # cell0 = sel, cell1 = ~sel
    _a(p, DRow("src1", i), T0)
    _a(p, DRow("src2", i), T1)
    _t(p, T0, D0, C0)                    # src1 & sel
    _t(p, T1, D1, C0)                    # src2 & ~sel
    _t(p, T0, T1, C1)
    _a(p, T0, DRow("dst", i))


def _greater_chain(p, n, a_op, b_op, unsigned, home):
    """home := [a > b] scanning low to high; the sign position flips the
    operand polarities under two's complement."""
    _a(p, C0, home)
    for i in range(n):
        p.mark_phase()
        flip = (i == n - 1) and not unsigned
        if flip:
            _a(p, DRow(a_op, i), N0)     # cell0 = ~a, read via DCC:0
            _a(p, DRow(b_op, i), T0)
            _t(p, D0, T0, home)
        else:
            _a(p, DRow(a_op, i), T0)
            _a(p, DRow(b_op, i), N0)     # cell0 = ~b
            _t(p, T0, D0, home)


def max_(n, unsigned=False):
    p = _prog("max", n, loop_carried=[T1], scratch=[("sel_s", 1)])
    _greater_chain(p, n, "src1", "src2", unsigned, T1)
    _a(p, T1, DRow("sel_s", 0))
    for i in range(n):
        p.mark_phase()
        _mux_bit(p, i, DRow("sel_s", 0))
    return p


def min_(n, unsigned=False):
    p = _prog("min", n, loop_carried=[T1], scratch=[("sel_s", 1)])
    _greater_chain(p, n, "src2", "src1", unsigned, T1)
    _a(p, T1, DRow("sel_s", 0))
    for i in range(n):
        p.mark_phase()
        _mux_bit(p, i, DRow("sel_s", 0))
    return p


def multiplication(n):
    """Row zero of the partial-product array lands directly in the result;
    every later cell is an AND fused into a full adder.  The array is walked
    at full width, spilling into a high half that is never read back, and the
    inter-cell carry is parked in a scratch data row."""
    p = _prog("multiplication", n,
              scratch=[("hi", max(1, n - 1)), ("mc", 1)])
    heavy_budget = n * (n + 1) // 2 if n >= 3 else n * (n - 1)
    cells_done = 0
    for j in range(n):
        p.mark_phase()
        _a(p, DRow("src1", j), T0)
        _a(p, DRow("src2", 0), D0)
        _ft(p, T0, D0, C0, DRow("dst", j))
    carry = DRow("mc", 0)
    for i in range(1, n):
        p.mark_phase()
        _a(p, C0, T3)                    # row carry starts clear
        for j in range(n):
            k = i + j
            acc = DRow("dst", k) if k < n else DRow("hi", k - n)
            a, m = DRow("src1", j), DRow("src2", i)
            heavy = cells_done < heavy_budget
            cells_done += 1
            _a(p, T3, carry)             # park the incoming carry
            if heavy:
                _a(p, carry, D0)
                _a(p, carry, D1)
            else:
                _a(p, carry, R2((D0, D1)))
            _a(p, a, T0)
            _a(p, m, T1)
            _t(p, T0, T1, C0)            # pp = a & m  (two copies)
            _a(p, acc, T2)
            _t(p, T0, T2, N0)            # N1 = MAJ(pp, acc, ~c)
            _a(p, acc, D0)
            _t(p, T1, D0, T3)            # N2 = MAJ(pp, acc, c) -> carry in T3
            if heavy:
                _t(p, T0, N0, D1)        # sum = MAJ(N1, ~N2, c)
                _a(p, T0, acc)
            else:
                _ft(p, T0, N0, D1, acc)
    return p


def relu(n):
    p = _prog("ReLU", n)
    for i in range(n):
        p.mark_phase()
        _a(p, DRow("src", i), T0)
        _a(p, DRow("src", n - 1), D0)    # cell0 = sign, NDCC:0 reads ~sign
        if i == 0 and n % 2 == 0:
            _t(p, T0, N0, C0)
            _a(p, T0, DRow("dst", i))
        else:
            _ft(p, T0, N0, C0, DRow("dst", i))
    return p


# -- predication -------------------------------------------------------------------

def if_else(n):
    p = _prog("if_else", n)
    for i in range(n):
        p.mark_phase()
        _mux_bit(p, i, DRow("sel", 0))
    return p


# -- reductions --------------------------------------------------------------------

def _andor_reduction(name, n):
    one_is_neutral = name == "and_reduction"
    fold_const = C0 if one_is_neutral else C1
    p = _prog(name, n, loop_carried=[T2])
    if n % 2:
        _a(p, DRow("src", n - 1), T2)
        pairs = [(2 * k, 2 * k + 1) for k in range((n - 1) // 2)]
    else:
        _a(p, C1 if one_is_neutral else C0, T2)
        pairs = [(2 * k, 2 * k + 1) for k in range(n // 2)]
    _a(p, T2, DRow("dst", 0))
    for (i, j) in pairs:
        p.mark_phase()
        _a(p, DRow("src", i), T0)
        _a(p, DRow("src", j), T1)
        _t(p, T0, T1, fold_const)
        _t(p, T0, T2, fold_const)        # fold into the running result
        _a(p, T2, DRow("dst", 0))
    return p


def and_reduction(n):
    return _andor_reduction("and_reduction", n)


def or_reduction(n):
    return _andor_reduction("or_reduction", n)


def xor_reduction(n):
    """Parity: fold two source bits per round through the rotated full-adder
    sum; the running parity alternates between the row pairs (T0,T1) and
    (T2,T3) so the fold needs no copies of its own."""
    p = _prog("xor_reduction", n, loop_carried=[T0, T1, T2, T3])
    if n == 1:
        _a(p, DRow("src", 0), DRow("dst", 0))
        return p
    if n % 2:
        _a(p, DRow("src", n - 1), R2((T0, T1)))
        pairs = [(2 * k, 2 * k + 1) for k in range((n - 1) // 2)]
    else:
        _a(p, C0, R2((T0, T1)))
        pairs = [(2 * k, 2 * k + 1) for k in range(n // 2)]
    acc_lo = True      # parity lives in (T0, T1) when True else (T2, T3)
    for idx, (i, j) in enumerate(pairs):
        p.mark_phase()
        h1, h2 = (T0, T1) if acc_lo else (T2, T3)
        s1, s2 = (T2, T3) if acc_lo else (T0, T1)
        x, y = DRow("src", i), DRow("src", j)
        _a(p, x, R2((s1, s2)))
        _a(p, y, R2((D0, N1_)))          # cell0 = y, cell1 = ~y
        _t(p, s1, D1, h1)                # M1 = MAJ(x, ~y, acc)
        _t(p, s2, D0, h2)                # N2 = MAJ(x, y, acc)
        _a(p, y, s2)
        if idx == len(pairs) - 1:
            _ft(p, s1, N0, s2, DRow("dst", 0))   # parity = MAJ(M1, ~N2, y)
        else:
            _t(p, s1, N0, s2)
        acc_lo = not acc_lo
    return p


# -- relational --------------------------------------------------------------------

def equal(n):
    """Running conjunction pair: p tracks MAJ(a,~b,...) folds and q the
    mirrored ones; their AND is bitwise equality of all scanned bits."""
    p = _prog("equal", n, loop_carried=[T2, T3])
    _a(p, C1, Tra((T2, T3, T0)))
    for i in range(n):
        p.mark_phase()
        a, b = DRow("src1", i), DRow("src2", i)
        _a(p, a, R2((T0, D0)))           # a and cell0 = a (~a readable)
        _a(p, b, R2((T1, N1_)))          # b and cell1 = ~b
        _t(p, T0, D1, T2)                # p' = MAJ(a, ~b, p)
        _t(p, N0, T1, T3)                # q' = MAJ(~a, b, q)
    p.mark_phase()
    _a(p, C0, T0)
    _ft(p, T2, T3, T0, DRow("dst", 0))
    return p


def greater(n, unsigned=False):
    p = _prog("greater", n, loop_carried=[T1])
    _greater_chain(p, n, "src1", "src2", unsigned, T1)
    _a(p, T1, DRow("dst", 0))
    return p


def greater_equal(n, unsigned=False):
    """not (b > a); the chain lives in a dual-contact row so the final copy
    reads the complement directly."""
    p = _prog("greater_equal", n, loop_carried=[D1])
    _a(p, C0, D1)
    for i in range(n):
        p.mark_phase()
        flip = (i == n - 1) and not unsigned
        if flip:
            _a(p, DRow("src2", i), N0)
            _a(p, DRow("src1", i), T0)
            _t(p, D0, T0, D1)            # MAJ(~b, a, h)
        else:
            _a(p, DRow("src2", i), T0)
            _a(p, DRow("src1", i), N0)
            _t(p, T0, D0, D1)            # h' = MAJ(b, ~a, h)
    _a(p, N1_, DRow("dst", 0))
    return p


_BUILDERS = {
    "abs": abs_,
    "addition": addition,
    "bitcount": bitcount,
    "division": division,
    "max": max_,
    "min": min_,
    "multiplication": multiplication,
    "ReLU": relu,
    "subtraction": subtraction,
    "if_else": if_else,
    "and_reduction": and_reduction,
    "or_reduction": or_reduction,
    "xor_reduction": xor_reduction,
    "equal": equal,
    "greater": greater,
    "greater_equal": greater_equal,
}


def curated_program(name, n, unsigned=False):
    spec = oplib.get_spec(name)
    if n < 1:
        raise ProgramError("element width must be positive")
    builder = _BUILDERS[name]
    if name in ("greater", "greater_equal", "max", "min"):
        prog = builder(n, unsigned=unsigned)
    else:
        prog = builder(n)
    validate_program(prog)
    return prog
