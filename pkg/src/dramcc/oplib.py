"""The sixteen supported operations: metadata, scalar reference oracles,
and gate-level circuit constructions.

Oracles are plain-integer models used as ground truth for everything else:
values are stored as unsigned n-bit patterns, arithmetic wraps mod 2**n, and
operations that compare against zero interpret their operands in two's
complement (abs, ReLU, max, min, and the ordered comparisons by default).

Circuits come in two granularities.  ``slice_mig`` returns compact
hand-verified majority bit-slices (the authoritative compilation input);
``build_bitslice_aoig`` returns the textbook AND/OR construction of the same
slice, and ``build_full_aoig`` unrolls an operation into one evaluable graph
for exhaustive equivalence testing at small widths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import mig as mg

ARITH = "Arithmetic"
PRED = "Predication"
RED = "Reduction"
REL = "Relational"

LINEAR = "Linear"
LOG = "Logarithmic"
QUAD = "Quadratic"


class OperationError(Exception):
    pass


class DivisionByZero(OperationError):
    def __init__(self, lane):
        self.lane = lane
        super().__init__("division by zero in lane %d" % lane)


@dataclass(frozen=True)
class OperationSpec:
    name: str
    type: str
    klass: str
    operands: tuple            # input operand names, in order
    signed: bool               # operands compared/interpreted as signed
    out_width: str             # "n" or "1"
    formula: str               # human-readable count formula
    count_fn: object = None    # n -> exact expected count, or None (range)
    count_range_fn: object = None   # n -> (lo, hi) inclusive

    def out_bits(self, n):
        return n if self.out_width == "n" else 1


def _f(fn):
    return fn


_SPECS = [
    OperationSpec("abs", ARITH, LINEAR, ("src",), True, "n",
                  "10n - 2", _f(lambda n: 10 * n - 2)),
    OperationSpec("addition", ARITH, LINEAR, ("src1", "src2"), False, "n",
                  "8n + 1", _f(lambda n: 8 * n + 1)),
    OperationSpec("bitcount", ARITH, LINEAR, ("src",), False, "n",
                  "[8n - 8log2(n+1), 8n]", None,
                  _f(lambda n: (8 * n - 8 * math.log2(n + 1), 8 * n))),
    OperationSpec("division", ARITH, QUAD, ("src1", "src2"), False, "n",
                  "8n^2 + 12n", _f(lambda n: 8 * n * n + 12 * n)),
    OperationSpec("max", ARITH, LINEAR, ("src1", "src2"), True, "n",
                  "10n + 2", _f(lambda n: 10 * n + 2)),
    OperationSpec("min", ARITH, LINEAR, ("src1", "src2"), True, "n",
                  "10n + 2", _f(lambda n: 10 * n + 2)),
    OperationSpec("multiplication", ARITH, QUAD, ("src1", "src2"), False, "n",
                  "11n^2 - 5n - 1", _f(lambda n: 11 * n * n - 5 * n - 1)),
    OperationSpec("ReLU", ARITH, LINEAR, ("src",), True, "n",
                  "3n + ((n-1) mod 2)", _f(lambda n: 3 * n + ((n - 1) % 2))),
    OperationSpec("subtraction", ARITH, LINEAR, ("src1", "src2"), False, "n",
                  "8n + 1", _f(lambda n: 8 * n + 1)),
    OperationSpec("if_else", PRED, LINEAR, ("sel", "src1", "src2"), False, "n",
                  "7n", _f(lambda n: 7 * n)),
    OperationSpec("and_reduction", RED, LOG, ("src",), False, "1",
                  "5*floor(n/2) + 2", _f(lambda n: 5 * (n // 2) + 2)),
    OperationSpec("or_reduction", RED, LOG, ("src",), False, "1",
                  "5*floor(n/2) + 2", _f(lambda n: 5 * (n // 2) + 2)),
    OperationSpec("xor_reduction", RED, LOG, ("src",), False, "1",
                  "6*floor(n/2) + 1", _f(lambda n: 6 * (n // 2) + 1)),
    OperationSpec("equal", REL, LINEAR, ("src1", "src2"), False, "1",
                  "4n + 3", _f(lambda n: 4 * n + 3)),
    OperationSpec("greater", REL, LINEAR, ("src1", "src2"), True, "1",
                  "3n + 2", _f(lambda n: 3 * n + 2)),
    OperationSpec("greater_equal", REL, LINEAR, ("src1", "src2"), True, "1",
                  "3n + 2", _f(lambda n: 3 * n + 2)),
]

_BY_NAME = {s.name: s for s in _SPECS}

OP_NAMES = tuple(s.name for s in _SPECS)


def list_operations():
    return list(_SPECS)


def get_spec(name):
    try:
        return _BY_NAME[name]
    except KeyError:
        raise OperationError("unknown operation %r" % (name,)) from None


# -- scalar oracles ----------------------------------------------------------

def to_signed(v, n):
    v &= (1 << n) - 1
    return v - (1 << n) if v & (1 << (n - 1)) else v


def to_unsigned(v, n):
    return v & ((1 << n) - 1)


def oracle(name, n, operands, unsigned=False, strict_division=False):
    """Evaluate one operation lane-wise.

    operands: dict operand-name -> list of unsigned n-bit ints (sel is one
    bit wide).  Returns a list of unsigned output patterns, one per lane.
    """
    spec = get_spec(name)
    lanes = None
    for op in spec.operands:
        if op not in operands:
            raise OperationError("missing operand %r for %s" % (op, name))
        if lanes is None:
            lanes = len(operands[op])
        elif len(operands[op]) != lanes:
            raise OperationError("operand length mismatch for %s" % name)
    mask = (1 << n) - 1
    out = []
    for k in range(lanes):
        vals = {op: operands[op][k] & mask for op in spec.operands}
        out.append(_oracle_lane(spec, n, k, vals, unsigned, strict_division))
    return out


def _oracle_lane(spec, n, lane, v, unsigned, strict_division):
    mask = (1 << n) - 1
    name = spec.name
    if name == "addition":
        return (v["src1"] + v["src2"]) & mask
    if name == "subtraction":
        return (v["src1"] - v["src2"]) & mask
    if name == "multiplication":
        return (v["src1"] * v["src2"]) & mask
    if name == "division":
        if v["src2"] == 0:
            if strict_division:
                raise DivisionByZero(lane)
            return mask
        return (v["src1"] // v["src2"]) & mask
    if name == "abs":
        s = to_signed(v["src"], n)
        return to_unsigned(s if s > 0 else -s, n)
    if name == "ReLU":
        s = to_signed(v["src"], n)
        return v["src"] if s >= 0 else 0
    if name == "max":
        a, b = to_signed(v["src1"], n), to_signed(v["src2"], n)
        return v["src1"] if a > b else v["src2"]
    if name == "min":
        a, b = to_signed(v["src1"], n), to_signed(v["src2"], n)
        return v["src1"] if a < b else v["src2"]
    if name == "bitcount":
        return bin(v["src"]).count("1")
    if name == "if_else":
        return v["src1"] if (v["sel"] & 1) else v["src2"]
    if name == "and_reduction":
        return 1 if v["src"] == mask else 0
    if name == "or_reduction":
        return 1 if v["src"] != 0 else 0
    if name == "xor_reduction":
        return bin(v["src"]).count("1") & 1
    if name == "equal":
        return 1 if v["src1"] == v["src2"] else 0
    if name == "greater":
        if unsigned:
            return 1 if v["src1"] > v["src2"] else 0
        return 1 if to_signed(v["src1"], n) > to_signed(v["src2"], n) else 0
    if name == "greater_equal":
        if unsigned:
            return 1 if v["src1"] >= v["src2"] else 0
        return 1 if to_signed(v["src1"], n) >= to_signed(v["src2"], n) else 0
    raise OperationError("no oracle for %r" % (name,))


# -- hand-verified majority bit slices ----------------------------------------
#
# These small graphs are the compilation input for both program modes.
# Input/output conventions are consumed by the drivers in uprogram/schedules.

def _mig_inputs(g, names):
    return {nm: (g.add_input(nm), False) for nm in names}


def fa_slice_mig(neg_b=False):
    """Full-adder slice: outputs (sum, carry_out) of a + b(+/-) + c."""
    g = mg.Mig()
    r = _mig_inputs(g, ["a", "b", "c"])
    a, b, c = r["a"], r["b"], r["c"]
    if neg_b:
        b = (b[0], True)
    n1 = g.add_gate(mg.MAJ, [a, b, (c[0], True)])
    n2 = g.add_gate(mg.MAJ, [a, b, c])
    s = g.add_gate(mg.MAJ, [(n1, False), (n2, True), c])
    g.set_outputs([(s, False), (n2, False)])
    return g.validate()


def greater_slice_mig(flip=False, neg_out=False):
    """Greater-than chain step: g' = MAJ(a, not b, g); flip swaps the operand
    polarities for the sign-bit position of a two's-complement compare, and
    neg_out complements the emitted result (for >= via not-less-than)."""
    g = mg.Mig()
    r = _mig_inputs(g, ["a", "b", "g"])
    a, b = r["a"], r["b"]
    if flip:
        n = g.add_gate(mg.MAJ, [(a[0], True), b, r["g"]])
    else:
        n = g.add_gate(mg.MAJ, [a, (b[0], True), r["g"]])
    g.set_outputs([(n, neg_out)])
    return g.validate()


def equal_slice_mig():
    """Equality chain step carrying a conjunction pair: the running result is
    p AND q, and one step refines both halves with the same bit pair."""
    g = mg.Mig()
    r = _mig_inputs(g, ["a", "b", "p", "q"])
    a, b = r["a"], r["b"]
    p1 = g.add_gate(mg.MAJ, [a, (b[0], True), r["p"]])
    q1 = g.add_gate(mg.MAJ, [(a[0], True), b, r["q"]])
    g.set_outputs([(p1, False), (q1, False)])
    return g.validate()


def and2_mig(one=False):
    """MAJ(x, y, const):  AND when const is 0, OR when const is 1."""
    g = mg.Mig()
    r = _mig_inputs(g, ["x", "y"])
    cst = g.add_const(mg.CONST1 if one else mg.CONST0)
    n = g.add_gate(mg.MAJ, [r["x"], r["y"], (cst, False)])
    g.set_outputs([(n, False)])
    return g.validate()


def relu_slice_mig():
    g = mg.Mig()
    r = _mig_inputs(g, ["s", "sign"])
    zero = g.add_const(mg.CONST0)
    n = g.add_gate(mg.MAJ, [r["s"], (r["sign"][0], True), (zero, False)])
    g.set_outputs([(n, False)])
    return g.validate()


def mux_slice_mig():
    """out = sel ? s1 : s2."""
    g = mg.Mig()
    r = _mig_inputs(g, ["s1", "s2", "sel"])
    zero = (g.add_const(mg.CONST0), False)
    one = (g.add_const(mg.CONST1), False)
    a1 = g.add_gate(mg.MAJ, [r["s1"], r["sel"], zero])
    a2 = g.add_gate(mg.MAJ, [r["s2"], (r["sel"][0], True), zero])
    n = g.add_gate(mg.MAJ, [(a1, False), (a2, False), one])
    g.set_outputs([(n, False)])
    return g.validate()


def xor3_slice_mig():
    """Parity fold: out = x xor y xor acc (a full adder keeping only the sum)."""
    g = mg.Mig()
    r = _mig_inputs(g, ["x", "y", "acc"])
    n1 = g.add_gate(mg.MAJ, [r["x"], r["y"], (r["acc"][0], True)])
    n2 = g.add_gate(mg.MAJ, [r["x"], r["y"], r["acc"]])
    s = g.add_gate(mg.MAJ, [(n1, False), (n2, True), r["acc"]])
    g.set_outputs([(s, False)])
    return g.validate()


def andor_pair_slice_mig(op="and"):
    """Reduction fold over a bit pair: acc' = acc op x op y."""
    g = mg.Mig()
    r = _mig_inputs(g, ["x", "y", "acc"])
    cst = (g.add_const(mg.CONST0 if op == "and" else mg.CONST1), False)
    t = g.add_gate(mg.MAJ, [r["x"], r["y"], cst])
    n = g.add_gate(mg.MAJ, [(t, False), r["acc"], cst])
    g.set_outputs([(n, False)])
    return g.validate()


def abs_slice_mig():
    """One bit of conditional negation plus increment: out = s xor g xor c,
    carry' = (s xor g) and c.  The second xor is phrased as a degenerate
    full adder so its middle node doubles as the carry."""
    g = mg.Mig()
    r = _mig_inputs(g, ["s", "g", "c"])
    zero = (g.add_const(mg.CONST0), False)
    one = (g.add_const(mg.CONST1), False)
    o1 = g.add_gate(mg.MAJ, [r["s"], r["g"], one])
    a1 = g.add_gate(mg.MAJ, [r["s"], r["g"], zero])
    x = g.add_gate(mg.MAJ, [(o1, False), (a1, True), zero])   # s xor g
    n1 = g.add_gate(mg.MAJ, [(x, False), zero, (r["c"][0], True)])
    n2 = g.add_gate(mg.MAJ, [(x, False), zero, r["c"]])       # carry out
    s = g.add_gate(mg.MAJ, [(n1, False), (n2, True), r["c"]])
    g.set_outputs([(s, False), (n2, False)])
    return g.validate()


def maskadd_slice_mig():
    """Multiplier cell: acc' = acc + (a and m) + c with carry out."""
    g = mg.Mig()
    r = _mig_inputs(g, ["a", "m", "acc", "c"])
    zero = (g.add_const(mg.CONST0), False)
    pp = g.add_gate(mg.MAJ, [r["a"], r["m"], zero])
    n1 = g.add_gate(mg.MAJ, [(pp, False), r["acc"], (r["c"][0], True)])
    n2 = g.add_gate(mg.MAJ, [(pp, False), r["acc"], r["c"]])
    s = g.add_gate(mg.MAJ, [(n1, False), (n2, True), r["c"]])
    g.set_outputs([(s, False), (n2, False)])
    return g.validate()


def borrow_slice_mig(neg_out=False):
    """Borrow chain step of r - d: b' = MAJ(not r, d, b)."""
    g = mg.Mig()
    r = _mig_inputs(g, ["r", "d", "b"])
    n = g.add_gate(mg.MAJ, [(r["r"][0], True), r["d"], r["b"]])
    g.set_outputs([(n, neg_out)])
    return g.validate()


def masksub_slice_mig():
    """Conditional-subtract cell: r' = r - (d and q) via r + not(d and q) + c."""
    g = mg.Mig()
    r = _mig_inputs(g, ["r", "d", "q", "c"])
    zero = (g.add_const(mg.CONST0), False)
    v = g.add_gate(mg.MAJ, [r["d"], r["q"], zero])
    n1 = g.add_gate(mg.MAJ, [r["r"], (v, True), (r["c"][0], True)])
    n2 = g.add_gate(mg.MAJ, [r["r"], (v, True), r["c"]])
    s = g.add_gate(mg.MAJ, [(n1, False), (n2, True), r["c"]])
    g.set_outputs([(s, False), (n2, False)])
    return g.validate()


def curated_slice_migs():
    """Name -> the shipped bit-slice (or fold-step) majority graph."""
    return {
        "abs": abs_slice_mig(),
        "addition": fa_slice_mig(),
        "bitcount": fa_slice_mig(),
        "division": masksub_slice_mig(),
        "max": mux_slice_mig(),
        "min": mux_slice_mig(),
        "multiplication": maskadd_slice_mig(),
        "ReLU": relu_slice_mig(),
        "subtraction": fa_slice_mig(neg_b=True),
        "if_else": mux_slice_mig(),
        "and_reduction": andor_pair_slice_mig("and"),
        "or_reduction": andor_pair_slice_mig("or"),
        "xor_reduction": xor3_slice_mig(),
        "equal": equal_slice_mig(),
        "greater": greater_slice_mig(),
        "greater_equal": greater_slice_mig(),
    }


# -- textbook AND/OR bit slices ------------------------------------------------

def _xor2(g, x, y):
    o = g.add_gate(mg.OR, [x, y])
    a = g.add_gate(mg.AND, [x, y])
    return g.add_gate(mg.AND, [(o, False), (a, True)]), a


def fa_slice_aoig(neg_b=False):
    """Ripple full-adder slice; outputs (sum, carry_out)."""
    g = mg.Aoig()
    a = (g.add_input("a"), False)
    b = (g.add_input("b"), neg_b)
    c = (g.add_input("c"), False)
    x, ab = _xor2(g, a, b)
    s, xc = _xor2(g, (x, False), c)
    cout = g.add_gate(mg.OR, [(ab, False), (xc, False)])
    g.set_outputs([(s, False), (cout, False)])
    return g.validate()


def greater_slice_aoig(flip=False):
    g = mg.Aoig()
    a = (g.add_input("a"), flip)
    b = (g.add_input("b"), not flip)
    gi = (g.add_input("g"), False)
    t1 = g.add_gate(mg.AND, [a, b])
    t2 = g.add_gate(mg.OR, [a, b])
    t3 = g.add_gate(mg.AND, [gi, (t2, False)])
    go = g.add_gate(mg.OR, [(t1, False), (t3, False)])
    g.set_outputs([(go, False)])
    return g.validate()


def equal_slice_aoig():
    g = mg.Aoig()
    a = (g.add_input("a"), False)
    b = (g.add_input("b"), False)
    e = (g.add_input("e"), False)
    x, _ = _xor2(g, a, b)
    eo = g.add_gate(mg.AND, [e, (x, True)])
    g.set_outputs([(eo, False)])
    return g.validate()


def relu_slice_aoig():
    g = mg.Aoig()
    s = (g.add_input("s"), False)
    sg = (g.add_input("sign"), True)
    o = g.add_gate(mg.AND, [s, sg])
    g.set_outputs([(o, False)])
    return g.validate()


def mux_slice_aoig():
    g = mg.Aoig()
    s1 = (g.add_input("s1"), False)
    s2 = (g.add_input("s2"), False)
    sel = (g.add_input("sel"), False)
    t1 = g.add_gate(mg.AND, [s1, sel])
    t2 = g.add_gate(mg.AND, [s2, (sel[0], True)])
    o = g.add_gate(mg.OR, [(t1, False), (t2, False)])
    g.set_outputs([(o, False)])
    return g.validate()


def abs_slice_aoig():
    g = mg.Aoig()
    s = (g.add_input("s"), False)
    sg = (g.add_input("g"), False)
    c = (g.add_input("c"), False)
    x, _ = _xor2(g, s, sg)
    out, xc = _xor2(g, (x, False), c)
    g.set_outputs([(out, False), (xc, False)])
    return g.validate()


def build_bitslice_aoig(name, n=None):
    """Textbook AND/OR construction of one operation step.

    Chain and fold operations return the per-bit (or per-pair) slice; the
    reductions and bitcount return a full graph over inputs b0..b{n-1}.
    """
    spec = get_spec(name)
    if name in ("addition", "bitcount"):
        return fa_slice_aoig()
    if name == "subtraction":
        return fa_slice_aoig(neg_b=True)
    if name in ("greater", "greater_equal"):
        return greater_slice_aoig()
    if name == "equal":
        return equal_slice_aoig()
    if name == "ReLU":
        return relu_slice_aoig()
    if name in ("if_else", "max", "min"):
        return mux_slice_aoig()
    if name == "abs":
        return abs_slice_aoig()
    if name in ("and_reduction", "or_reduction", "xor_reduction"):
        if not n or n < 1:
            raise OperationError("%s needs n >= 1" % name)
        return _reduction_tree_aoig(name, n)
    if name == "multiplication":
        g = mg.Aoig()
        a = (g.add_input("a"), False)
        m = (g.add_input("m"), False)
        acc = (g.add_input("acc"), False)
        c = (g.add_input("c"), False)
        pp = g.add_gate(mg.AND, [a, m])
        x, t = _xor2(g, (pp, False), acc)
        s, xc = _xor2(g, (x, False), c)
        cout = g.add_gate(mg.OR, [(t, False), (xc, False)])
        g.set_outputs([(s, False), (cout, False)])
        return g.validate()
    if name == "division":
        g = mg.Aoig()
        r = (g.add_input("r"), False)
        d = (g.add_input("d"), False)
        q = (g.add_input("q"), False)
        c = (g.add_input("c"), False)
        v = g.add_gate(mg.AND, [d, q])
        x, t = _xor2(g, r, (v, True))
        s, xc = _xor2(g, (x, False), c)
        cout = g.add_gate(mg.OR, [(t, False), (xc, False)])
        g.set_outputs([(s, False), (cout, False)])
        return g.validate()
    raise OperationError("no slice construction for %r" % (name,))


def _reduction_tree_aoig(name, n):
    g = mg.Aoig()
    refs = [(g.add_input("src%d" % k), False) for k in range(n)]
    op = {"and_reduction": mg.AND, "or_reduction": mg.OR}.get(name)
    while len(refs) > 1:
        nxt = []
        for i in range(0, len(refs) - 1, 2):
            if op is not None:
                nxt.append((g.add_gate(op, [refs[i], refs[i + 1]]), False))
            else:
                x, _ = _xor2(g, refs[i], refs[i + 1])
                nxt.append((x, False))
        if len(refs) % 2:
            nxt.append(refs[-1])
        refs = nxt
    g.set_outputs([refs[0]])
    return g.validate()


# -- full unrolled graphs for exhaustive verification ---------------------------

def _input_bits(g, name, n):
    return [(g.add_input("%s%d" % (name, k)), False) for k in range(n)]


def _unroll_add(g, abits, bbits, cin_ref, neg_b=False):
    """Ripple chain; returns (sum_refs, carry_ref)."""
    c = cin_ref
    sums = []
    for k in range(len(abits)):
        b = (bbits[k][0], bbits[k][1] ^ neg_b) if bbits[k] is not None else None
        if b is None:
            b = (g.add_const(mg.CONST1 if neg_b else mg.CONST0), False)
        x, ab = _xor2(g, abits[k], b)
        s, xc = _xor2(g, (x, False), c)
        c = (g.add_gate(mg.OR, [(ab, False), (xc, False)]), False)
        sums.append((s, False))
    return sums, c


def _greater_chain(g, abits, bbits, signed):
    n = len(abits)
    gref = (g.add_const(mg.CONST0), False)
    for k in range(n):
        flip = signed and k == n - 1
        a = (abits[k][0], abits[k][1] ^ flip)
        b = (bbits[k][0], (not bbits[k][1]) ^ flip)
        t1 = g.add_gate(mg.AND, [a, b])
        t2 = g.add_gate(mg.OR, [a, b])
        t3 = g.add_gate(mg.AND, [gref, (t2, False)])
        gref = (g.add_gate(mg.OR, [(t1, False), (t3, False)]), False)
    return gref


def _mux_bits(g, sel, abits, bbits):
    out = []
    for k in range(len(abits)):
        t1 = g.add_gate(mg.AND, [abits[k], sel])
        t2 = g.add_gate(mg.AND, [bbits[k], (sel[0], not sel[1])])
        out.append((g.add_gate(mg.OR, [(t1, False), (t2, False)]), False))
    return out


def build_full_aoig(name, n):
    """One evaluable AND/OR graph computing the whole n-bit operation.

    Inputs are named src0.., src1_0.., src2_0.., sel0 to match vertical
    operand layouts bit for bit.  Intended for small n.
    """
    spec = get_spec(name)
    g = mg.Aoig()
    if name in ("addition", "subtraction"):
        a = _input_bits(g, "src1_", n)
        b = _input_bits(g, "src2_", n)
        cin = (g.add_const(mg.CONST1 if name == "subtraction" else mg.CONST0), False)
        sums, _ = _unroll_add(g, a, b, cin, neg_b=(name == "subtraction"))
        g.set_outputs(sums)
    elif name in ("greater", "greater_equal"):
        a = _input_bits(g, "src1_", n)
        b = _input_bits(g, "src2_", n)
        if name == "greater":
            g.set_outputs([_greater_chain(g, a, b, True)])
        else:
            lt = _greater_chain(g, b, a, True)
            g.set_outputs([(lt[0], not lt[1])])
    elif name == "equal":
        a = _input_bits(g, "src1_", n)
        b = _input_bits(g, "src2_", n)
        eq = (g.add_const(mg.CONST1), False)
        for k in range(n):
            x, _ = _xor2(g, a[k], b[k])
            eq = (g.add_gate(mg.AND, [eq, (x, True)]), False)
        g.set_outputs([eq])
    elif name == "ReLU":
        s = _input_bits(g, "src", n)
        sign = (s[n - 1][0], True)
        g.set_outputs([(g.add_gate(mg.AND, [s[k], sign]), False) for k in range(n)])
    elif name == "abs":
        s = _input_bits(g, "src", n)
        sign = s[n - 1]
        xs = []
        for k in range(n):
            x, _ = _xor2(g, s[k], sign)
            xs.append((x, False))
        sums, _ = _unroll_add(g, xs, [None] * n, sign, neg_b=False)
        g.set_outputs(sums)
    elif name == "if_else":
        sel = _input_bits(g, "sel", 1)[0]
        a = _input_bits(g, "src1_", n)
        b = _input_bits(g, "src2_", n)
        g.set_outputs(_mux_bits(g, sel, a, b))
    elif name in ("max", "min"):
        a = _input_bits(g, "src1_", n)
        b = _input_bits(g, "src2_", n)
        if name == "max":
            sel = _greater_chain(g, a, b, True)
        else:
            sel = _greater_chain(g, b, a, True)
        g.set_outputs(_mux_bits(g, sel, a, b))
    elif name in ("and_reduction", "or_reduction", "xor_reduction"):
        tree = _reduction_tree_aoig(name, n)
        return tree
    elif name == "bitcount":
        s = _input_bits(g, "src", n)
        width = n
        out_bits = _popcount_tree(g, s, width)
        g.set_outputs(out_bits)
    elif name == "multiplication":
        a = _input_bits(g, "src1_", n)
        b = _input_bits(g, "src2_", n)
        acc = [(g.add_const(mg.CONST0), False)] * n
        for i in range(n):
            pps = []
            for j in range(n - i):
                pps.append((g.add_gate(mg.AND, [a[j], b[i]]), False))
            window, _ = _unroll_add(g, acc[i:], pps, (g.add_const(mg.CONST0), False))
            acc = acc[:i] + window
        g.set_outputs(acc)
    elif name == "division":
        a = _input_bits(g, "src1_", n)
        d = _input_bits(g, "src2_", n)
        rem = [(g.add_const(mg.CONST0), False)] * n
        qs = [None] * n
        for i in range(n - 1, -1, -1):
            rem = [a[i]] + rem[:-1]
            ge = _greater_chain(g, d, rem, False)   # d > rem
            q = (ge[0], not ge[1])                  # rem >= d
            qs[i] = q
            masked = [(g.add_gate(mg.AND, [d[k], q]), False) for k in range(n)]
            rem, _ = _unroll_add(g, rem, masked, (g.add_const(mg.CONST1), False), neg_b=True)
        # quotient is all ones when the divisor is zero
        anyd = d[0]
        for k in range(1, n):
            anyd = (g.add_gate(mg.OR, [anyd, d[k]]), False)
        g.set_outputs(_mux_bits(g, anyd, qs, [(g.add_const(mg.CONST1), False)] * n))
    else:
        raise OperationError("no full construction for %r" % (name,))
    return g.validate()


def _popcount_tree(g, bits, out_width):
    """Full-adder compressor tree; returns out_width result refs (zero padded)."""
    levels = {0: list(bits)}
    w = 0
    while True:
        ws = sorted(k for k, vals in levels.items() if len(vals) > 1)
        if not ws:
            break
        w = ws[0]
        vals = levels[w]
        if len(vals) >= 3:
            x, y, z = vals.pop(), vals.pop(), vals.pop()
            t, ab = _xor2(g, x, y)
            s, xc = _xor2(g, (t, False), z)
            c = g.add_gate(mg.OR, [(ab, False), (xc, False)])
        else:
            x, y = vals.pop(), vals.pop()
            s, c2 = _xor2(g, x, y)
            c = c2
        levels[w].append((s, False))
        levels.setdefault(w + 1, []).append((c, False))
    zero = (g.add_const(mg.CONST0), False)
    return [levels.get(k, [zero])[0] if levels.get(k) else zero for k in range(out_width)]


def full_input_columns(name, n, operands):
    """Map operand values to the bit-level input names of build_full_aoig."""
    spec = get_spec(name)
    cols = {}
    for op in spec.operands:
        vals = operands[op]
        bits = 1 if op == "sel" else n
        prefix = {"src1": "src1_", "src2": "src2_", "src": "src", "sel": "sel"}[op]
        for k in range(bits):
            cols["%s%d" % (prefix, k)] = [(v >> k) & 1 for v in vals]
    return cols
