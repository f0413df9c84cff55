"""Generator-derived programs: each operation is compiled from its shipped
majority bit-slice through row allocation and slice instancing.

These programs are the fully mechanical route through the pipeline.  They
are functionally equivalent to the curated schedules but typically larger;
the curated builders in ``schedules`` are the count-bearing artifacts.
"""

from __future__ import annotations

from . import mig as mg
from . import oplib
from .allocator import allocate_rows
from .uprogram import (MicroProgram, SliceBinding, _Emitter, emit_slice_instance,
                       finish_outputs, start_carries, validate_program,
                       DRow, Const, Aap, ProgramError)


def _driver(op_name, n):
    prog = MicroProgram(op_name=op_name, element_width=n)
    em = _Emitter(prog)
    return prog, em


def _compiled(slice_mig):
    return slice_mig, allocate_rows(slice_mig)


def _instance(em, compiled, inputs, outputs, key):
    slice_mig, alloc = compiled
    binding = SliceBinding(inputs=inputs, outputs=outputs)
    em.mark_phase()
    toks = emit_slice_instance(em, slice_mig, alloc, binding, key)
    finish_outputs(em, slice_mig, binding, toks)
    return toks


def _ripple(em, compiled, n, src_a, src_b, carry_init, dst="dst"):
    start_carries(em, {"c": carry_init})
    for i in range(n):
        couts = [("carry", "c")] if i < n - 1 else []
        _instance(em, compiled,
                  {"a": ("D", src_a, i), "b": ("D", src_b, i), "c": ("carry", "c")},
                  [[("D", dst, i)], couts], ("bit", i))


def _gen_addsub(name, n):
    prog, em = _driver(name, n)
    compiled = _compiled(oplib.fa_slice_mig(neg_b=(name == "subtraction")))
    init = ("const", 1 if name == "subtraction" else 0)
    _ripple(em, compiled, n, "src1", "src2", init)
    return prog


def _gen_chain_compare(name, n, unsigned):
    prog, em = _driver(name, n)
    plain = _compiled(oplib.greater_slice_mig())
    flip = _compiled(oplib.greater_slice_mig(flip=True))
    plain_neg = _compiled(oplib.greater_slice_mig(neg_out=True))
    flip_neg = _compiled(oplib.greater_slice_mig(flip=True, neg_out=True))
    swap = name == "greater_equal"     # chase src2 > src1, then invert
    a_op, b_op = ("src2", "src1") if swap else ("src1", "src2")
    start_carries(em, {"g": ("const", 0)})
    for i in range(n):
        msb = (i == n - 1) and not unsigned
        last = i == n - 1
        if last and swap:
            comp = flip_neg if msb else plain_neg
        elif msb:
            comp = flip
        else:
            comp = plain
        sinks = [("D", "dst", 0)] if last else [("carry", "g")]
        _instance(em, comp,
                  {"a": ("D", a_op, i), "b": ("D", b_op, i), "g": ("carry", "g")},
                  [sinks], ("bit", i))
    return prog


def _gen_equal(n):
    prog, em = _driver("equal", n)
    step = _compiled(oplib.equal_slice_mig())
    fin = _compiled(oplib.and2_mig())
    start_carries(em, {"p": ("const", 1), "q": ("const", 1)})
    for i in range(n):
        _instance(em, step,
                  {"a": ("D", "src1", i), "b": ("D", "src2", i),
                   "p": ("carry", "p"), "q": ("carry", "q")},
                  [[("carry", "p")], [("carry", "q")]], ("bit", i))
    _instance(em, fin, {"x": ("carry", "p"), "y": ("carry", "q")},
              [[("D", "dst", 0)]], ("fin",))
    return prog


def _gen_relu(n):
    prog, em = _driver("ReLU", n)
    comp = _compiled(oplib.relu_slice_mig())
    for i in range(n):
        _instance(em, comp,
                  {"s": ("D", "src", i), "sign": ("D", "src", n - 1)},
                  [[("D", "dst", i)]], ("bit", i))
    return prog


def _gen_abs(n):
    prog, em = _driver("abs", n)
    comp = _compiled(oplib.abs_slice_mig())
    start_carries(em, {"c": ("D", "src", n - 1)})
    for i in range(n):
        couts = [("carry", "c")] if i < n - 1 else []
        _instance(em, comp,
                  {"s": ("D", "src", i), "g": ("D", "src", n - 1), "c": ("carry", "c")},
                  [[("D", "dst", i)], couts], ("bit", i))
    return prog


def _gen_if_else(n, sel_op="sel", sel_carry=False):
    prog, em = _driver("if_else", n)
    comp = _compiled(oplib.mux_slice_mig())
    for i in range(n):
        sel = ("carry", "sel") if sel_carry else ("D", sel_op, 0)
        _instance(em, comp,
                  {"s1": ("D", "src1", i), "s2": ("D", "src2", i), "sel": sel},
                  [[("D", "dst", i)]], ("bit", i))
    return prog


def _gen_minmax(name, n, unsigned):
    prog, em = _driver(name, n)
    plain = _compiled(oplib.greater_slice_mig())
    flip = _compiled(oplib.greater_slice_mig(flip=True))
    a_op, b_op = ("src1", "src2") if name == "max" else ("src2", "src1")
    start_carries(em, {"g": ("const", 0)})
    for i in range(n):
        comp = flip if (i == n - 1 and not unsigned) else plain
        _instance(em, comp,
                  {"a": ("D", a_op, i), "b": ("D", b_op, i), "g": ("carry", "g")},
                  [[("carry", "g")]], ("cmp", i))
    mux = _compiled(oplib.mux_slice_mig())
    for i in range(n):
        _instance(em, mux,
                  {"s1": ("D", "src1", i), "s2": ("D", "src2", i),
                   "sel": ("carry", "g")},
                  [[("D", "dst", i)]], ("mux", i))
    return prog


def _gen_reduction(name, n):
    prog, em = _driver(name, n)
    if n == 1:
        em.mark_phase()
        em.aap(DRow("src", 0), DRow("dst", 0), ("copy",))
        return prog
    if name == "xor_reduction":
        comp = _compiled(oplib.xor3_slice_mig())
        keys = ("x", "y", "acc")
    else:
        comp = _compiled(oplib.andor_pair_slice_mig(
            "and" if name == "and_reduction" else "or"))
        keys = ("x", "y", "acc")
    if n % 2:
        start_carries(em, {"e": ("D", "src", n - 1)})
        pairs = [(2 * k, 2 * k + 1) for k in range((n - 1) // 2)]
    else:
        neutral = 1 if name == "and_reduction" else 0
        start_carries(em, {"e": ("const", neutral)})
        pairs = [(2 * k, 2 * k + 1) for k in range(n // 2)]
    for idx, (i, j) in enumerate(pairs):
        last = idx == len(pairs) - 1
        sinks = [("D", "dst", 0)] if last else [("carry", "e")]
        _instance(em, comp,
                  {keys[0]: ("D", "src", i), keys[1]: ("D", "src", j),
                   keys[2]: ("carry", "e")},
                  [sinks], ("pair", idx))
    if not pairs:       # n == 1 handled above; n == 0 impossible
        em.aap(DRow("src", 0), DRow("dst", 0), ("copy",))
    return prog


def _gen_bitcount(n):
    prog, em = _driver("bitcount", n)
    fa = _compiled(oplib.fa_slice_mig())
    # named wires per weight; inputs seed weight zero
    wires = {0: []}
    for k in range(n):
        name = "w%d" % k
        em.set_carry(name, ("init", ("D", "src", k)))
        wires[0].append(name)
    fresh = [0]

    def new_wire(init_done=True):
        name = "v%d" % fresh[0]
        fresh[0] += 1
        return name

    inst = [0]
    while True:
        w = min((k for k, vs in wires.items() if len(vs) > 1), default=None)
        if w is None:
            break
        vs = wires[w]
        three = [vs.pop(0) for _ in range(min(3, len(vs)))]
        ins = {}
        for slot, nm in zip(("a", "b", "c"), three):
            ins[slot] = ("carry", nm)
        if len(three) == 2:
            ins["c"] = ("const", 0)
        s_name, c_name = new_wire(), new_wire()
        _instance(em, fa, ins, [[("carry", s_name)], [("carry", c_name)]],
                  ("cnt", inst[0]))
        inst[0] += 1
        wires[w].append(s_name)
        wires.setdefault(w + 1, []).append(c_name)
    em.mark_phase()
    for k in range(n):
        vs = wires.get(k, [])
        if vs:
            src, _tok = em.carry_source(vs[0])
            em.aap(src, DRow("dst", k), ("out", k))
        else:
            em.aap(Const(0), DRow("dst", k), ("zero", k))
    return prog


def _gen_multiplication(n):
    prog, em = _driver("multiplication", n)
    cell = _compiled(oplib.maskadd_slice_mig())
    em.mark_phase()
    for k in range(n):
        em.aap(Const(0), DRow("dst", k), ("zero", k))
    for i in range(n):
        em.set_carry("c", ("init", ("const", 0)))
        for j in range(n - i):
            last = j == n - i - 1
            couts = [] if last else [("carry", "c")]
            _instance(em, cell,
                      {"a": ("D", "src1", j), "m": ("D", "src2", i),
                       "acc": ("D", "dst", i + j), "c": ("carry", "c")},
                      [[("D", "dst", i + j)], couts], ("pp", i, j))
    return prog


def _gen_division(n):
    prog, em = _driver("division", n)
    borrow = _compiled(oplib.borrow_slice_mig())
    borrow_neg = _compiled(oplib.borrow_slice_mig(neg_out=True))
    sub = _compiled(oplib.masksub_slice_mig())
    em.prog.scratch["R"] = n
    em.mark_phase()
    for k in range(n):
        em.aap(Const(0), DRow("R", k), ("rz", k))
    for k in range(n):
        qbit = n - 1 - k
        # shift in the next dividend bit: logical bit j lives in R[k - j]
        em.mark_phase()
        em.aap(DRow("src1", qbit), DRow("R", k), ("shift", k))
        em.set_carry("b", ("init", ("const", 0)))
        for j in range(n):
            r_src = ("D", "R", k - j) if j <= k else ("const", 0)
            comp = borrow_neg if j == n - 1 else borrow
            sinks = ([("D", "dst", qbit), ("carry", "q")]
                     if j == n - 1 else [("carry", "b")])
            _instance(em, comp,
                      {"r": r_src, "d": ("D", "src2", j), "b": ("carry", "b")},
                      [sinks], ("trial", k, j))
        em.set_carry("sc", ("init", ("const", 1)))
        for j in range(k + 1):
            last = j == k
            couts = [] if last else [("carry", "sc")]
            _instance(em, sub,
                      {"r": ("D", "R", k - j), "d": ("D", "src2", j),
                       "q": ("carry", "q"), "c": ("carry", "sc")},
                      [[("D", "R", k - j)], couts], ("sub", k, j))
    return prog


def generated_program(name, n, unsigned=False):
    spec = oplib.get_spec(name)
    if n < 1:
        raise ProgramError("element width must be positive")
    if name in ("addition", "subtraction"):
        prog = _gen_addsub(name, n)
    elif name in ("greater", "greater_equal"):
        prog = _gen_chain_compare(name, n, unsigned)
    elif name == "equal":
        prog = _gen_equal(n)
    elif name == "ReLU":
        prog = _gen_relu(n)
    elif name == "abs":
        prog = _gen_abs(n)
    elif name == "if_else":
        prog = _gen_if_else(n)
    elif name in ("max", "min"):
        prog = _gen_minmax(name, n, unsigned)
    elif name in ("and_reduction", "or_reduction", "xor_reduction"):
        prog = _gen_reduction(name, n)
    elif name == "bitcount":
        prog = _gen_bitcount(n)
    elif name == "multiplication":
        prog = _gen_multiplication(n)
    elif name == "division":
        prog = _gen_division(n)
    else:
        raise ProgramError("no generator for %r" % (name,))
    validate_program(prog)
    return prog
