"""Micro-op command sequences: representation, text format, static checks,
count reporting, scaling classification, and the slice-based generator.

A program is an ordered list of two commands.  ``AAP src dst`` activates the
source row and then the destination row, copying the first value into the
second through the sense amplifiers.  ``AP TRA(a,b,c)`` activates three
compute rows at once, leaving the bitwise majority of their values in all
three.  A triple may also appear as the source of an AAP: the first
activation computes the majority in place and the second copies it out.
Broadcasting one value into several rows uses a multi-row destination
(``R2(..)`` for two rows, ``TRA(..)`` for three).

Dual-contact rows are addressed through one of two views: ``DCC:k`` reads
and writes the stored value, ``NDCC:k`` its complement.  Writing through a
view always makes that view read back the written value.

The constant rows C0/C1 may participate in a triple activation as operand
values; the subarray restores them afterwards, so observably they never
change.  They are never writable AAP destinations.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from . import mig as mg
from .allocator import D_GROUP_COPY, PARENT_RESULT, T_ROWS, DCC_ROWS


class ProgramError(Exception):
    pass


class ParseError(ProgramError):
    def __init__(self, lineno, msg):
        self.lineno = lineno
        super().__init__("line %d: %s" % (lineno, msg))


# -- row specifications -------------------------------------------------------

@dataclass(frozen=True)
class DRow:
    operand: str
    bit: int

    def fmt(self):
        return "D:%s.%d" % (self.operand, self.bit)


@dataclass(frozen=True)
class TRow:
    index: int

    def fmt(self):
        return "T:T%d" % self.index


@dataclass(frozen=True)
class Dcc:
    index: int
    negated: bool = False

    def fmt(self):
        return "%s:%d" % ("NDCC" if self.negated else "DCC", self.index)


@dataclass(frozen=True)
class Const:
    value: int

    def fmt(self):
        return "C%d" % self.value


@dataclass(frozen=True)
class Tra:
    views: tuple

    def fmt(self):
        return "TRA(%s)" % ",".join(v.fmt() for v in self.views)


@dataclass(frozen=True)
class R2:
    views: tuple

    def fmt(self):
        return "R2(%s)" % ",".join(v.fmt() for v in self.views)


def row_from_name(name):
    """Compute-row name (T0..T3, DCC0, DCC1) -> plain read/write view."""
    if name in T_ROWS:
        return TRow(int(name[1]))
    if name in DCC_ROWS:
        return Dcc(int(name[3]), False)
    raise ProgramError("unknown compute row %r" % (name,))


def physical_key(view):
    """Identity of the underlying row, ignoring the DCC view."""
    if isinstance(view, TRow):
        return ("T", view.index)
    if isinstance(view, Dcc):
        return ("DCC", view.index)
    if isinstance(view, Const):
        return ("C", view.value)
    if isinstance(view, DRow):
        return ("D", view.operand, view.bit)
    raise ProgramError("no physical key for %r" % (view,))


# -- micro ops ---------------------------------------------------------------

@dataclass(frozen=True)
class Aap:
    src: object
    dst: object

    def fmt(self):
        return "AAP %s %s" % (self.src.fmt(), self.dst.fmt())


@dataclass(frozen=True)
class Ap:
    target: Tra

    def fmt(self):
        return "AP %s" % self.target.fmt()


@dataclass
class MicroProgram:
    op_name: str
    element_width: int
    micro_ops: list = field(default_factory=list)
    phase_markers: list = field(default_factory=list)   # indices into micro_ops
    loop_carried: list = field(default_factory=list)    # compute-row views
    scratch: dict = field(default_factory=dict)         # operand name -> bits

    @property
    def counts(self):
        aap = sum(1 for o in self.micro_ops if isinstance(o, Aap))
        ap = len(self.micro_ops) - aap
        return {"aap": aap, "ap": ap, "total": len(self.micro_ops)}

    def mark_phase(self):
        if not self.phase_markers or self.phase_markers[-1] != len(self.micro_ops):
            self.phase_markers.append(len(self.micro_ops))

    def emit(self, op):
        self.micro_ops.append(op)

    def operands_read(self):
        names = set()
        for op in self.micro_ops:
            views = [op.src, op.dst] if isinstance(op, Aap) else list(op.target.views)
            for v in views:
                if isinstance(v, DRow):
                    names.add(v.operand)
                elif isinstance(v, (Tra, R2)):
                    names.update(w.operand for w in v.views if isinstance(w, DRow))
        return names


def count_report(program):
    c = program.counts
    marks = sorted(set(program.phase_markers))
    if not marks or marks[0] != 0:
        marks = [0] + marks
    marks.append(len(program.micro_ops))
    per_phase = [marks[i + 1] - marks[i] for i in range(len(marks) - 1)]
    if not program.micro_ops:
        per_phase = []
    return {"aap": c["aap"], "ap": c["ap"], "total": c["total"], "per_phase": per_phase}


# -- static checks ------------------------------------------------------------

def _expand_views(spec):
    if isinstance(spec, (Tra, R2)):
        return list(spec.views)
    return [spec]


def validate_program(program):
    """Structural well-formedness plus the read-before-write and
    phase-ordering disciplines."""
    marks = program.phase_markers
    if any(b <= a for a, b in zip(marks, marks[1:])):
        raise ProgramError("phase markers are not strictly increasing")
    if any(m < 0 or m > len(program.micro_ops) for m in marks):
        raise ProgramError("phase marker out of range")

    carried = {physical_key(v) for v in program.loop_carried}
    written_phase = set()
    written_ever = set()

    def note_write(view):
        k = physical_key(view)
        if k[0] == "C":
            raise ProgramError("write to constant row %s" % view.fmt())
        if k[0] == "D":
            return
        written_phase.add(k)
        written_ever.add(k)

    def check_read(view):
        k = physical_key(view)
        if k[0] in ("C", "D"):
            return
        if k in written_phase:
            return
        if k in carried and k in written_ever:
            return
        raise ProgramError("row %s read before any write in its phase" % view.fmt())

    def check_tra(tra):
        if len(tra.views) != 3:
            raise ProgramError("triple activation needs exactly 3 rows")
        keys = [physical_key(v) for v in tra.views]
        if len(set(keys)) != 3:
            raise ProgramError("triple activation rows are not distinct")
        for k in keys:
            if k[0] == "D":
                raise ProgramError("triple activation may not include a data row")

    def tra_effects(tra):
        for v in tra.views:
            check_read(v)
        for v in tra.views:
            if physical_key(v)[0] != "C":     # constant rows are restored
                note_write(v)

    mark_set = set(marks)
    for i, op in enumerate(program.micro_ops):
        if i in mark_set:
            written_phase = set()
        if isinstance(op, Aap):
            if isinstance(op.src, R2):
                raise ProgramError("a double-row source has no defined value")
            if isinstance(op.src, Tra):
                check_tra(op.src)
                tra_effects(op.src)
            # plain AAP sources are unconstrained: copies may stage values
            # across phases; the discipline binds triple-activation reads
            if isinstance(op.dst, (Tra, R2)):
                views = _expand_views(op.dst)
                if len({physical_key(v) for v in views}) != len(views):
                    raise ProgramError("multi-row destination rows are not distinct")
                for v in views:
                    if physical_key(v)[0] in ("C", "D"):
                        raise ProgramError("multi-row destination must name compute rows")
                    note_write(v)
            elif isinstance(op.dst, Const):
                raise ProgramError("write to constant row")
            else:
                note_write(op.dst)
        elif isinstance(op, Ap):
            if not isinstance(op.target, Tra):
                raise ProgramError("AP must target a triple activation")
            check_tra(op.target)
            tra_effects(op.target)
        else:
            raise ProgramError("unknown micro op %r" % (op,))
    return True


# -- text format --------------------------------------------------------------

_ATOM_RE = re.compile(
    r"^(?:D:(?P<op>[A-Za-z_][\w]*)\.(?P<bit>\d+)"
    r"|T:T(?P<t>[0-3])"
    r"|DCC:(?P<d>[01])"
    r"|NDCC:(?P<nd>[01])"
    r"|C(?P<c>[01]))$")


def _parse_atom(tok, lineno):
    m = _ATOM_RE.match(tok)
    if not m:
        raise ParseError(lineno, "bad row spec %r" % (tok,))
    if m.group("op") is not None:
        return DRow(m.group("op"), int(m.group("bit")))
    if m.group("t") is not None:
        return TRow(int(m.group("t")))
    if m.group("d") is not None:
        return Dcc(int(m.group("d")), False)
    if m.group("nd") is not None:
        return Dcc(int(m.group("nd")), True)
    return Const(int(m.group("c")))


def _parse_rowspec(tok, lineno):
    if tok.startswith("TRA(") and tok.endswith(")"):
        inner = [t for t in tok[4:-1].split(",") if t]
        return Tra(tuple(_parse_atom(t, lineno) for t in inner))
    if tok.startswith("R2(") and tok.endswith(")"):
        inner = [t for t in tok[3:-1].split(",") if t]
        return R2(tuple(_parse_atom(t, lineno) for t in inner))
    return _parse_atom(tok, lineno)


def encode_program(program):
    lines = ["op %s n %d" % (program.op_name, program.element_width)]
    for name in sorted(program.scratch):
        lines.append("scratch %s %d" % (name, program.scratch[name]))
    if program.loop_carried:
        lines.append("loopcarry " + " ".join(v.fmt() for v in program.loop_carried))
    marks = sorted(set(program.phase_markers))
    mi = 0
    phase = 0
    for i, op in enumerate(program.micro_ops):
        while mi < len(marks) and marks[mi] == i:
            lines.append("PHASE %d" % phase)
            phase += 1
            mi += 1
        lines.append(op.fmt())
    while mi < len(marks):
        lines.append("PHASE %d" % phase)
        phase += 1
        mi += 1
    return "\n".join(lines) + "\n"


def decode_program(text):
    prog = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "op":
            if len(parts) != 4 or parts[2] != "n":
                raise ParseError(lineno, "bad header")
            try:
                prog = MicroProgram(op_name=parts[1], element_width=int(parts[3]))
            except ValueError:
                raise ParseError(lineno, "bad width") from None
            continue
        if prog is None:
            raise ParseError(lineno, "missing program header")
        if parts[0] == "scratch":
            if len(parts) != 3 or not parts[2].isdigit():
                raise ParseError(lineno, "bad scratch declaration")
            prog.scratch[parts[1]] = int(parts[2])
        elif parts[0] == "loopcarry":
            prog.loop_carried = [_parse_rowspec(t, lineno) for t in parts[1:]]
        elif parts[0] == "PHASE":
            if len(parts) != 2 or not parts[1].isdigit():
                raise ParseError(lineno, "bad phase marker")
            prog.phase_markers.append(len(prog.micro_ops))
        elif parts[0] == "AAP":
            if len(parts) != 3:
                raise ParseError(lineno, "AAP wants two row specs")
            prog.emit(Aap(_parse_rowspec(parts[1], lineno), _parse_rowspec(parts[2], lineno)))
        elif parts[0] == "AP":
            if len(parts) != 2 or not parts[1].startswith("TRA("):
                raise ParseError(lineno, "AP wants one TRA spec")
            prog.emit(Ap(_parse_rowspec(parts[1], lineno)))
        else:
            raise ParseError(lineno, "unknown opcode %r" % (parts[0],))
    if prog is None:
        raise ParseError(0, "empty program text")
    prog.phase_markers = sorted(set(prog.phase_markers))
    return prog


# -- scaling classification ----------------------------------------------------

def classify_scaling(points):
    """points: [(n, total), ...] over at least three widths.  Returns
    'Linear', 'Logarithmic', or 'Quadratic' by template fit.

    The linear and half-width templates coincide on even widths; exact ties
    are broken by the half-width step (equal counts at a n, n+1 pair) when
    the data contains one, otherwise linear wins.
    """
    if len(points) < 3:
        raise ProgramError("need at least 3 measured widths")
    ns = np.array([p[0] for p in points], dtype=np.float64)
    ys = np.array([p[1] for p in points], dtype=np.float64)
    halves = np.array([p[0] // 2 for p in points], dtype=np.float64)

    def fit(cols):
        a = np.stack(cols, axis=1)
        sol, *_ = np.linalg.lstsq(a, ys, rcond=None)
        return float(np.max(np.abs(a @ sol - ys)))

    ones = np.ones_like(ns)
    r_lin = fit([ns, ones])
    r_log = fit([halves, ones])
    r_quad = fit([ns * ns, ns, ones])
    tol = 1e-6 * max(1.0, float(np.max(ys)))

    if r_lin > tol and r_log > tol:
        if r_quad <= tol or r_quad < 0.01 * min(r_lin, r_log):
            return "Quadratic"
    # the half-width template's signature is a flat step across each
    # (even, odd) width pair; use it whenever the data contains one
    by_n = dict(points)
    steps = [(by_n[n], by_n[n + 1]) for n in sorted(by_n)
             if n + 1 in by_n and (n + 1) // 2 == n // 2]
    if steps:
        if all(a == b for a, b in steps):
            return "Logarithmic"
        return "Linear"
    if r_log <= tol and r_lin > tol:
        return "Logarithmic"
    if r_lin <= tol and r_log > tol:
        return "Linear"
    return "Linear" if r_lin <= r_log else "Logarithmic"


# -- slice instancing (generated mode) ------------------------------------------
#
# A compiled slice is instantiated once per bit position.  Inputs bind to
# data rows, constants, or named loop-carried signals; outputs sink to data
# rows and carries.  The emitter keeps a model of what every compute row
# holds, reuses live rows instead of round-tripping through scratch, and
# spills a node result to a scratch data row before its last live copy would
# be overwritten.

@dataclass
class SliceBinding:
    inputs: dict            # input name -> ("D", operand, bit) | ("const", v) | ("carry", name)
    outputs: list           # per output index: list of sinks, same shapes plus ("carry", name)


class _Emitter:
    def __init__(self, prog):
        self.prog = prog
        self.rows = {}          # physical key -> (token, cell_flipped)
        self.carry_val = {}     # carry name -> current token
        self.stashed = {}       # token -> scratch DRow
        self.pending = {}       # node token -> outstanding read count
        self.reserved = {}      # node token -> live carry references
        self.phase_idx = 0
        self.row_phase = {}     # physical key -> phase of last write
        self._carried = set()
        self._stash_n = 0

    def mark_phase(self):
        self.prog.mark_phase()
        if self.prog.phase_markers and self.prog.phase_markers[-1] == len(self.prog.micro_ops):
            self.phase_idx = len(self.prog.phase_markers)

    # row-content bookkeeping --------------------------------------------------

    def _set(self, view, token):
        k = physical_key(view)
        if k[0] == "T":
            self.rows[k] = (token, False)
        elif k[0] == "DCC":
            self.rows[k] = (token, bool(view.negated))
        if k[0] in ("T", "DCC"):
            self.row_phase[k] = self.phase_idx

    def _declare_carried(self, view):
        k = physical_key(view)
        if k in self._carried or k[0] not in ("T", "DCC"):
            return
        self._carried.add(k)
        plain = TRow(k[1]) if k[0] == "T" else Dcc(k[1], False)
        self.prog.loop_carried.append(plain)

    def live_views(self, token):
        out = []
        for k, (tok, flipped) in self.rows.items():
            if tok == token and tok is not None:
                out.append(TRow(k[1]) if k[0] == "T" else Dcc(k[1], flipped))
        return out

    def find_live(self, token):
        views = self.live_views(token)
        return views[0] if views else None

    def _protect(self, dst_views):
        """Spill any still-needed node value whose only live copies sit in
        rows about to be overwritten."""
        keys = {physical_key(v) for v in dst_views}
        for k in list(keys):
            tok, _ = self.rows.get(k, (None, False))
            if not (isinstance(tok, tuple) and tok and tok[0] == "node"):
                continue
            if tok in self.stashed:
                continue
            if self.pending.get(tok, 0) <= 0 and self.reserved.get(tok, 0) <= 0:
                continue
            others = [v for v in self.live_views(tok) if physical_key(v) not in keys]
            if others:
                continue
            view = next(v for v in self.live_views(tok) if physical_key(v) == k)
            self._raw_aap(view, self.stash_row(tok), tok)

    # emission -------------------------------------------------------------------

    def _raw_aap(self, src, dst, token):
        self.prog.emit(Aap(src, dst))
        for v in _expand_views(dst):
            if physical_key(v)[0] in ("T", "DCC"):
                self._set(v, token)

    def aap(self, src, dst, token):
        self._protect(_expand_views(dst))
        self._raw_aap(src, dst, token)

    def tra(self, views, result_token):
        for v in views:
            k = physical_key(v)
            if k[0] in ("T", "DCC") and self.row_phase.get(k, -1) < self.phase_idx:
                self._declare_carried(v)
            tok, _ = self.rows.get(k, (None, False))
            if tok is not None and self.pending.get(tok, 0) > 0:
                self.pending[tok] -= 1
        self._protect([v for v in views if physical_key(v)[0] != "C"])
        self.prog.emit(Ap(Tra(tuple(views))))
        for v in views:
            if physical_key(v)[0] != "C":
                self._set(v, result_token)

    # scratch ----------------------------------------------------------------------

    def stash_row(self, token):
        if token not in self.stashed:
            name = "tmp%d" % self._stash_n
            self._stash_n += 1
            self.prog.scratch[name] = 1
            self.stashed[token] = DRow(name, 0)
        return self.stashed[token]

    def set_carry(self, name, token):
        old = self.carry_val.get(name)
        if isinstance(old, tuple) and old and old[0] == "node":
            left = self.reserved.get(old, 0) - 1
            if left > 0:
                self.reserved[old] = left
            else:
                self.reserved.pop(old, None)
        self.carry_val[name] = token
        if isinstance(token, tuple) and token and token[0] == "node":
            self.reserved[token] = self.reserved.get(token, 0) + 1

    def carry_source(self, name):
        token = self.carry_val[name]
        live = self.find_live(token)
        if live is not None:
            return live, token
        if token in self.stashed:
            return self.stashed[token], token
        if isinstance(token, tuple) and token and token[0] == "init":
            spec = token[1]
            if spec[0] == "const":
                return Const(spec[1]), token
            return DRow(spec[1], spec[2]), token
        return _carry_scratch(name), token


def _carry_scratch(name):
    return DRow("c_" + name, 0)


def compile_slice(slice_mig, strict_pseudocode=False):
    from . import allocator
    return allocator.allocate_rows(slice_mig, strict_pseudocode=strict_pseudocode)


def _slice_order(slice_mig):
    levels = slice_mig.levels()
    return sorted(slice_mig.gate_ids(), key=lambda i: (levels[i], i))


def emit_slice_instance(em, slice_mig, alloc, binding, inst_key):
    """Emit the micro ops realizing one instance of a compiled slice.
    Returns the result token of every MAJ node for output plumbing."""
    entries = alloc.by_node()
    order = _slice_order(slice_mig)
    node_token = {nid: ("node", inst_key, nid) for nid in order}

    for nid in order:
        em.pending.setdefault(node_token[nid], 0)
    for nid in order:
        for ref in slice_mig.nodes[nid].fanin:
            t = node_token.get(ref[0])
            if t is not None:
                em.pending[t] += 1
    for oi, ref in enumerate(slice_mig.outputs):
        t = node_token.get(ref[0])
        if t is not None and binding.outputs[oi]:
            em.pending[t] += len(binding.outputs[oi])

    # carried values are kept alive by their reservation; add this
    # instance's actual read count on top
    carry_uses = {}
    for nid in order:
        for ref in slice_mig.nodes[nid].fanin:
            node = slice_mig.nodes[ref[0]]
            if node.kind == mg.INPUT:
                spec = binding.inputs[node.name]
                if spec[0] == "carry":
                    carry_uses[spec[1]] = carry_uses.get(spec[1], 0) + 1
    for cname, uses in carry_uses.items():
        tok = em.carry_val.get(cname)
        if isinstance(tok, tuple) and tok and tok[0] == "node":
            em.pending[tok] = em.pending.get(tok, 0) + uses

    def resolve(ref):
        """(token, home source view, const_direct) for one operand edge,
        ignoring its complement flag.  const_direct marks values that may
        feed a triple activation straight from a constant row; carried
        values always go through a copy so the schedule shape does not
        depend on what the carry was initialized with."""
        src, _neg = ref
        node = slice_mig.nodes[src]
        if node.kind == mg.MAJ:
            return node_token[src], None, False
        if node.kind == mg.CONST0:
            return (("const", 0), None), Const(0), True
        if node.kind == mg.CONST1:
            return (("const", 1), None), Const(1), True
        spec = binding.inputs[node.name]
        if spec[0] == "carry":
            view, tok = em.carry_source(spec[1])
            return tok, view, False
        if spec[0] == "const":
            return (spec, None), Const(spec[1]), True
        return (spec, None), DRow(spec[1], spec[2]), False

    for nid in order:
        fanin = slice_mig.nodes[nid].fanin
        views = [None, None, None]
        taken = set()
        for e in sorted(entries[nid], key=lambda x: x.edge_index):
            ref = fanin[e.edge_index]
            negd = ref[1]
            token, home, const_direct = resolve(ref)
            # constants feed a triple activation straight from the constant
            # rows; no copy into the reserved row is needed
            if (const_direct and not negd
                    and physical_key(home) not in taken):
                views[e.edge_index] = home
                taken.add(physical_key(home))
                continue
            view = row_from_name(e.row)
            k = physical_key(view)
            cur_tok, cur_flip = em.rows.get(k, (None, False))
            if cur_tok == token:
                flip = cur_flip
            else:
                src = em.find_live(token)
                if src is None:
                    src = em.stashed.get(token)
                if src is None:
                    src = home
                if src is None:
                    raise ProgramError("lost value for node %d edge %d"
                                       % (nid, e.edge_index))
                em.aap(src, view, token)
                flip = False
            if isinstance(view, Dcc):
                views[e.edge_index] = Dcc(view.index, flip ^ negd)
            else:
                if negd:
                    raise ProgramError("complemented edge allocated to a plain row")
                views[e.edge_index] = view
            taken.add(k)
        em.tra(views, node_token[nid])

    return node_token


def finish_outputs(em, slice_mig, binding, node_token):
    """Copy declared slice outputs to their sinks and update carries."""
    for oi, ref in enumerate(slice_mig.outputs):
        sinks = binding.outputs[oi]
        if not sinks:
            continue
        src_id, neg = ref
        node = slice_mig.nodes[src_id]
        if node.kind == mg.MAJ:
            token = node_token[src_id]
            src_plain = em.find_live(token) or em.stashed.get(token)
        elif node.kind in (mg.CONST0, mg.CONST1):
            token = (("const", int(node.kind == mg.CONST1)), None)
            src_plain = Const(token[0][1])
        else:
            spec = binding.inputs[node.name]
            if spec[0] == "carry":
                src_plain, token = em.carry_source(spec[1])
            elif spec[0] == "const":
                token = (spec, None)
                src_plain = Const(spec[1])
            else:
                token = (spec, None)
                src_plain = em.find_live(token) or DRow(spec[1], spec[2])
        if src_plain is None:
            raise ProgramError("output value not available")
        src = _negated_view(em, token, src_plain) if neg else src_plain
        out_tok = ("neg", token) if neg else token
        for sink in sinks:
            if sink[0] == "D":
                em.aap(src, DRow(sink[1], sink[2]), out_tok)
            elif sink[0] == "carry":
                em.set_carry(sink[1], out_tok)
                if neg or not (isinstance(token, tuple) and token[0] == "node"):
                    # the value cannot be protected in place: park it in scratch
                    em.prog.scratch.setdefault("c_" + sink[1], 1)
                    em.aap(src, _carry_scratch(sink[1]), out_tok)
                # otherwise the reservation keeps the live copy (or a spill)
                # available for later instances without a scratch round trip
            else:
                raise ProgramError("unknown sink %r" % (sink,))
        if isinstance(token, tuple) and token and token[0] == "node":
            em.pending[token] = max(0, em.pending.get(token, 0) - len(sinks))


def _negated_view(em, token, src_plain):
    """A view reading the complement of token, routing through a DCC when
    the value does not already sit in one."""
    for k, (tok, flipped) in em.rows.items():
        if tok == token and k[0] == "DCC":
            return Dcc(k[1], not flipped)
    choice = None
    for idx in (0, 1):
        tok, _ = em.rows.get(("DCC", idx), (None, False))
        if tok is None or em.pending.get(tok, 0) <= 0:
            choice = idx
            break
    if choice is None:
        choice = 0
    em.aap(src_plain, Dcc(choice, True), token)
    return Dcc(choice, False)


def start_carries(em, carry_inits):
    for cname, init in carry_inits.items():
        em.carry_val[cname] = ("init", init)
        em.prog.scratch["c_" + cname] = 1


def generate_uprogram(slice_mig, alloc, layout_operands, n,
                      binding_for_bit, carry_inits, op_name="custom"):
    """Bit-serial program from one compiled slice.

    binding_for_bit: bit index -> SliceBinding.
    carry_inits: carry name -> ("const", v) | ("D", operand, bit).
    """
    if n <= 0:
        raise ProgramError("element width must be positive")
    prog = MicroProgram(op_name=op_name, element_width=n)
    em = _Emitter(prog)
    start_carries(em, carry_inits)
    for bit in range(n):
        binding = binding_for_bit(bit)
        for iname, spec in binding.inputs.items():
            if spec[0] == "D" and spec[1] not in layout_operands:
                raise ProgramError("binding references unknown operand %r" % (spec[1],))
        em.mark_phase()
        node_token = emit_slice_instance(em, slice_mig, alloc, binding, ("b", bit))
        finish_outputs(em, slice_mig, binding, node_token)
    validate_program(prog)
    return prog
