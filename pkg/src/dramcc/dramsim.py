"""Functional model of one DRAM subarray executing micro programs.

Data lives in a bit matrix with one column per SIMD lane.  Elements are
stored vertically: bit i of an element occupies row base+i of its operand's
row range, so every column computes independently.  Compute rows T0..T3 and
the two dual-contact rows sit alongside two immutable constant rows; all
remaining rows form the data group that holds operands, results, and any
scratch values a program declares.

The model is value-accurate, not timing-accurate: activations are modeled
only by their effect on stored bits and the row buffer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import oplib
from . import uprogram as up
from .uprogram import Aap, Ap, Tra, R2, DRow, TRow, Dcc, Const


class SimError(Exception):
    pass


class LaneError(SimError):
    def __init__(self, lane, msg):
        self.lane = lane
        super().__init__("lane %d: %s" % (lane, msg))


N_T = 4
N_DCC = 2


@dataclass
class SubarrayConfig:
    lanes: int = 65536
    d_group_rows: int = 512
    strict_transpose: bool = False

    def __post_init__(self):
        if self.lanes < 1 or self.lanes & (self.lanes - 1):
            raise SimError("lane count must be a power of two, got %d" % self.lanes)


@dataclass
class OperandLayout:
    operands: dict = field(default_factory=dict)   # name -> (base_row, width)
    used_rows: int = 0

    def add(self, name, width):
        if name in self.operands:
            base, w = self.operands[name]
            if w != width:
                raise SimError("operand %r redeclared with width %d != %d"
                               % (name, width, w))
            return
        self.operands[name] = (self.used_rows, width)
        self.used_rows += width

    def row_of(self, name, bit):
        if name not in self.operands:
            raise SimError("unknown operand %r" % (name,))
        base, width = self.operands[name]
        if not 0 <= bit < width:
            raise SimError("bit %d out of range for operand %r (%d bits)"
                           % (bit, name, width))
        return base + bit


class SubarrayState:
    """Row-addressable bit matrix plus the sense-amplifier row buffer."""

    def __init__(self, config, layout):
        if layout.used_rows > config.d_group_rows:
            raise SimError("layout needs %d data rows, subarray has %d"
                           % (layout.used_rows, config.d_group_rows))
        self.config = config
        self.layout = layout
        self.t = np.zeros((N_T, config.lanes), dtype=np.uint8)
        self.dcc = np.zeros((N_DCC, config.lanes), dtype=np.uint8)
        self.d = np.zeros((config.d_group_rows, config.lanes), dtype=np.uint8)
        self.row_buffer = np.zeros(config.lanes, dtype=np.uint8)

    # -- raw access -------------------------------------------------------------

    def read(self, view):
        if isinstance(view, DRow):
            return self.d[self.layout.row_of(view.operand, view.bit)].copy()
        if isinstance(view, TRow):
            return self.t[view.index].copy()
        if isinstance(view, Dcc):
            v = self.dcc[view.index]
            return (v ^ 1) if view.negated else v.copy()
        if isinstance(view, Const):
            return np.full(self.config.lanes, view.value, dtype=np.uint8)
        raise SimError("unreadable row spec %r" % (view,))

    def write(self, view, value):
        if isinstance(view, Const):
            raise SimError("write to constant row %s" % view.fmt())
        if isinstance(view, DRow):
            self.d[self.layout.row_of(view.operand, view.bit)] = value
        elif isinstance(view, TRow):
            self.t[view.index] = value
        elif isinstance(view, Dcc):
            self.dcc[view.index] = (value ^ 1) if view.negated else value
        else:
            raise SimError("unwritable row spec %r" % (view,))

    def snapshot_consts(self):
        return None     # constants are generated, nothing to snapshot


def _check_tra(tra):
    if len(tra.views) != 3:
        raise SimError("triple activation needs 3 rows")
    keys = [up.physical_key(v) for v in tra.views]
    if len(set(keys)) != 3:
        raise SimError("triple activation rows not distinct")
    for k in keys:
        if k[0] == "D":
            raise SimError("triple activation may not include a data row")


def _tra_compute(state, tra):
    _check_tra(tra)
    vals = [state.read(v) for v in tra.views]
    m = ((vals[0].astype(np.uint16) + vals[1] + vals[2]) >= 2).astype(np.uint8)
    for v in tra.views:
        if not isinstance(v, Const):       # constant rows are restored
            state.write(v, m)
    state.row_buffer = m.copy()
    return m


def exec_uop(state, op):
    if isinstance(op, Ap):
        if not isinstance(op.target, Tra):
            raise SimError("AP must target a triple activation")
        _tra_compute(state, op.target)
        return state
    if isinstance(op, Aap):
        if isinstance(op.src, R2):
            raise SimError("double-row activation is not a defined source")
        if isinstance(op.src, Tra):
            value = _tra_compute(state, op.src)
        else:
            value = state.read(op.src)
        state.row_buffer = value.copy()
        if isinstance(op.dst, (Tra, R2)):
            views = list(op.dst.views)
            if len({up.physical_key(v) for v in views}) != len(views):
                raise SimError("multi-row destination rows not distinct")
            for v in views:
                if isinstance(v, (Const, DRow)):
                    raise SimError("multi-row destination must name compute rows")
                state.write(v, value)
        else:
            state.write(op.dst, value)
        return state
    raise SimError("unknown micro op %r" % (op,))


def exec_program(state, program):
    for op in program.micro_ops:
        exec_uop(state, op)
    return state


# -- host-side transposition ----------------------------------------------------

def transpose_to_vertical(values, operand, state):
    base, width = state.layout.operands[operand]
    lanes = state.config.lanes
    if len(values) > lanes:
        raise SimError("%d values exceed %d lanes" % (len(values), lanes))
    mask = (1 << width) - 1
    arr = np.zeros(lanes, dtype=np.uint64)
    for j, v in enumerate(values):
        if v < 0 or v > mask:
            if state.config.strict_transpose:
                raise LaneError(j, "value %d exceeds %d bits" % (v, width))
            v &= mask
        arr[j] = v
    for i in range(width):
        state.d[base + i] = ((arr >> np.uint64(i)) & np.uint64(1)).astype(np.uint8)
    return state


def transpose_from_vertical(operand, state, count=None):
    base, width = state.layout.operands[operand]
    lanes = state.config.lanes if count is None else count
    out = np.zeros(lanes, dtype=np.uint64)
    for i in range(width):
        out |= state.d[base + i][:lanes].astype(np.uint64) << np.uint64(i)
    return [int(v) for v in out]


def dump_state(state, rows=None):
    """Hex-packed lane bits of named rows, one row per line."""
    names = []
    for i in range(N_T):
        names.append(("T%d" % i, state.t[i]))
    for i in range(N_DCC):
        names.append(("DCC%d" % i, state.dcc[i]))
    for op in sorted(state.layout.operands):
        base, width = state.layout.operands[op]
        for i in range(width):
            names.append(("%s.%d" % (op, i), state.d[base + i]))
    if rows is not None:
        names = [(n, v) for n, v in names if n in rows]
    lines = []
    for name, vec in names:
        packed = np.packbits(vec[::-1])
        lines.append("%-12s %s" % (name, packed.tobytes().hex()))
    return "\n".join(lines) + "\n"


# -- end-to-end pipeline ----------------------------------------------------------

def layout_for_program(spec, n, program):
    layout = OperandLayout()
    for op in spec.operands:
        layout.add(op, 1 if op == "sel" else n)
    layout.add("dst", spec.out_bits(n))
    for name in sorted(program.scratch):
        layout.add(name, program.scratch[name])
    for name in sorted(program.operands_read()):
        if name not in layout.operands:
            raise SimError("program reads undeclared operand %r" % (name,))
    return layout


def run_operation(op_name, n, inputs, config=None, mode="curated", seed=0,
                  unsigned=False, strict_division=False, iterations=5,
                  program=None):
    """Full pipeline: obtain a program, lay out the operands, load inputs,
    execute, and read back the result.  Matches the scalar oracle lane for
    lane."""
    spec = oplib.get_spec(op_name)
    lanes_needed = max((len(v) for v in inputs.values()), default=1)
    if config is None:
        lanes = 1
        while lanes < max(8, lanes_needed):
            lanes *= 2
        config = SubarrayConfig(lanes=lanes, d_group_rows=max(64, 8 * n + 64))
    if strict_division and op_name == "division":
        for lane, v in enumerate(inputs.get("src2", [])):
            if (v & ((1 << n) - 1)) == 0:
                raise oplib.DivisionByZero(lane)
    if program is None:
        if mode == "curated":
            from . import schedules
            program = schedules.curated_program(op_name, n, unsigned=unsigned)
        elif mode == "generated":
            from . import genmode
            program = genmode.generated_program(op_name, n, unsigned=unsigned)
        else:
            raise SimError("unknown mode %r" % (mode,))
    layout = layout_for_program(spec, n, program)
    state = SubarrayState(config, layout)
    for op in spec.operands:
        width = 1 if op == "sel" else n
        vals = [v & ((1 << width) - 1) for v in inputs[op]]
        transpose_to_vertical(vals, op, state)
    exec_program(state, program)
    return transpose_from_vertical("dst", state, count=lanes_needed)
