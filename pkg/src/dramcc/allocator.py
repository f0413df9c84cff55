"""Phased allocation of compute rows to MAJ-node input operands.

The subarray exposes four plain compute rows (T0..T3) and two dual-contact
rows (DCC0, DCC1) whose complement view realizes NOT.  Operands are assigned
rows in a topological sweep of the graph; when the free rows run out the
allocation moves to the next phase and the whole row set is recycled, which
is safe because all majority activations of phase i execute before phase
i+1 begins.

Two phase-advance policies are provided.  The default advances the phase as
soon as a node's fresh-row demand no longer fits, so one node's operands are
never split across phases.  The strict policy instead recycles only once
every row has been handed out, tracking the published pseudocode line for
line; it may split a node across a phase boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import mig as mg

T_ROWS = ("T0", "T1", "T2", "T3")
DCC_ROWS = ("DCC0", "DCC1")

D_GROUP_COPY = "D_GROUP_COPY"
PARENT_RESULT = "PARENT_RESULT"


class AllocationError(Exception):
    pass


class InfeasibleNodeError(AllocationError):
    """A single node demands more fresh rows than a whole phase provides."""


@dataclass(frozen=True)
class AllocationEntry:
    maj_node: int
    edge_index: int
    row: str
    phase: int
    source: str           # D_GROUP_COPY or PARENT_RESULT

    def dump(self):
        return "phase %d node %d edge %d row %s %s" % (
            self.phase, self.maj_node, self.edge_index, self.row, self.source)


@dataclass
class RowOperandAllocation:
    entries: list = field(default_factory=list)
    phase_count: int = 0

    def dump(self):
        return "\n".join(e.dump() for e in self.entries) + ("\n" if self.entries else "")

    def by_node(self):
        out = {}
        for e in self.entries:
            out.setdefault(e.maj_node, []).append(e)
        return out

    def node_phase(self, nid):
        return max(e.phase for e in self.entries if e.maj_node == nid)

    def validate(self, mig):
        maj_ids = set(mig.gate_ids())
        if len(self.entries) != 3 * len(maj_ids):
            raise AllocationError("expected %d entries, found %d"
                                  % (3 * len(maj_ids), len(self.entries)))
        last_phase = 0
        copies = {}
        for e in self.entries:
            if e.phase < last_phase:
                raise AllocationError("phase numbers decrease along the entry list")
            last_phase = e.phase
            if e.source == D_GROUP_COPY:
                used = copies.setdefault(e.phase, set())
                if e.row in used:
                    raise AllocationError("row %s copied twice in phase %d"
                                          % (e.row, e.phase))
                used.add(e.row)
        for phase, used in copies.items():
            if len([r for r in used if r in T_ROWS]) > 4:
                raise AllocationError("phase %d uses more than 4 T rows" % phase)
            if len([r for r in used if r in DCC_ROWS]) > 2:
                raise AllocationError("phase %d uses more than 2 DCC rows" % phase)
        return self


def parse_dump(text):
    alloc = RowOperandAllocation()
    maxp = -1
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        p = line.split()
        try:
            if (p[0], p[2], p[4], p[6]) != ("phase", "node", "edge", "row"):
                raise ValueError("bad field labels")
            alloc.entries.append(AllocationEntry(
                maj_node=int(p[3]), edge_index=int(p[5]), row=p[7],
                phase=int(p[1]), source=p[8]))
            maxp = max(maxp, int(p[1]))
        except (IndexError, ValueError) as exc:
            raise AllocationError("allocation parse error at line %d: %s"
                                  % (lineno, exc)) from exc
    alloc.phase_count = maxp + 1
    return alloc


def _edge_class(mig, ref):
    """Classify one operand edge: ('const', ...), ('input', ...), or
    ('parent', parent_id) when the operand is another MAJ node's result."""
    src, neg = ref
    kind = mig.nodes[src].kind
    if kind == mg.MAJ:
        return ("parent", src, neg)
    if kind in (mg.CONST0, mg.CONST1):
        return ("const", src, neg)
    return ("input", src, neg)


def _parent_t_row(entries, taken):
    for e in entries:
        if e.row in T_ROWS and e.row not in taken:
            return e.row
    return None


def allocate_rows(mig, strict_pseudocode=False):
    """Assign a compute row and phase to every MAJ input edge.

    Traversal is level-major starting at the level nearest the inputs,
    ascending node id within a level.  Fresh operands consume rows from the
    free sets (complemented ones only from the dual-contact rows); operands
    produced by an earlier MAJ node reuse that node's result row, except that
    a complemented parent result claims a fresh dual-contact row so its
    inverted view can be read.
    """
    mig.validate()
    levels = mig.levels()
    order = [nid for nid in sorted(mig.gate_ids(), key=lambda i: (levels[i], i))]

    free_t = list(T_ROWS)
    free_dcc = list(DCC_ROWS)
    phase = 0
    entries = []
    node_entries = {}

    def reset():
        nonlocal free_t, free_dcc, phase
        phase += 1
        free_t = list(T_ROWS)
        free_dcc = list(DCC_ROWS)

    def plan(nid):
        """Decide per edge how it will be satisfied, so the row demand is
        known before anything is consumed.  Reusing one parent row twice
        inside a node would collide inside its activation, so the second
        reference degrades to a fresh copy."""
        kinds = []      # per edge: ("parent", parent_id) | ("fresh", negated)
        parent_taken = []
        for ref in mig.nodes[nid].fanin:
            cls = _edge_class(mig, ref)
            if cls[0] == "parent" and not cls[2]:
                row = _parent_t_row(node_entries[cls[1]], parent_taken)
                if row is not None:
                    parent_taken.append(row)
                    kinds.append(("parent", row))
                    continue
                kinds.append(("fresh", False))
            elif cls[0] == "parent":
                kinds.append(("fresh", True))
            elif cls[0] == "const":
                kinds.append(("fresh", False))
            else:
                kinds.append(("fresh", cls[2]))
        need_t = sum(1 for k in kinds if k == ("fresh", False))
        need_d = sum(1 for k in kinds if k == ("fresh", True))
        return kinds, parent_taken, need_t, need_d

    for nid in order:
        kinds, parent_taken, need_t, need_d = plan(nid)
        if need_t > len(T_ROWS) or need_d > len(DCC_ROWS):
            raise InfeasibleNodeError(
                "node %d needs %d plain and %d dual-contact rows at once"
                % (nid, need_t, need_d))
        if not strict_pseudocode:
            avail_t = [r for r in free_t if r not in parent_taken]
            if need_t > len(avail_t) or need_d > len(free_dcc):
                reset()
        mine = []
        for k, kind in enumerate(kinds):
            if kind[0] == "parent":
                e = AllocationEntry(nid, k, kind[1], phase, PARENT_RESULT)
            else:
                negated = kind[1]
                taken = parent_taken + [x.row for x in mine]

                def pop_from(pool):
                    for i, r in enumerate(pool):
                        if r not in taken:
                            return pool.pop(i)
                    return None

                pool = free_dcc if negated else free_t
                row = pop_from(pool)
                if row is None:
                    # strict mode reaches here only with the pool exhausted;
                    # recycling every row matches the all-empty reset
                    reset()
                    pool = free_dcc if negated else free_t
                    row = pop_from(pool)
                if row is None:
                    raise AllocationError("no usable row for node %d edge %d"
                                          % (nid, k))
                e = AllocationEntry(nid, k, row, phase, D_GROUP_COPY)
            entries.append(e)
            mine.append(e)
            if strict_pseudocode and not free_t and not free_dcc:
                reset()
        node_entries[nid] = mine

    alloc = RowOperandAllocation(entries=entries,
                                 phase_count=(max((e.phase for e in entries), default=-1) + 1))
    return alloc.validate(mig)
