"""Circuit graphs for majority/NOT synthesis.

Two graph families live here: AND/OR graphs with complementable edges
(the synthesis input) and majority/inverter graphs (the rewriting
substrate).  Both are plain value objects; every transformation returns a
new graph and never mutates its argument, so graphs are safe to share
across threads.

Edge references are ``(node_id, negated)`` pairs.  References to the
constant nodes are normalized so that a negated constant edge never
appears (``not 0`` becomes a plain edge to the one-node).
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

import numpy as np

AND = "AND"
OR = "OR"
MAJ = "MAJ"
INPUT = "INPUT"
CONST0 = "CONST0"
CONST1 = "CONST1"

RULE_TAGS = ("C", "M", "A", "D", "I", "R", "CA")
L2R = "L2R"
R2L = "R2L"


class GraphError(Exception):
    pass


class NoMatchError(GraphError):
    """A rewrite site does not match the rule pattern."""


@dataclass(frozen=True)
class RewriteRule:
    tag: str
    direction: str = L2R

    def __post_init__(self):
        if self.tag not in RULE_TAGS:
            raise GraphError("unknown rule tag %r" % (self.tag,))
        if self.direction not in (L2R, R2L):
            raise GraphError("bad rule direction %r" % (self.direction,))


@dataclass
class Node:
    id: int
    kind: str
    name: str | None = None          # INPUT only
    fanin: list = field(default_factory=list)   # [(node_id, negated)] -- 2 for AND/OR, 3 for MAJ


class _Graph:
    """Shared machinery for both graph kinds."""

    gate_kinds = ()

    def __init__(self):
        self.nodes = {}          # id -> Node
        self.outputs = []        # [(node_id, negated)]
        self._next_id = 0

    # -- construction ----------------------------------------------------

    def _new_id(self):
        nid = self._next_id
        self._next_id += 1
        return nid

    def add_input(self, name):
        for n in self.nodes.values():
            if n.kind == INPUT and n.name == name:
                return n.id
        nid = self._new_id()
        self.nodes[nid] = Node(nid, INPUT, name=name)
        return nid

    def add_const(self, kind):
        assert kind in (CONST0, CONST1)
        for n in self.nodes.values():
            if n.kind == kind:
                return n.id
        nid = self._new_id()
        self.nodes[nid] = Node(nid, kind)
        return nid

    def norm_ref(self, ref):
        """Fold negations on constant references."""
        nid, neg = ref
        kind = self.nodes[nid].kind
        if neg and kind in (CONST0, CONST1):
            other = CONST1 if kind == CONST0 else CONST0
            return (self.add_const(other), False)
        return (nid, bool(neg))

    def add_gate(self, kind, refs):
        if kind not in self.gate_kinds:
            raise GraphError("bad gate kind %r" % (kind,))
        refs = [self.norm_ref(r) for r in refs]
        nid = self._new_id()
        self.nodes[nid] = Node(nid, kind, fanin=list(refs))
        return nid

    def set_outputs(self, refs):
        self.outputs = [self.norm_ref(r) for r in refs]

    # -- queries ---------------------------------------------------------

    def input_names(self):
        return [n.name for n in sorted(self.nodes.values(), key=lambda n: n.id)
                if n.kind == INPUT]

    def gate_ids(self):
        return [n.id for n in sorted(self.nodes.values(), key=lambda n: n.id)
                if n.kind in self.gate_kinds]

    def gate_count(self):
        return len(self.gate_ids())

    def copy(self):
        g = type(self)()
        g._next_id = self._next_id
        for nid, n in self.nodes.items():
            g.nodes[nid] = Node(n.id, n.kind, name=n.name, fanin=list(n.fanin))
        g.outputs = list(self.outputs)
        return g

    def validate(self):
        arity = {AND: 2, OR: 2, MAJ: 3}
        seen = set()
        for nid, n in self.nodes.items():
            if nid != n.id or nid in seen:
                raise GraphError("node id table corrupt at %r" % (nid,))
            seen.add(nid)
            want = arity.get(n.kind, 0)
            if len(n.fanin) != want:
                raise GraphError("node %d (%s) has %d inputs, wants %d"
                                 % (nid, n.kind, len(n.fanin), want))
            for (src, _) in n.fanin:
                if src not in self.nodes:
                    raise GraphError("node %d references missing node %d" % (nid, src))
        for (src, _) in self.outputs:
            if src not in self.nodes:
                raise GraphError("output references missing node %d" % (src,))
        self.levels()   # raises on cycles
        return self

    def levels(self):
        """Topological level per node: inputs and constants sit at level 0,
        every gate strictly below all of its operand nodes."""
        level = {}
        state = {}

        def walk(nid):
            st = state.get(nid)
            if st == 1:
                raise GraphError("cycle through node %d" % nid)
            if st == 2:
                return level[nid]
            state[nid] = 1
            n = self.nodes[nid]
            if n.fanin:
                lv = 1 + max(walk(s) for (s, _) in n.fanin)
            else:
                lv = 0
            level[nid] = lv
            state[nid] = 2
            return lv

        for nid in self.nodes:
            walk(nid)
        return level

    def topo_order(self):
        lv = self.levels()
        return sorted(self.nodes, key=lambda nid: (lv[nid], nid))

    def sweep_dead(self):
        """Drop gates unreachable from any output.  Inputs and constants
        referenced by nothing are kept: they are part of the interface."""
        live = set()
        stack = [r for (r, _) in self.outputs]
        while stack:
            nid = stack.pop()
            if nid in live:
                continue
            live.add(nid)
            stack.extend(s for (s, _) in self.nodes[nid].fanin)
        for nid in list(self.nodes):
            n = self.nodes[nid]
            if n.kind in self.gate_kinds and nid not in live:
                del self.nodes[nid]
        return self

    # -- evaluation (vectorized over assignment columns) ------------------

    def _eval_columns(self, columns):
        """columns: input-name -> uint8 ndarray. Returns list of output arrays."""
        some = next(iter(columns.values()), np.zeros(1, dtype=np.uint8))
        width = len(some)
        val = {}
        for nid in self.topo_order():
            n = self.nodes[nid]
            if n.kind == INPUT:
                if n.name not in columns:
                    raise GraphError("missing assignment for input %r" % (n.name,))
                val[nid] = columns[n.name].astype(np.uint8)
            elif n.kind == CONST0:
                val[nid] = np.zeros(width, dtype=np.uint8)
            elif n.kind == CONST1:
                val[nid] = np.ones(width, dtype=np.uint8)
            else:
                ops = [val[s] ^ neg for (s, neg) in n.fanin]
                if n.kind == AND:
                    val[nid] = ops[0] & ops[1]
                elif n.kind == OR:
                    val[nid] = ops[0] | ops[1]
                elif n.kind == MAJ:
                    val[nid] = ((ops[0].astype(np.uint16) + ops[1] + ops[2]) >= 2).astype(np.uint8)
                else:
                    raise GraphError("cannot evaluate node kind %r" % (n.kind,))
        return [val[s] ^ neg for (s, neg) in self.outputs]

    def eval(self, assignment):
        """assignment: input-name -> 0/1. Returns output-index -> bit."""
        cols = {k: np.array([v & 1], dtype=np.uint8) for k, v in assignment.items()}
        outs = self._eval_columns(cols)
        return {i: int(o[0]) for i, o in enumerate(outs)}

    def truth_table(self):
        """Exhaustive evaluation over all assignments of the declared inputs,
        packed one output per row; assignment index bit i is input i."""
        names = self.input_names()
        k = len(names)
        if k > 16:
            raise GraphError("truth table limited to 16 inputs, got %d" % k)
        idx = np.arange(1 << k, dtype=np.uint32)
        cols = {nm: ((idx >> i) & 1).astype(np.uint8) for i, nm in enumerate(names)}
        return np.array(self._eval_columns(cols), dtype=np.uint8)


class Aoig(_Graph):
    gate_kinds = (AND, OR)


class Mig(_Graph):
    gate_kinds = (MAJ,)

    def maj_count(self):
        return self.gate_count()


def eval_aoig(aoig, assignment):
    return aoig.eval(assignment)


def eval_mig(mig, assignment):
    return mig.eval(assignment)


def equivalent(g1, g2):
    """Exhaustive functional equality on the union of declared inputs."""
    n1, n2 = set(g1.input_names()), set(g2.input_names())
    names = sorted(n1 | n2)
    if len(names) > 16:
        raise GraphError("equivalence check limited to 16 inputs")
    idx = np.arange(1 << len(names), dtype=np.uint32)
    cols = {nm: ((idx >> i) & 1).astype(np.uint8) for i, nm in enumerate(names)}
    o1 = g1._eval_columns({k: v for k, v in cols.items() if k in n1})
    o2 = g2._eval_columns({k: v for k, v in cols.items() if k in n2})
    if len(o1) != len(o2):
        return False
    return all(np.array_equal(a, b) for a, b in zip(o1, o2))


# -- conversion ------------------------------------------------------------

def naive_mig_from_aoig(aoig):
    """Replace every AND with MAJ(a, b, 0) and every OR with MAJ(a, b, 1)."""
    aoig.validate()
    mig = Mig()
    remap = {}
    for nid in aoig.topo_order():
        n = aoig.nodes[nid]
        if n.kind == INPUT:
            remap[nid] = mig.add_input(n.name)
        elif n.kind in (CONST0, CONST1):
            remap[nid] = mig.add_const(n.kind)
        else:
            third = CONST0 if n.kind == AND else CONST1
            refs = [(remap[s], neg) for (s, neg) in n.fanin]
            refs.append((mig.add_const(third), False))
            remap[nid] = mig.add_gate(MAJ, refs)
    mig.set_outputs([(remap[s], neg) for (s, neg) in aoig.outputs])
    return mig.validate()


# -- reference helpers ------------------------------------------------------

def _ref_eq(a, b):
    return a[0] == b[0] and a[1] == b[1]


def _is_compl(g, a, b):
    """True when two normalized refs denote complementary values."""
    if a[0] == b[0] and a[1] != b[1]:
        return True
    ka, kb = g.nodes[a[0]].kind, g.nodes[b[0]].kind
    if {ka, kb} == {CONST0, CONST1} and a[1] == b[1]:
        return True
    return False


def _neg(ref):
    return (ref[0], not ref[1])


def _replace_refs(g, old_id, new_ref):
    """Rewire every edge and output pointing at old_id to new_ref,
    composing complement flags."""
    for n in g.nodes.values():
        n.fanin = [g.norm_ref((new_ref[0], new_ref[1] ^ neg)) if s == old_id else (s, neg)
                   for (s, neg) in n.fanin]
    g.outputs = [g.norm_ref((new_ref[0], new_ref[1] ^ neg)) if s == old_id else (s, neg)
                 for (s, neg) in g.outputs]


def _substitute_cone(g, root_ref, from_id, to_ref):
    """Copy the cone of root_ref, replacing every reference to node from_id
    with to_ref (complements composed).  Returns the new root ref."""
    memo = {}

    def dup(nid):
        if nid == from_id:
            raise GraphError("substitution target is the cone root")
        if nid in memo:
            return memo[nid]
        n = g.nodes[nid]
        if not n.fanin:
            memo[nid] = nid
            return nid
        new_fanin = []
        touched = False
        for (s, neg) in n.fanin:
            if s == from_id:
                new_fanin.append(g.norm_ref((to_ref[0], to_ref[1] ^ neg)))
                touched = True
            else:
                d = dup(s)
                touched = touched or (d != s)
                new_fanin.append((d, neg))
        if not touched:
            memo[nid] = nid
            return nid
        memo[nid] = g.add_gate(n.kind, new_fanin)
        return memo[nid]

    rid, rneg = root_ref
    if rid == from_id:
        return g.norm_ref((to_ref[0], to_ref[1] ^ rneg))
    return (dup(rid), rneg)


def _cone_contains(g, root_id, target_id):
    seen = set()
    stack = [root_id]
    while stack:
        nid = stack.pop()
        if nid == target_id:
            return True
        if nid in seen:
            continue
        seen.add(nid)
        stack.extend(s for (s, _) in g.nodes[nid].fanin)
    return False


# -- the seven transformation rules ------------------------------------------
#
# Every rule is exposed through find_sites()/apply_rule(). A site is a tuple
# whose shape depends on the rule; find_sites enumerates exactly the tuples
# apply_rule accepts, so random property testing can draw from it directly.

def _sites_C(g, direction):
    return [(nid, p) for nid in g.gate_ids() for p in range(1, 6)]


def _apply_C(g, site, direction):
    nid, p = site
    if nid not in g.nodes or g.nodes[nid].kind != MAJ:
        raise NoMatchError("C: node %r is not a MAJ" % (nid,))
    perms = list(itertools.permutations(range(3)))
    if not 0 <= p < 6:
        raise NoMatchError("C: bad permutation index %r" % (p,))
    out = g.copy()
    n = out.nodes[nid]
    n.fanin = [n.fanin[i] for i in perms[p]]
    return out


def _match_M_forward(g, nid):
    """Return the replacement ref for a collapsible MAJ node, or None."""
    n = g.nodes[nid]
    if n.kind != MAJ:
        return None
    f = n.fanin
    for i, j in ((0, 1), (0, 2), (1, 2)):
        if _ref_eq(f[i], f[j]):
            return f[i]
        if _is_compl(g, f[i], f[j]):
            return f[3 - i - j]
    return None


def _sites_M(g, direction):
    if direction == L2R:
        return [(nid,) for nid in g.gate_ids() if _match_M_forward(g, nid) is not None]
    # expansion: wrap a reference r as MAJ(r, v, not v) for some value v
    sites = []
    vals = [nid for nid in g.nodes if g.nodes[nid].kind in (INPUT, MAJ)]
    for i in range(len(g.outputs)):
        sites.extend((("out", i), v) for v in vals)
    for nid in g.gate_ids():
        for k in range(3):
            sites.extend((("edge", nid, k), v) for v in vals
                         if not _cone_contains(g, v, nid))
    return sites


def _apply_M(g, site, direction):
    if direction == L2R:
        (nid,) = site
        if nid not in g.nodes:
            raise NoMatchError("M: no node %r" % (nid,))
        rep = _match_M_forward(g, nid)
        if rep is None:
            raise NoMatchError("M: node %d has no equal or complementary operand pair" % nid)
        out = g.copy()
        rep = out.norm_ref(rep)
        del out.nodes[nid]
        _replace_refs(out, nid, rep)
        out.sweep_dead()
        return out
    # R2L: site = (ref_locator, v_node)
    loc, v = site
    out = g.copy()
    if v not in out.nodes:
        raise NoMatchError("M: wrap value node %r missing" % (v,))
    if loc[0] == "out":
        i = loc[1]
        if not 0 <= i < len(out.outputs):
            raise NoMatchError("M: no output %r" % (i,))
        target = out.outputs[i]
        wrapped = out.add_gate(MAJ, [target, (v, False), (v, True)])
        out.outputs[i] = (wrapped, False)
    else:
        _, nid, k = loc
        if nid not in out.nodes or out.nodes[nid].kind != MAJ:
            raise NoMatchError("M: no MAJ node %r" % (nid,))
        if _cone_contains(out, v, nid):
            raise NoMatchError("M: wrap would create a cycle")
        target = out.nodes[nid].fanin[k]
        wrapped = out.add_gate(MAJ, [target, (v, False), (v, True)])
        out.nodes[nid].fanin[k] = (wrapped, False)
    return out.validate()


def _sites_A(g, direction):
    sites = []
    for nid in g.gate_ids():
        f = g.nodes[nid].fanin
        for ip in range(3):
            src, neg = f[ip]
            if neg or g.nodes[src].kind != MAJ:
                continue
            inner = g.nodes[src].fanin
            for up_o in range(3):
                if up_o == ip:
                    continue
                for up_i in range(3):
                    if not _ref_eq(f[up_o], inner[up_i]):
                        continue
                    xp = 3 - ip - up_o
                    for zp in range(3):
                        if zp != up_i:
                            sites.append((nid, ip, up_o, up_i, zp))
    return sites


def _apply_A(g, site, direction):
    nid, ip, up_o, up_i, zp = site
    if nid not in g.nodes or g.nodes[nid].kind != MAJ:
        raise NoMatchError("A: no MAJ node %r" % (nid,))
    f = g.nodes[nid].fanin
    if ip == up_o or zp == up_i:
        raise NoMatchError("A: positions collide")
    src, neg = f[ip]
    if neg or g.nodes[src].kind != MAJ:
        raise NoMatchError("A: operand %d is not a plain MAJ edge" % ip)
    inner = g.nodes[src].fanin
    if not _ref_eq(f[up_o], inner[up_i]):
        raise NoMatchError("A: no shared operand")
    xp = 3 - ip - up_o
    x_ref = f[xp]
    z_ref = inner[zp]
    if _cone_contains(g, x_ref[0], nid):
        raise NoMatchError("A: swap would create a cycle")
    out = g.copy()
    new_inner_fanin = list(inner)
    new_inner_fanin[zp] = x_ref
    new_inner = out.add_gate(MAJ, new_inner_fanin)
    nf = list(out.nodes[nid].fanin)
    nf[xp] = z_ref
    nf[ip] = (new_inner, False)
    out.nodes[nid].fanin = nf
    out.sweep_dead()
    return out.validate()


def _sites_D(g, direction):
    sites = []
    if direction == L2R:
        for nid in g.gate_ids():
            f = g.nodes[nid].fanin
            for ip in range(3):
                src, neg = f[ip]
                if neg or g.nodes[src].kind != MAJ:
                    continue
                for zp in range(3):
                    sites.append((nid, ip, zp))
        return sites
    for nid in g.gate_ids():
        f = g.nodes[nid].fanin
        for pa, pb in ((0, 1), (0, 2), (1, 2)):
            (sa, na), (sb, nb) = f[pa], f[pb]
            if na or nb or g.nodes[sa].kind != MAJ or g.nodes[sb].kind != MAJ:
                continue
            fa, fb = g.nodes[sa].fanin, g.nodes[sb].fanin
            for ua, va in itertools.permutations(range(3), 2):
                rest_a = 3 - ua - va
                for ub, vb in itertools.permutations(range(3), 2):
                    if _ref_eq(fa[ua], fb[ub]) and _ref_eq(fa[va], fb[vb]):
                        rest_b = 3 - ub - vb
                        sites.append((nid, pa, pb, ua, va, rest_a, rest_b))
    return sites


def _apply_D(g, site, direction):
    if direction == L2R:
        nid, ip, zp = site
        if nid not in g.nodes or g.nodes[nid].kind != MAJ:
            raise NoMatchError("D: no MAJ node %r" % (nid,))
        f = g.nodes[nid].fanin
        src, neg = f[ip]
        if neg or g.nodes[src].kind != MAJ:
            raise NoMatchError("D: operand %d is not a plain MAJ edge" % ip)
        xy = [f[k] for k in range(3) if k != ip]
        inner = g.nodes[src].fanin
        z_ref = inner[zp]
        uv = [inner[k] for k in range(3) if k != zp]
        out = g.copy()
        left = out.add_gate(MAJ, [xy[0], xy[1], uv[0]])
        right = out.add_gate(MAJ, [xy[0], xy[1], uv[1]])
        out.nodes[nid].fanin = [(left, False), (right, False), z_ref]
        out.sweep_dead()
        return out.validate()
    nid, pa, pb, ua, va, rest_a, rest_b = site
    if nid not in g.nodes or g.nodes[nid].kind != MAJ:
        raise NoMatchError("D: no MAJ node %r" % (nid,))
    f = g.nodes[nid].fanin
    (sa, na), (sb, nb) = f[pa], f[pb]
    if na or nb or g.nodes.get(sa) is None or g.nodes.get(sb) is None:
        raise NoMatchError("D: operands are not plain MAJ edges")
    if g.nodes[sa].kind != MAJ or g.nodes[sb].kind != MAJ:
        raise NoMatchError("D: operands are not MAJ nodes")
    fa, fb = g.nodes[sa].fanin, g.nodes[sb].fanin
    ub, vb = None, None
    for i, j in itertools.permutations(range(3), 2):
        if 3 - i - j == rest_b and _ref_eq(fa[ua], fb[i]) and _ref_eq(fa[va], fb[j]):
            ub, vb = i, j
            break
    if ub is None:
        raise NoMatchError("D: children do not share the (x, y) pair")
    x_ref, y_ref = fa[ua], fa[va]
    u_ref, v_ref = fa[rest_a], fb[rest_b]
    pz = 3 - pa - pb
    z_ref = f[pz]
    out = g.copy()
    inner = out.add_gate(MAJ, [u_ref, v_ref, z_ref])
    out.nodes[nid].fanin = [x_ref, y_ref, (inner, False)]
    out.sweep_dead()
    return out.validate()


def _sites_I(g, direction):
    return [(nid,) for nid in g.gate_ids()]


def _apply_I(g, site, direction):
    (nid,) = site
    if nid not in g.nodes or g.nodes[nid].kind != MAJ:
        raise NoMatchError("I: no MAJ node %r" % (nid,))
    out = g.copy()
    n = out.nodes[nid]
    n.fanin = [out.norm_ref((s, not neg)) for (s, neg) in n.fanin]
    for m in out.nodes.values():
        if m.id == nid:
            continue
        m.fanin = [(s, not neg) if s == nid else (s, neg) for (s, neg) in m.fanin]
    out.outputs = [(s, not neg) if s == nid else (s, neg) for (s, neg) in out.outputs]
    return out.validate()


def _sites_R(g, direction):
    sites = []
    for nid in g.gate_ids():
        f = g.nodes[nid].fanin
        for xp in range(3):
            for yp in range(3):
                if xp == yp:
                    continue
                zp = 3 - xp - yp
                z_src = f[zp][0]
                target = f[xp][0] if direction == L2R else f[yp][0]
                if (g.nodes[z_src].kind == MAJ and z_src != target
                        and _cone_contains(g, z_src, target)):
                    sites.append((nid, xp, yp))
    return sites


def _apply_R(g, site, direction):
    """Inside the third operand's cone, the first operand's value and the
    complement of the second are interchangeable; forward substitutes x by
    not-y, reverse substitutes not-y (i.e. the y node) by x."""
    nid, xp, yp = site
    if nid not in g.nodes or g.nodes[nid].kind != MAJ:
        raise NoMatchError("R: no MAJ node %r" % (nid,))
    if xp == yp or not (0 <= xp < 3 and 0 <= yp < 3):
        raise NoMatchError("R: bad operand positions")
    f = g.nodes[nid].fanin
    zp = 3 - xp - yp
    x_ref, y_ref, z_ref = f[xp], f[yp], f[zp]
    if direction == L2R:
        from_id = x_ref[0]
        base = (y_ref[0], (not y_ref[1]) ^ x_ref[1])
    else:
        from_id = y_ref[0]
        base = (x_ref[0], (not x_ref[1]) ^ y_ref[1])
    if g.nodes[z_ref[0]].kind != MAJ or not _cone_contains(g, z_ref[0], from_id):
        raise NoMatchError("R: third operand cone does not mention the substituted value")
    if from_id == z_ref[0]:
        raise NoMatchError("R: cone root is the substituted node")
    out = g.copy()
    new_z = _substitute_cone(out, z_ref, from_id, base)
    nf = list(out.nodes[nid].fanin)
    nf[zp] = new_z
    out.nodes[nid].fanin = nf
    out.sweep_dead()
    return out.validate()


def _sites_CA(g, direction):
    sites = []
    for nid in g.gate_ids():
        f = g.nodes[nid].fanin
        for ip in range(3):
            src, neg = f[ip]
            if neg or g.nodes[src].kind != MAJ:
                continue
            inner = g.nodes[src].fanin
            for up in range(3):
                if up == ip:
                    continue
                xp = 3 - ip - up
                for tp in range(3):
                    if direction == L2R:
                        if _is_compl(g, inner[tp], f[up]):
                            sites.append((nid, ip, up, tp))
                    else:
                        if _ref_eq(inner[tp], f[xp]):
                            sites.append((nid, ip, up, tp))
    return sites


def _apply_CA(g, site, direction):
    nid, ip, up, tp = site
    if nid not in g.nodes or g.nodes[nid].kind != MAJ:
        raise NoMatchError("CA: no MAJ node %r" % (nid,))
    if ip == up:
        raise NoMatchError("CA: positions collide")
    f = g.nodes[nid].fanin
    src, neg = f[ip]
    if neg or g.nodes[src].kind != MAJ:
        raise NoMatchError("CA: operand %d is not a plain MAJ edge" % ip)
    inner = g.nodes[src].fanin
    xp = 3 - ip - up
    if direction == L2R:
        if not _is_compl(g, inner[tp], f[up]):
            raise NoMatchError("CA: inner operand is not the complement of the shared one")
        new_ref = f[xp]
    else:
        if not _ref_eq(inner[tp], f[xp]):
            raise NoMatchError("CA: inner operand does not equal the outer x")
        new_ref = _neg(f[up])
    if _cone_contains(g, new_ref[0], nid):
        raise NoMatchError("CA: replacement would create a cycle")
    out = g.copy()
    nf_inner = list(inner)
    nf_inner[tp] = out.norm_ref(new_ref)
    new_inner = out.add_gate(MAJ, nf_inner)
    nf = list(out.nodes[nid].fanin)
    nf[ip] = (new_inner, False)
    out.nodes[nid].fanin = nf
    out.sweep_dead()
    return out.validate()


_RULE_FUNCS = {
    "C": (_sites_C, _apply_C),
    "M": (_sites_M, _apply_M),
    "A": (_sites_A, _apply_A),
    "D": (_sites_D, _apply_D),
    "I": (_sites_I, _apply_I),
    "R": (_sites_R, _apply_R),
    "CA": (_sites_CA, _apply_CA),
}


def find_sites(mig, rule):
    finder, _ = _RULE_FUNCS[rule.tag]
    return finder(mig, rule.direction)


def apply_rule(mig, rule, site):
    """Rewrite at one site; raises NoMatchError when the site does not
    match the rule pattern (never a silent no-op)."""
    _, applier = _RULE_FUNCS[rule.tag]
    return applier(mig, site, rule.direction)


# -- optimization passes -----------------------------------------------------

def node_reduction(mig):
    """Apply the collapsing direction of M and the merging direction of D
    until neither matches anywhere."""
    g = mig
    while True:
        sites = _sites_M(g, L2R)
        if sites:
            g = _apply_M(g, sites[0], L2R)
            continue
        sites = _sites_D(g, R2L)
        if sites:
            g = _apply_D(g, sites[0], R2L)
            continue
        return g


def _wrap_expand_strategy(mig, out_index, a_name, b_name):
    """Deterministic reshaping macro for a single output: wrap it twice with
    complementary pairs of two chosen inputs, distribute, then substitute one
    input for the other inside the duplicated cones.  Node reduction on the
    result frequently collapses the duplicated cones to constants or wires."""
    g = mig.copy()
    ids = {g.nodes[n].name: n for n in g.nodes if g.nodes[n].kind == INPUT}
    if a_name not in ids or b_name not in ids:
        raise NoMatchError("wrap: inputs not present")
    a, b = ids[a_name], ids[b_name]

    # out := M(F, a, not a), then the a operand becomes M(a, b, not b)
    g = _apply_M(g, (("out", out_index), a), R2L)
    wrap1 = g.outputs[out_index][0]
    g = _apply_M(g, (("edge", wrap1, 1), b), R2L)
    # distribute F and not-a over the inner wrap, leaving a at the top:
    # M(F, M(a, b, nb), na) -> M(M(F, na, b), M(F, na, nb), a)
    g = _apply_D(g, (wrap1, 1, 0), L2R)
    left = g.nodes[wrap1].fanin[0][0]
    right = g.nodes[wrap1].fanin[1][0]

    # relevance pins one duplicated input inside each copy of the cone
    for node in (left, right):
        fan = g.nodes[node].fanin
        zp = None
        for k in range(3):
            if g.nodes[fan[k][0]].kind == MAJ:
                zp = k
        if zp is None:
            continue
        xs = [k for k in range(3) if k != zp and fan[k][0] == a]
        ys = [k for k in range(3) if k != zp and fan[k][0] == b]
        if xs and ys and _cone_contains(g, fan[zp][0], a):
            g = _apply_R(g, (node, xs[0], ys[0]), L2R)
    g = node_reduction(g)
    return g


def reshape(mig, budget, seed):
    """Bounded seeded search: inflate with the expanding rule directions and
    the exchange rules, reduce, and keep the best graph seen.  budget caps the
    number of rewrite steps tried."""
    mig.validate()
    if budget <= 0:
        return mig
    rng = random.Random(seed)
    best = mig
    best_count = best.maj_count()

    names = mig.input_names()
    if len(mig.outputs) >= 1 and len(names) >= 2:
        for (a_name, b_name) in itertools.permutations(names[:3], 2):
            for oi in range(len(mig.outputs)):
                try:
                    cand = _wrap_expand_strategy(best, oi, a_name, b_name)
                except (NoMatchError, GraphError):
                    continue
                if cand.maj_count() < best_count:
                    best, best_count = cand, cand.maj_count()

    moves = [RewriteRule("D", L2R), RewriteRule("R", L2R), RewriteRule("A", L2R),
             RewriteRule("CA", L2R), RewriteRule("CA", R2L), RewriteRule("M", R2L)]
    cur = best
    for _ in range(budget):
        rule = moves[rng.randrange(len(moves))]
        sites = find_sites(cur, rule)
        if rule.tag == "M":
            sites = sites[: 8]
        if not sites:
            continue
        site = sites[rng.randrange(len(sites))]
        try:
            cur = apply_rule(cur, rule, site)
        except (NoMatchError, GraphError):
            continue
        if cur.maj_count() > 4 * max(1, best_count):
            cur = best      # runaway inflation; restart from the best
            continue
        reduced = node_reduction(cur)
        if reduced.maj_count() < best_count:
            best, best_count = reduced, reduced.maj_count()
            cur = reduced
    return best


def optimize(mig, iterations=5, seed=0):
    """Alternate node reduction and reshaping, returning the smallest
    equivalent graph observed.  Deterministic for a fixed seed."""
    mig.validate()
    best = node_reduction(mig)
    cur = best
    for it in range(iterations):
        cur = reshape(cur, budget=32, seed=seed * 1000003 + it)
        cur = node_reduction(cur)
        if cur.maj_count() < best.maj_count():
            best = cur
    return best


# -- text format -------------------------------------------------------------

def serialize(g):
    """One node per line; '!' marks a complemented edge."""
    lines = []
    for nid in sorted(g.nodes):
        n = g.nodes[nid]
        if n.kind == INPUT:
            lines.append("node %d INPUT %s" % (nid, n.name))
        elif n.kind in (CONST0, CONST1):
            lines.append("node %d %s" % (nid, n.kind))
        else:
            ops = " ".join("%d%s" % (s, "!" if neg else "") for (s, neg) in n.fanin)
            lines.append("node %d %s %s" % (nid, n.kind, ops))
    for (s, neg) in g.outputs:
        lines.append("output %d%s" % (s, "!" if neg else ""))
    return "\n".join(lines) + "\n"


def _parse_ref(tok):
    neg = tok.endswith("!")
    return (int(tok.rstrip("!")), neg)


def parse(text, cls=Mig):
    g = cls()
    max_id = -1
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        try:
            if parts[0] == "node":
                nid = int(parts[1])
                kind = parts[2]
                if kind == INPUT:
                    g.nodes[nid] = Node(nid, INPUT, name=parts[3])
                elif kind in (CONST0, CONST1):
                    g.nodes[nid] = Node(nid, kind)
                elif kind in cls.gate_kinds:
                    g.nodes[nid] = Node(nid, kind, fanin=[_parse_ref(t) for t in parts[3:]])
                else:
                    raise GraphError("unknown node kind %r" % (kind,))
                max_id = max(max_id, nid)
            elif parts[0] == "output":
                g.outputs.append(_parse_ref(parts[1]))
            else:
                raise GraphError("unknown directive %r" % (parts[0],))
        except (IndexError, ValueError) as exc:
            raise GraphError("parse error at line %d: %s" % (lineno, exc)) from exc
    g._next_id = max_id + 1
    g.outputs = [g.norm_ref(r) for r in g.outputs]
    for n in g.nodes.values():
        n.fanin = [g.norm_ref(r) for r in n.fanin]
    return g.validate()
