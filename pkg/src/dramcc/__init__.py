"""Toolchain for compiling n-bit SIMD operations into majority/NOT DRAM
command sequences and executing them on a functional subarray model.

Submodules:
    mig       -- AND/OR and majority/inverter circuit graphs, rewrite rules,
                 and the node-reduction / reshaping optimization passes
    oplib     -- the 16 operation definitions, scalar oracles, and gate-level
                 bit-slice circuit generators
    allocator -- phased row-to-operand allocation for MAJ-node inputs
    uprogram  -- micro-op IR, program text format, count reports, scaling
                 classification, and the slice-to-program generator
    schedules -- curated micro-programs with closed-form command counts
    dramsim   -- functional model of one subarray with vertical data layout
    cli       -- command line front end (synth / gen / run / verify / report)
"""

__version__ = "0.1.0"
