"""Functional simulator for a near-cache bitline-computing SRAM accelerator.

The package models a 256x512 SRAM array that computes bitwise logic on row
pairs through simultaneous wordline activation, a 16-bit command ISA driving
that array, a small host-side instruction interface, command generators for a
set of cryptographic kernels (AES-128, Keccak-f[1600], Montgomery modular
multiplication, NTT, GHASH), independent software oracles used to check them,
and a cycle/energy accounting model with hardware-variant ablations.
"""

__version__ = "0.1.0"

from .array import ArrayState, SenseOp, ShiftDir
from .isa import Command, Category, LogicKind, encode, decode
from .program import (
    Annotation,
    CommandProgram,
    Controller,
    ExecTrace,
    KernelProgram,
    Loop,
    PhaseMark,
)
from .host import (
    CncSlice,
    HostError,
    HostInstr,
    HostMemory,
    exec_instr,
    run_kernel,
    run_parallel,
)
from .perf import CycleReport, EnergyModel, account, breakdown_report
from .verify import verify_kernel, verify_kernel_sliced
