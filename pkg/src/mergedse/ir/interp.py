"""Deterministic mini-IR interpreter and dynamic profiler.

The heap is a single flat, bounds-checked byte arena per invocation with
little-endian scalar encoding. Addresses 0..7 act as a null guard and are
never accessible; a small fixed scratch window follows (used by transformed
code for spilling multiple loop live-outs); named regions from the heap
image start at REGION_BASE. The observable heap image is the region area.

Interpretation also collects a Trace: per-function dynamic opcode counts
(own and whole-call-extent), the dynamic call matrix, per-call-edge data
footprints in bytes, and the total dynamic instruction count.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

from .core import INT_BITS, TYPE_WIDTH, Function, IRError, Module, Reg, wrap_int

NULL_GUARD = 8
SCRATCH_BASE = 8
SCRATCH_SIZE = 256
REGION_BASE = SCRATCH_BASE + SCRATCH_SIZE

DEFAULT_FUEL = 10 ** 8


class InterpError(IRError):
    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


@dataclass
class Trace:
    """Dynamic profile of one or more interpreter runs."""

    counts: dict[str, dict[str, int]] = field(default_factory=dict)
    hier_counts: dict[str, dict[str, int]] = field(default_factory=dict)
    calls: dict[tuple[str, str], int] = field(default_factory=dict)
    edge_bytes: dict[tuple[str, str], int] = field(default_factory=dict)
    invocations: dict[str, int] = field(default_factory=dict)
    total: int = 0

    def count(self, fname: str, op: str) -> int:
        return self.counts.get(fname, {}).get(op, 0)

    def calls_between(self, caller: str, callee: str) -> int:
        return self.calls.get((caller, callee), 0)

    def bytes_per_call(self, caller: str, callee: str) -> float:
        n = self.calls.get((caller, callee), 0)
        return self.edge_bytes.get((caller, callee), 0) / n if n else 0.0

    def merge(self, other: "Trace") -> "Trace":
        """Accumulate another trace into this one (multi-input profiles)."""
        for fn, ops in other.counts.items():
            mine = self.counts.setdefault(fn, {})
            for op, c in ops.items():
                mine[op] = mine.get(op, 0) + c
        for fn, ops in other.hier_counts.items():
            mine = self.hier_counts.setdefault(fn, {})
            for op, c in ops.items():
                mine[op] = mine.get(op, 0) + c
        for k, c in other.calls.items():
            self.calls[k] = self.calls.get(k, 0) + c
        for k, c in other.edge_bytes.items():
            self.edge_bytes[k] = self.edge_bytes.get(k, 0) + c
        for fn, c in other.invocations.items():
            self.invocations[fn] = self.invocations.get(fn, 0) + c
        self.total += other.total
        return self


class Arena:
    """Flat byte-addressable heap with a null guard and a scratch window."""

    def __init__(self):
        self.data = bytearray(REGION_BASE)
        self.regions: dict[str, tuple[int, int]] = {}  # name -> (addr, length)

    def add_region(self, name: str, content: bytes) -> int:
        if name in self.regions:
            raise InterpError("heap", f"duplicate region {name!r}")
        addr = len(self.data)
        self.data.extend(content)
        self.regions[name] = (addr, len(content))
        return addr

    def check(self, addr: int, width: int):
        if addr < NULL_GUARD:
            raise InterpError("oob", f"access to null/guard address {addr}")
        if addr + width > len(self.data):
            raise InterpError("oob", f"out-of-bounds access at {addr}+{width}")

    def load(self, ty: str, addr: int):
        w = TYPE_WIDTH[ty]
        self.check(addr, w)
        raw = bytes(self.data[addr:addr + w])
        if ty == "f64":
            return struct.unpack("<d", raw)[0]
        v = int.from_bytes(raw, "little")
        if ty == "ptr":
            return v
        return wrap_int(v, ty)

    def store(self, ty: str, addr: int, value):
        w = TYPE_WIDTH[ty]
        self.check(addr, w)
        if ty == "f64":
            raw = struct.pack("<d", value)
        elif ty == "ptr":
            raw = int(value & (1 << 64) - 1).to_bytes(8, "little")
        else:
            raw = int(value & (1 << INT_BITS[ty]) - 1).to_bytes(w, "little")
        self.data[addr:addr + w] = raw

    def region_image(self) -> bytes:
        """Observable heap state: the named-region bytes."""
        return bytes(self.data[REGION_BASE:])


@dataclass
class ExecResult:
    value: int | float | None
    trace: Trace
    heap: bytes


def _coerce_arg(value, ty: str):
    if ty == "f64":
        if not isinstance(value, (int, float)):
            raise InterpError("type", f"argument {value!r} is not a float")
        return float(value)
    if ty == "ptr":
        return int(value)
    if not isinstance(value, int):
        raise InterpError("type", f"argument {value!r} is not an integer")
    return wrap_int(int(value), ty)


class _Machine:
    def __init__(self, m: Module, arena: Arena, fuel: int):
        self.module = m
        self.arena = arena
        self.fuel = fuel
        self.trace = Trace()
        self.extents: list[set[int]] = []
        self.blockmaps: dict[str, dict[str, object]] = {}
        self._last_frame_counts: dict[str, int] = {}

    def blocks_of(self, f: Function) -> dict[str, object]:
        bm = self.blockmaps.get(f.name)
        if bm is None:
            bm = {b.label: b for b in f.blocks}
            self.blockmaps[f.name] = bm
        return bm

    def touch(self, addr: int, width: int):
        if self.extents:
            self.extents[-1].update(range(addr, addr + width))

    def call(self, fname: str, args: list) -> int | float | None:
        m = self.module
        f = m.functions[fname]
        tr = self.trace
        tr.invocations[fname] = tr.invocations.get(fname, 0) + 1
        regs: dict[str, object] = {}
        for (p, ty), a in zip(f.params, args):
            regs[p] = _coerce_arg(a, ty)
        counts = tr.counts.setdefault(fname, {})
        frame_counts: dict[str, int] = {}
        extent: set[int] = set()
        self.extents.append(extent)
        arena = self.arena
        blocks = self.blocks_of(f)
        block = f.blocks[0]
        try:
            while True:
                jump = None
                for ins in block.instrs:
                    if self.fuel <= 0:
                        raise InterpError(
                            "fuel", f"fuel exhausted in @{fname}")
                    self.fuel -= 1
                    op = ins.op
                    counts[op] = counts.get(op, 0) + 1
                    frame_counts[op] = frame_counts.get(op, 0) + 1
                    tr.total += 1

                    ops = ins.operands
                    if op == "br":
                        c = ops[0]
                        cv = regs[c.name] if type(c) is Reg else c.value
                        jump = ins.succs[0] if cv else ins.succs[1]
                        break
                    if op == "jmp":
                        jump = ins.succs[0]
                        break
                    if op == "ret":
                        if not ops:
                            return None
                        o = ops[0]
                        return regs[o.name] if type(o) is Reg else o.value

                    vals = [regs[o.name] if type(o) is Reg else o.value
                            for o in ops]
                    ty = ins.ty

                    if op == "add":
                        r = wrap_int(vals[0] + vals[1], ty)
                    elif op == "sub":
                        r = wrap_int(vals[0] - vals[1], ty)
                    elif op == "mul":
                        r = wrap_int(vals[0] * vals[1], ty)
                    elif op == "sdiv" or op == "srem":
                        a, b = vals
                        if b == 0:
                            raise InterpError("div-zero",
                                              f"division by zero in @{fname}")
                        q = abs(a) // abs(b)
                        if (a < 0) != (b < 0):
                            q = -q
                        r = wrap_int(q if op == "sdiv" else a - q * b, ty)
                    elif op == "and":
                        r = wrap_int(vals[0] & vals[1], ty)
                    elif op == "or":
                        r = wrap_int(vals[0] | vals[1], ty)
                    elif op == "xor":
                        r = wrap_int(vals[0] ^ vals[1], ty)
                    elif op == "shl":
                        r = wrap_int(vals[0] << (vals[1] & (INT_BITS[ty] - 1)), ty)
                    elif op == "ashr":
                        r = wrap_int(vals[0] >> (vals[1] & (INT_BITS[ty] - 1)), ty)
                    elif op == "fadd":
                        r = vals[0] + vals[1]
                    elif op == "fsub":
                        r = vals[0] - vals[1]
                    elif op == "fmul":
                        r = vals[0] * vals[1]
                    elif op == "fdiv":
                        if vals[1] == 0.0:
                            raise InterpError("div-zero",
                                              f"float division by zero in @{fname}")
                        r = vals[0] / vals[1]
                    elif op == "icmp":
                        a, b = vals
                        p = ins.pred
                        r = int(a == b if p == "eq" else a != b if p == "ne"
                                else a < b if p == "slt" else a > b if p == "sgt"
                                else a <= b if p == "sle" else a >= b)
                    elif op == "fcmp":
                        a, b = vals
                        p = ins.pred
                        r = int(a < b if p == "olt" else a > b if p == "ogt"
                                else a == b)
                    elif op == "select":
                        r = vals[1] if vals[0] else vals[2]
                    elif op == "zext":
                        v = vals[0]
                        r = v & ((1 << INT_BITS[ty]) - 1)
                    elif op == "trunc":
                        r = wrap_int(vals[0], ins.cast_to)
                    elif op == "sitofp":
                        r = float(vals[0])
                    elif op == "fptosi":
                        v = vals[0]
                        if v != v or v in (float("inf"), float("-inf")):
                            r = 0
                        else:
                            r = wrap_int(int(v), ins.cast_to)
                    elif op == "load":
                        addr = vals[0]
                        r = arena.load(ty, addr)
                        self.touch(addr, TYPE_WIDTH[ty])
                    elif op == "store":
                        addr = vals[1]
                        arena.store(ty, addr, vals[0])
                        self.touch(addr, TYPE_WIDTH[ty])
                        continue
                    elif op == "gep":
                        r = vals[0] + vals[1] * TYPE_WIDTH[ty]
                    elif op == "const":
                        r = vals[0]
                    elif op == "call":
                        callee = ins.callee
                        key = (fname, callee)
                        tr.calls[key] = tr.calls.get(key, 0) + 1
                        r = self.call(callee, vals)
                        sub = self.extents.pop()
                        scalars = sum(TYPE_WIDTH[t]
                                      for _, t in m.functions[callee].params
                                      if t != "ptr")
                        retw = (TYPE_WIDTH[m.functions[callee].ret]
                                if m.functions[callee].ret != "void" else 0)
                        tr.edge_bytes[key] = (tr.edge_bytes.get(key, 0)
                                              + len(sub) + scalars + retw)
                        extent.update(sub)
                        # fold the callee's extent counts into this frame
                        child = self._last_frame_counts
                        for cop, cc in child.items():
                            frame_counts[cop] = frame_counts.get(cop, 0) + cc
                        if ins.result is None:
                            continue
                    else:
                        raise AssertionError(f"unhandled opcode {op}")

                    regs[ins.result] = r
                if jump is not None:
                    block = blocks[jump]
        finally:
            hier = tr.hier_counts.setdefault(fname, {})
            for cop, cc in frame_counts.items():
                hier[cop] = hier.get(cop, 0) + cc
            self._last_frame_counts = frame_counts


def interpret(m: Module, entry: str | None = None, args: list | None = None,
              arena: Arena | None = None, fuel: int = DEFAULT_FUEL) -> ExecResult:
    """Run `entry` (default: the module entry) on `args` with a fresh or
    caller-provided arena. Deterministic for fixed (module, args, heap)."""
    entry = entry or m.entry
    f = m.functions.get(entry)
    if f is None:
        raise IRError(f"no function @{entry}")
    args = list(args or [])
    if len(args) != len(f.params):
        raise InterpError("type", f"@{entry} expects {len(f.params)} arguments, "
                          f"got {len(args)}")
    arena = arena or Arena()
    mach = _Machine(m, arena, fuel)
    value = mach.call(entry, args)
    mach.extents.pop()
    return ExecResult(value, mach.trace, arena.region_image())


# ---------------------------------------------------------------------------
# Heap-image input format
# ---------------------------------------------------------------------------

@dataclass
class HeapImage:
    """Initial heap contents plus entry-argument bindings.

    Line-oriented text format:

        region <name> <byte-length> [<hex-bytes>]
        arg <index> = <literal | region-name>

    Hex shorter than the declared length is zero-padded; comments start
    with ';'.
    """

    regions: list[tuple[str, bytes]] = field(default_factory=list)
    args: dict[int, object] = field(default_factory=dict)  # int | float | str

    @classmethod
    def parse(cls, text: str) -> "HeapImage":
        img = cls()
        names = set()
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split(";", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if parts[0] == "region":
                if len(parts) not in (3, 4):
                    raise IRError(f"heap image line {lineno}: "
                                  "expected 'region <name> <len> [<hex>]'")
                name, ln = parts[1], int(parts[2])
                content = bytes.fromhex(parts[3]) if len(parts) == 4 else b""
                if len(content) > ln:
                    raise IRError(f"heap image line {lineno}: hex longer than region")
                if name in names:
                    raise IRError(f"heap image line {lineno}: duplicate region {name}")
                names.add(name)
                img.regions.append((name, content + bytes(ln - len(content))))
            elif parts[0] == "arg":
                if len(parts) != 4 or parts[2] != "=":
                    raise IRError(f"heap image line {lineno}: "
                                  "expected 'arg <index> = <value>'")
                idx = int(parts[1])
                val = parts[3]
                if val in names:
                    img.args[idx] = val
                elif val == "true":
                    img.args[idx] = 1
                elif val == "false":
                    img.args[idx] = 0
                elif val == "null":
                    img.args[idx] = 0
                else:
                    try:
                        img.args[idx] = int(val)
                    except ValueError:
                        img.args[idx] = float(val)
            else:
                raise IRError(f"heap image line {lineno}: unknown directive {parts[0]!r}")
        return img

    def instantiate(self, f: Function) -> tuple[Arena, list]:
        """Build an arena and the bound argument list for function `f`."""
        arena = Arena()
        addrs = {name: arena.add_region(name, content)
                 for name, content in self.regions}
        args = []
        for i, (p, ty) in enumerate(f.params):
            if i not in self.args:
                raise IRError(f"heap image missing arg {i} (%{p}: {ty})")
            v = self.args[i]
            if isinstance(v, str):
                if ty != "ptr":
                    raise IRError(f"arg {i} binds region {v!r} to non-ptr %{p}")
                args.append(addrs[v])
            else:
                args.append(_coerce_arg(v, ty))
        return arena, args


def run_heap_image(m: Module, image: HeapImage, entry: str | None = None,
                   fuel: int = DEFAULT_FUEL) -> ExecResult:
    entry = entry or m.entry
    arena, args = image.instantiate(m.functions[entry])
    return interpret(m, entry, args, arena, fuel)
