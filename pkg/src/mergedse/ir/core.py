"""Core data types for the mini-IR: types, instructions, functions, modules.

The IR is register-based and non-SSA: a register may be reassigned, but every
assignment within one function must use the same type tag. Every basic block
ends in exactly one terminator (br/jmp/ret).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

TYPE_TAGS = ("i1", "i32", "i64", "f64", "ptr")

# Byte widths used by load/store/gep and by the data-footprint accounting.
TYPE_WIDTH = {"i1": 1, "i32": 4, "i64": 8, "f64": 8, "ptr": 8}

INT_BITS = {"i1": 1, "i32": 32, "i64": 64}

BINOPS_INT = ("add", "sub", "mul", "sdiv", "srem", "and", "or", "xor", "shl", "ashr")
BINOPS_FLOAT = ("fadd", "fsub", "fmul", "fdiv")
CASTS = ("zext", "trunc", "sitofp", "fptosi")
TERMINATORS = ("br", "jmp", "ret")

ICMP_PREDS = ("eq", "ne", "slt", "sgt", "sle", "sge")
FCMP_PREDS = ("olt", "ogt", "oeq")

# Fixed opcode vocabulary. This is also the alignment alphabet and the
# feature alphabet for the area models, in this canonical column order.
OPCODES = BINOPS_INT + BINOPS_FLOAT + ("icmp", "fcmp", "select") + CASTS + (
    "load", "store", "gep", "const", "call") + TERMINATORS

OPCODE_INDEX = {op: i for i, op in enumerate(OPCODES)}


class IRError(Exception):
    """Base class for all mini-IR errors."""


@dataclass(frozen=True)
class Reg:
    name: str

    def __repr__(self):
        return "%" + self.name


@dataclass(frozen=True)
class Lit:
    value: int | float
    ty: str

    def __repr__(self):
        return f"{self.value}:{self.ty}"


Operand = Reg | Lit


@dataclass(frozen=True)
class Instr:
    op: str
    ty: str | None = None          # type annotation (None only for jmp / void ret)
    result: str | None = None      # destination register name, without '%'
    operands: tuple[Operand, ...] = ()
    succs: tuple[str, ...] = ()    # successor labels for br/jmp
    callee: str | None = None      # for call
    pred: str | None = None       # icmp/fcmp predicate
    cast_to: str | None = None    # target type for casts

    def is_terminator(self) -> bool:
        return self.op in TERMINATORS

    def result_type(self) -> str | None:
        """Type of the value this instruction writes, or None."""
        if self.result is None:
            return None
        if self.op in ("icmp", "fcmp"):
            return "i1"
        if self.op in CASTS:
            return self.cast_to
        if self.op == "gep":
            return "ptr"
        return self.ty

    def arity(self) -> int | None:
        """Required operand count, or None when it depends on context (call/ret)."""
        op = self.op
        if op in BINOPS_INT or op in BINOPS_FLOAT or op in ("icmp", "fcmp"):
            return 2
        if op == "select":
            return 3
        if op in CASTS or op == "load" or op == "const" or op == "br":
            return 1
        if op == "store" or op == "gep":
            return 2
        if op == "jmp":
            return 0
        return None


def operand_slot_types(ins: Instr, reg_types: dict[str, str],
                       callee_params: list[tuple[str, str]] | None = None) -> tuple[str, ...]:
    """Actual type of each operand slot of `ins`.

    `reg_types` maps register names to type tags for the enclosing function;
    `callee_params` is required for call instructions. The gep index slot takes
    the type the operand actually has (i32 or i64 are both accepted).
    """
    op, ty = ins.op, ins.ty
    if op in BINOPS_INT or op in BINOPS_FLOAT or op in ("icmp", "fcmp"):
        return (ty, ty)
    if op == "select":
        return ("i1", ty, ty)
    if op in CASTS:
        return (ty,)
    if op == "load":
        return ("ptr",)
    if op == "store":
        return (ty, "ptr")
    if op == "gep":
        idx = ins.operands[1]
        idx_ty = idx.ty if isinstance(idx, Lit) else reg_types.get(idx.name, "i64")
        return ("ptr", idx_ty)
    if op == "const":
        return (ty,)
    if op == "call":
        return tuple(t for _, t in (callee_params or []))
    if op == "br":
        return ("i1",)
    if op == "ret":
        return (ty,) if ins.operands else ()
    return ()


@dataclass
class Block:
    label: str
    instrs: list[Instr] = field(default_factory=list)

    def terminator(self) -> Instr:
        return self.instrs[-1]


PROVENANCES = ("original", "extracted-loop", "merged")


@dataclass
class Function:
    name: str
    params: list[tuple[str, str]]      # (register name, type tag)
    ret: str                           # type tag or "void"
    blocks: list[Block]
    provenance: str = "original"

    @property
    def entry(self) -> str:
        return self.blocks[0].label

    def block(self, label: str) -> Block:
        for b in self.blocks:
            if b.label == label:
                return b
        raise KeyError(label)

    def size(self) -> int:
        """Static instruction count."""
        return sum(len(b.instrs) for b in self.blocks)

    def instructions(self):
        for b in self.blocks:
            yield from b.instrs

    def successors(self, label: str) -> tuple[str, ...]:
        return self.block(label).terminator().succs

    def register_types(self) -> dict[str, str]:
        """Map every register in the function to its (unique) type tag.

        Raises IRError if a register is assigned with two different types;
        the validator reports this with better context first.
        """
        types: dict[str, str] = dict(self.params)
        for ins in self.instructions():
            if ins.result is not None:
                rt = ins.result_type()
                prev = types.get(ins.result)
                if prev is not None and prev != rt:
                    raise IRError(
                        f"register %{ins.result} assigned as {rt} and {prev} in @{self.name}")
                types[ins.result] = rt
        return types


@dataclass
class Module:
    functions: dict[str, Function]
    entry: str

    def function(self, name: str) -> Function:
        try:
            return self.functions[name]
        except KeyError:
            raise IRError(f"no function @{name} in module") from None

    def clone(self) -> "Module":
        funcs = {}
        for name, f in self.functions.items():
            funcs[name] = clone_function(f)
        return Module(funcs, self.entry)


def clone_function(f: Function) -> Function:
    blocks = [Block(b.label, list(b.instrs)) for b in f.blocks]
    return Function(f.name, list(f.params), f.ret, blocks, f.provenance)


def zero_literal(ty: str) -> Lit:
    """The neutral literal of a type: 0 / 0.0 / false / null."""
    return Lit(0.0 if ty == "f64" else 0, ty)


def wrap_int(value: int, ty: str) -> int:
    """Canonical signed representative of `value` modulo the type's width."""
    bits = INT_BITS[ty]
    value &= (1 << bits) - 1
    if value >= 1 << (bits - 1):
        value -= 1 << bits
    return value


def _alpha_text(f: Function) -> str:
    """Canonical text of f with registers and labels alpha-renamed."""
    regs: dict[str, str] = {}
    labels: dict[str, str] = {}

    def rr(name):
        return regs.setdefault(name, f"r{len(regs)}")

    def rl(name):
        return labels.setdefault(name, f"L{len(labels)}")

    for p, _ in f.params:
        rr(p)
    for b in f.blocks:
        rl(b.label)
    out = [",".join(ty for _, ty in f.params), f.ret]
    for b in f.blocks:
        out.append(rl(b.label) + ":")
        for ins in b.instrs:
            ops = []
            for o in ins.operands:
                ops.append(rr(o.name) if isinstance(o, Reg) else repr(o))
            out.append("|".join([
                ins.op,
                ins.ty or "",
                rr(ins.result) if ins.result else "",
                ",".join(ops),
                ",".join(rl(s) for s in ins.succs),
                ins.callee or "",
                ins.pred or "",
                ins.cast_to or "",
            ]))
    return "\n".join(out)


def structurally_equal(f: Function, g: Function) -> bool:
    """Equality of two functions modulo register and label names."""
    return _alpha_text(f) == _alpha_text(g)


__all__ = [
    "TYPE_TAGS", "TYPE_WIDTH", "INT_BITS", "OPCODES", "OPCODE_INDEX",
    "BINOPS_INT", "BINOPS_FLOAT", "CASTS", "TERMINATORS",
    "ICMP_PREDS", "FCMP_PREDS", "PROVENANCES",
    "IRError", "Reg", "Lit", "Operand", "Instr", "Block", "Function", "Module",
    "clone_function", "zero_literal", "wrap_int", "structurally_equal", "replace",
    "operand_slot_types",
]
