"""Canonical text form of the mini-IR. parse(print(m)) is the identity."""

from __future__ import annotations

from .core import BINOPS_FLOAT, BINOPS_INT, CASTS, Function, Instr, Lit, Module, Reg


def _lit(o: Lit) -> str:
    if o.ty == "i1":
        return "true" if o.value else "false"
    if o.ty == "ptr":
        return "null" if o.value == 0 else str(o.value)
    if o.ty == "f64":
        return repr(float(o.value))
    return str(o.value)


def _op(o) -> str:
    return "%" + o.name if isinstance(o, Reg) else _lit(o)


def print_instr(ins: Instr) -> str:
    op = ins.op
    lhs = f"%{ins.result} = " if ins.result is not None else ""
    if op in BINOPS_INT or op in BINOPS_FLOAT:
        return f"{lhs}{op} {ins.ty} {_op(ins.operands[0])}, {_op(ins.operands[1])}"
    if op in ("icmp", "fcmp"):
        return (f"{lhs}{op} {ins.pred} {ins.ty} "
                f"{_op(ins.operands[0])}, {_op(ins.operands[1])}")
    if op == "select":
        a, b, c = ins.operands
        return f"{lhs}select {ins.ty} {_op(a)}, {_op(b)}, {_op(c)}"
    if op in CASTS:
        return f"{lhs}{op} {ins.ty} {_op(ins.operands[0])} to {ins.cast_to}"
    if op == "load":
        return f"{lhs}load {ins.ty}, {_op(ins.operands[0])}"
    if op == "store":
        return f"store {ins.ty} {_op(ins.operands[0])}, {_op(ins.operands[1])}"
    if op == "gep":
        return f"{lhs}gep {ins.ty} {_op(ins.operands[0])}, {_op(ins.operands[1])}"
    if op == "const":
        return f"{lhs}const {ins.ty} {_op(ins.operands[0])}"
    if op == "call":
        args = ", ".join(_op(o) for o in ins.operands)
        return f"{lhs}call {ins.ty} @{ins.callee}({args})"
    if op == "br":
        return f"br {_op(ins.operands[0])}, {ins.succs[0]}, {ins.succs[1]}"
    if op == "jmp":
        return f"jmp {ins.succs[0]}"
    if op == "ret":
        return f"ret {ins.ty} {_op(ins.operands[0])}" if ins.operands else "ret"
    raise AssertionError(f"unprintable opcode {op!r}")


def print_function(f: Function) -> str:
    params = ", ".join(f"%{p}: {t}" for p, t in f.params)
    tag = {"merged": " merged", "extracted-loop": " extracted_loop"}.get(
        f.provenance, "")
    lines = [f"func @{f.name}({params}) -> {f.ret}{tag} {{"]
    for b in f.blocks:
        lines.append(f"{b.label}:")
        for ins in b.instrs:
            lines.append("  " + print_instr(ins))
    lines.append("}")
    return "\n".join(lines)


def print_module(m: Module) -> str:
    """Deterministic canonical form; function and block order is preserved."""
    return "\n\n".join(print_function(f) for f in m.functions.values()) + "\n"
