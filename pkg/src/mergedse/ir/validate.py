"""Module validator: structural, type, initialization and call-graph checks.

Checks are deliberately strict so that every transformation in the toolkit
(loop extraction, function merging) can assert its output is well formed:

  - every block ends in exactly one terminator, and blocks are reachable
  - every referenced label / callee / register exists
  - operand counts and types match the opcode
  - each register has a single type within a function
  - every register is assigned before use on every path from entry
  - the entry block has no predecessors
  - the module call graph is acyclic (no recursion)
"""

from __future__ import annotations

from .core import (
    BINOPS_FLOAT, BINOPS_INT, CASTS, FCMP_PREDS, ICMP_PREDS, OPCODES,
    Function, Instr, IRError, Module, Reg, operand_slot_types,
)

CAST_PAIRS = {
    "zext": {("i1", "i32"), ("i1", "i64"), ("i32", "i64")},
    "trunc": {("i64", "i32"), ("i64", "i1"), ("i32", "i1")},
    "sitofp": {("i32", "f64"), ("i64", "f64")},
    "fptosi": {("f64", "i32"), ("f64", "i64")},
}

_NO_RESULT = {"store", "br", "jmp", "ret"}


class ValidationError(IRError):
    def __init__(self, diagnostics: list[str]):
        super().__init__("; ".join(diagnostics))
        self.diagnostics = diagnostics


def _check_instr_shape(f: Function, ins: Instr, reg_types, m: Module, diags):
    where = f"@{f.name}"
    if ins.op not in OPCODES:
        diags.append(f"{where}: unknown opcode {ins.op!r}")
        return

    arity = ins.arity()
    if arity is not None and len(ins.operands) != arity:
        diags.append(f"{where}: {ins.op} expects {arity} operands, has {len(ins.operands)}")
        return

    if ins.op in _NO_RESULT or (ins.op == "call" and ins.ty == "void"):
        if ins.result is not None:
            diags.append(f"{where}: {ins.op} cannot produce a result")
    elif ins.result is None:
        diags.append(f"{where}: {ins.op} must assign a register")

    if ins.op == "br" and len(ins.succs) != 2:
        diags.append(f"{where}: br needs exactly two successors")
    if ins.op == "jmp" and len(ins.succs) != 1:
        diags.append(f"{where}: jmp needs exactly one successor")
    if ins.op not in ("br", "jmp") and ins.succs:
        diags.append(f"{where}: {ins.op} cannot have successors")

    if ins.op in BINOPS_INT and ins.ty not in ("i1", "i32", "i64"):
        diags.append(f"{where}: {ins.op} requires an integer type, got {ins.ty}")
    if ins.op in BINOPS_INT and ins.op not in ("and", "or", "xor") and ins.ty == "i1":
        diags.append(f"{where}: {ins.op} not defined on i1")
    if ins.op in BINOPS_FLOAT and ins.ty != "f64":
        diags.append(f"{where}: {ins.op} requires f64")
    if ins.op == "icmp":
        if ins.pred not in ICMP_PREDS:
            diags.append(f"{where}: bad icmp predicate {ins.pred!r}")
        if ins.ty not in ("i1", "i32", "i64"):
            diags.append(f"{where}: icmp requires an integer type, got {ins.ty}")
    if ins.op == "fcmp":
        if ins.pred not in FCMP_PREDS:
            diags.append(f"{where}: bad fcmp predicate {ins.pred!r}")
        if ins.ty != "f64":
            diags.append(f"{where}: fcmp requires f64")
    if ins.op in CASTS and (ins.ty, ins.cast_to) not in CAST_PAIRS[ins.op]:
        diags.append(f"{where}: invalid cast {ins.op} {ins.ty} to {ins.cast_to}")
    if ins.op == "ret":
        if f.ret == "void" and ins.operands:
            diags.append(f"{where}: ret with a value in a void function")
        if f.ret != "void" and (len(ins.operands) != 1 or ins.ty != f.ret):
            diags.append(f"{where}: ret must return one {f.ret} value")

    callee_params = None
    if ins.op == "call":
        if ins.callee not in m.functions:
            diags.append(f"{where}: call to undefined function @{ins.callee}")
            return
        cal = m.functions[ins.callee]
        callee_params = cal.params
        if ins.ty != cal.ret:
            diags.append(f"{where}: call type {ins.ty} does not match @{cal.name} -> {cal.ret}")
        if len(ins.operands) != len(cal.params):
            diags.append(f"{where}: call to @{cal.name} expects {len(cal.params)} args, "
                         f"has {len(ins.operands)}")
            return

    slots = operand_slot_types(ins, reg_types, callee_params)
    for o, want in zip(ins.operands, slots):
        if isinstance(o, Reg):
            have = reg_types.get(o.name)
            if have is None:
                continue  # reported by the must-assign pass
            if ins.op == "gep" and o is ins.operands[1]:
                if have not in ("i32", "i64"):
                    diags.append(f"{where}: gep index must be i32 or i64, got {have}")
                continue
            if have != want:
                diags.append(f"{where}: operand %{o.name} has type {have}, expected {want}")
        else:
            if ins.op == "gep" and o is ins.operands[1]:
                continue
            if o.ty != want:
                diags.append(f"{where}: literal {o.value!r} has type {o.ty}, expected {want}")
            if o.ty == "i1" and o.value not in (0, 1):
                diags.append(f"{where}: i1 literal must be 0 or 1")


def _check_function(f: Function, m: Module, diags: list[str]):
    where = f"@{f.name}"
    if not f.blocks:
        diags.append(f"{where}: function has no blocks")
        return
    labels = [b.label for b in f.blocks]
    if len(set(labels)) != len(labels):
        diags.append(f"{where}: duplicate block label")
        return
    label_set = set(labels)

    for b in f.blocks:
        if not b.instrs:
            diags.append(f"{where}: block {b.label} is empty")
            return
        for ins in b.instrs[:-1]:
            if ins.is_terminator():
                diags.append(f"{where}: terminator in the middle of block {b.label}")
        if not b.instrs[-1].is_terminator():
            diags.append(f"{where}: block {b.label} does not end in a terminator")
        for s in b.instrs[-1].succs:
            if s not in label_set:
                diags.append(f"{where}: undefined label {s} in block {b.label}")
    if diags:
        return

    try:
        reg_types = f.register_types()
    except IRError as e:
        diags.append(str(e))
        return

    for b in f.blocks:
        for ins in b.instrs:
            _check_instr_shape(f, ins, reg_types, m, diags)
    if diags:
        return

    # reachability + entry has no predecessors
    preds: dict[str, set[str]] = {lab: set() for lab in labels}
    seen = set()
    stack = [f.entry]
    while stack:
        lab = stack.pop()
        if lab in seen:
            continue
        seen.add(lab)
        for s in f.block(lab).terminator().succs:
            preds[s].add(lab)
            stack.append(s)
    for lab in labels:
        if lab not in seen:
            diags.append(f"{where}: unreachable block {lab}")
    if preds[f.entry]:
        diags.append(f"{where}: entry block {f.entry} has predecessors")
    if diags:
        return

    # must-assign analysis: every register assigned before use on every path
    universe = set(reg_types)
    gen: dict[str, set[str]] = {}
    for b in f.blocks:
        g = set()
        for ins in b.instrs:
            if ins.result is not None:
                g.add(ins.result)
        gen[b.label] = g
    avail_in = {lab: set(universe) for lab in labels}
    avail_in[f.entry] = {p for p, _ in f.params}
    changed = True
    while changed:
        changed = False
        for b in f.blocks:
            if b.label == f.entry:
                inb = avail_in[b.label]
            else:
                inb = set(universe)
                for p in preds[b.label]:
                    inb &= avail_in[p] | gen[p]
                if inb != avail_in[b.label]:
                    avail_in[b.label] = inb
                    changed = True
    for b in f.blocks:
        running = set(avail_in[b.label])
        for ins in b.instrs:
            for o in ins.operands:
                if isinstance(o, Reg) and o.name not in running:
                    what = ("undefined register" if o.name not in universe
                            else "register")
                    diags.append(f"{where}: {what} %{o.name} used before assignment "
                                 f"in block {b.label}")
            if ins.result is not None:
                running.add(ins.result)


def validate_module(m: Module, raise_on_error: bool = True) -> list[str]:
    """Validate a module. Returns diagnostics; raises ValidationError by default."""
    diags: list[str] = []
    if m.entry not in m.functions:
        diags.append(f"entry function @{m.entry} does not exist")
    for f in m.functions.values():
        local: list[str] = []
        _check_function(f, m, local)
        diags.extend(local)

    # recursion: the call graph must be a DAG
    if not diags:
        color: dict[str, int] = {}

        def dfs(name: str, trail: list[str]) -> bool:
            color[name] = 1
            for ins in m.functions[name].instructions():
                if ins.op != "call":
                    continue
                c = ins.callee
                if c not in m.functions:
                    continue
                if color.get(c) == 1:
                    diags.append("recursive call cycle: " +
                                 " -> ".join(trail + [name, c]))
                    return False
                if color.get(c, 0) == 0 and not dfs(c, trail + [name]):
                    return False
            color[name] = 2
            return True

        for name in m.functions:
            if color.get(name, 0) == 0 and not dfs(name, []):
                break

    if diags and raise_on_error:
        raise ValidationError(diags)
    return diags
