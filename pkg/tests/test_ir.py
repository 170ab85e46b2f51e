import struct

import pytest

from mergedse.ir import (
    Arena, HeapImage, InterpError, IRError, ParseError, ValidationError,
    interpret, parse_module, print_module, run_heap_image,
)

from conftest import PAIR_SRC


def test_parse_identity_function():
    m = parse_module("func @id(%a: i32) -> i32 { bb0: ret i32 %a }")
    assert list(m.functions) == ["id"]
    f = m.functions["id"]
    assert len(f.blocks) == 1
    assert f.blocks[0].instrs[0].op == "ret"


def test_parse_selector_pair(pair_module):
    f1 = pair_module.functions["sel_a"]
    f2 = pair_module.functions["sel_b"]
    assert len(f1.blocks) == 4
    assert len(f2.blocks) == 4
    assert any(i.op == "call" and i.callee == "helper"
               for i in f1.instructions())


def test_use_before_assignment_rejected():
    with pytest.raises(ValidationError, match=r"register %y used before assignment"):
        parse_module("func @bad() -> i32 { bb0: %x = add i32 %y, 1\n ret i32 %x }")


@pytest.mark.parametrize("src,match", [
    ("func @f() -> i32 { bb0: %x = add i32 1, 2 }", "terminator"),
    ("func @f() -> i32 { bb0: jmp nowhere }", "undefined label"),
    ("func @f() -> i32 { bb0: %x = call i32 @g(1)\n ret i32 %x }",
     "undefined function"),
    ("func @f(%p: f64) -> i32 { bb0: %x = add i32 %p, 1\n ret i32 %x }",
     "has type f64"),
    ("func @f() -> i32 { bb0: jmp bb0 }", "entry block"),
    ("func @f() -> i32 { bb0: ret i32 1\nbb1: ret i32 2 }", "unreachable"),
])
def test_validator_diagnostics(src, match):
    with pytest.raises(ValidationError, match=match):
        parse_module(src)


def test_recursion_rejected():
    src = """
    func @a(%x: i32) -> i32 { bb0: %r = call i32 @b(%x)\n ret i32 %r }
    func @b(%x: i32) -> i32 { bb0: %r = call i32 @a(%x)\n ret i32 %r }
    """
    with pytest.raises(ValidationError, match="recursive call cycle"):
        parse_module(src)


def test_syntax_error_has_position():
    with pytest.raises(ParseError) as exc:
        parse_module("func @f( -> i32 { bb0: ret i32 1 }")
    assert exc.value.line == 1
    assert "expected" in str(exc.value)


def test_roundtrip_is_fixed_point(pair_module, corpus):
    mods = [pair_module] + [m for _, m, _ in corpus]
    for m in mods:
        t1 = print_module(m)
        m2 = parse_module(t1)
        assert print_module(m2) == t1
        assert m2 == m  # structural equality of the dataclasses


def test_roundtrip_twice_byte_identical():
    t1 = print_module(parse_module(PAIR_SRC))
    t2 = print_module(parse_module(t1))
    assert t1 == t2


def test_empty_void_function_prints_canonically():
    m = parse_module("func @f() -> void { bb0: ret }")
    assert print_module(m) == "func @f() -> void {\nbb0:\n  ret\n}\n"


def test_interpret_selector_sides(pair_module):
    # with the helper computing c - a: (2+3) - 2 = 3
    r1 = interpret(pair_module, "sel_a", [2, 3, 1])
    assert r1.value == 3
    assert r1.trace.count("sel_a", "add") == 1
    assert r1.trace.count("sel_a", "mul") == 0
    assert r1.trace.calls_between("sel_a", "helper") == 1

    r2 = interpret(pair_module, "sel_b", [2, 3, 7, 1])
    assert r2.value == 6
    assert r2.trace.count("sel_b", "mul") == 1


def test_fuel_exhaustion(pair_module):
    with pytest.raises(InterpError, match="fuel"):
        interpret(pair_module, "sel_a", [2, 3, 1], fuel=0)


def test_division_by_zero():
    m = parse_module("func @f(%a: i32) -> i32 { bb0: %r = sdiv i32 %a, 0\n ret i32 %r }")
    with pytest.raises(InterpError, match="division by zero"):
        interpret(m, "f", [7])


def test_out_of_bounds_and_null_guard():
    m = parse_module("func @f(%p: ptr) -> i32 { bb0: %v = load i32, %p\n ret i32 %v }")
    with pytest.raises(InterpError, match="null/guard"):
        interpret(m, "f", [0])
    with pytest.raises(InterpError, match="out-of-bounds"):
        interpret(m, "f", [10 ** 6])


def test_integer_wraparound_and_shifts():
    m = parse_module("""
    func @f(%a: i32, %b: i32) -> i32 {
    bb0:
      %m = mul i32 %a, %b
      %s = shl i32 %m, 1
      %t = ashr i32 %s, 3
      ret i32 %t
    }
    """)
    big = 2 ** 30
    r = interpret(m, "f", [big, 2])
    # 2^31 wraps to INT_MIN; << 1 gives 0; >> 3 stays 0
    assert r.value == 0
    r2 = interpret(m, "f", [-5, 3])
    assert r2.value == ((-15 << 1) >> 3)


def test_casts_and_floats():
    m = parse_module("""
    func @f(%a: i32) -> i64 {
    bb0:
      %w = zext i32 %a to i64
      %d = sitofp i32 %a to f64
      %e = fmul f64 %d, 2.5
      %t = fptosi f64 %e to i64
      %r = add i64 %w, %t
      ret i64 %r
    }
    """)
    r = interpret(m, "f", [-3])
    # zext treats the i32 bits as unsigned; fptosi truncates toward zero
    assert r.value == ((-3) & 0xFFFFFFFF) + int(-3 * 2.5)


def test_trace_conservation(corpus):
    for name, m, img in corpus:
        r = run_heap_image(m, img)
        total = sum(c for ops in r.trace.counts.values() for c in ops.values())
        assert total == r.trace.total


def test_trace_calls_subset_of_static_graph(corpus):
    from mergedse.analysis import build_call_graph
    for name, m, img in corpus:
        r = run_heap_image(m, img)
        cg = build_call_graph(m)
        for (i, j), c in r.trace.calls.items():
            assert c >= 0
            assert j in cg.direct[i]


def test_interpretation_deterministic(corpus):
    name, m, img = corpus[0]
    r1 = run_heap_image(m, img)
    r2 = run_heap_image(m, img)
    assert r1.value == r2.value
    assert r1.heap == r2.heap
    assert r1.trace.counts == r2.trace.counts
    assert r1.trace.calls == r2.trace.calls
    assert r1.trace.edge_bytes == r2.trace.edge_bytes
    assert r1.trace.total == r2.trace.total


def test_heap_image_parse_and_bind():
    img = HeapImage.parse("""
    ; a region and three scalars
    region buf 8 0102030405060708
    arg 0 = buf
    arg 1 = -7
    arg 2 = true
    """)
    m = parse_module("""
    func @f(%p: ptr, %k: i32, %flag: i1) -> i32 {
    bb0:
      %v = load i32, %p
      %s = select i32 %flag, %v, %k
      ret i32 %s
    }
    """)
    r = run_heap_image(m, img)
    assert r.value == struct.unpack("<i", bytes([1, 2, 3, 4]))[0]


def test_heap_image_errors():
    with pytest.raises(IRError, match="hex longer"):
        HeapImage.parse("region a 1 0102")
    with pytest.raises(IRError, match="duplicate region"):
        HeapImage.parse("region a 1\nregion a 1")
    with pytest.raises(IRError, match="unknown directive"):
        HeapImage.parse("blob a 1")
    m = parse_module("func @g(%k: i32, %j: i32) -> i32 { bb0: ret i32 %k }")
    with pytest.raises(IRError, match="missing arg"):
        HeapImage.parse("arg 0 = 5").instantiate(m.functions["g"])
    with pytest.raises(IRError, match="non-ptr"):
        HeapImage.parse("region b 4\narg 0 = b\narg 1 = 2").instantiate(
            m.functions["g"])


def test_store_visible_in_region_image():
    m = parse_module("""
    func @f(%p: ptr) -> void {
    bb0:
      store i32 -1, %p
      ret
    }
    """)
    arena = Arena()
    addr = arena.add_region("r", bytes(8))
    r = interpret(m, "f", [addr], arena)
    assert r.heap[:4] == b"\xff\xff\xff\xff"
    assert r.heap[4:] == bytes(4)
