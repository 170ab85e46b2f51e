import pytest

from mergedse.dse import corpus_programs, default_model
from mergedse.ir import HeapImage, parse_module

# The two conditional selectors with a helper tail call, used across suites.
PAIR_SRC = """
func @helper(%c: i32, %a: i32) -> i32 {
bb0:
  %r = sub i32 %c, %a
  ret i32 %r
}

func @sel_a(%a: i32, %b: i32, %sum: i1) -> i32 {
bb0:
  br %sum, bb1, bb2
bb1:
  %c = add i32 %a, %b
  jmp bb3
bb2:
  %c = mul i32 %a, %b
  jmp bb3
bb3:
  %c2 = call i32 @helper(%c, %a)
  ret i32 %c2
}

func @sel_b(%a: i32, %b: i32, %d: i32, %mult: i1) -> i32 {
bb0:
  br %mult, bb1, bb2
bb1:
  %c = mul i32 %a, %b
  jmp bb3
bb2:
  %c = add i32 %d, %b
  jmp bb3
bb3:
  ret i32 %c
}
"""


@pytest.fixture(scope="session")
def pair_module():
    return parse_module(PAIR_SRC)


@pytest.fixture(scope="session")
def corpus():
    out = []
    for name, irp, hp in corpus_programs():
        m = parse_module(irp.read_text())
        img = HeapImage.parse(hp.read_text())
        out.append((name, m, img))
    return out


@pytest.fixture(scope="session")
def area_model():
    # one bundled-model training shared across the non-acceptance suites
    return default_model(seed=7)


@pytest.fixture(scope="session")
def model_file(area_model, tmp_path_factory):
    from mergedse.cost import save_model
    path = tmp_path_factory.mktemp("model") / "area-model.txt"
    save_model(area_model, str(path))
    return str(path)
