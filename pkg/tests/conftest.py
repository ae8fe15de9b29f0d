import pytest

from presage.ir import parse_ir

FOO1_TEXT = """\
func @foo1(%a: addr[f64 x 20], %n: i64) -> results(%a)
bb0:
  br bb1
bb1:
  %i = phi [1, bb0], [%inext, bb2]
  %c = icmp lt %i, %n
  condbr %c, bb2, bb3
bb2:
  %t = mul %i, 2
  %id = sub %t, 2
  %addr = gep %a, %id, 8
  %fi = cast %i : f64
  store %fi, %addr
  %inext = add %i, 1
  br bb1
bb3:
  ret
"""


@pytest.fixture
def foo1():
    return parse_ir(FOO1_TEXT)


# acceptance verdicts, printed once at the end of the session
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
