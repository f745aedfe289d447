"""Independent reference implementations used only by tests.

These deliberately avoid the package's own algorithms: the expression
oracle is a shunting-yard evaluator (the package uses recursive descent),
the inverse oracle is a brute-force scan (the package uses Fermat), and
the path oracle is a plain breadth-first enumeration.
"""

from fractions import Fraction


def brute_force_inverse(a: int, p: int) -> int:
    for r in range(1, p):
        if a * r % p == 1:
            return r
    raise ValueError(f"{a} has no inverse mod {p}")


def shunting_yard_eval(text: str) -> Fraction:
    """Two-stack infix evaluator with standard precedence, left assoc."""
    prec = {"+": 1, "-": 1, "*": 2, "/": 2}
    out: list[Fraction] = []
    ops: list[str] = []

    def apply(op: str) -> None:
        b = out.pop()
        a = out.pop()
        if op == "+":
            out.append(a + b)
        elif op == "-":
            out.append(a - b)
        elif op == "*":
            out.append(a * b)
        else:
            if b == 0:
                raise ZeroDivisionError(text)
            out.append(a / b)

    i = 0
    n = len(text)
    prev_operand = False  # distinguishes unary from binary minus
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isdigit() or ch == ".":
            j = i
            while j < n and (text[j].isdigit() or text[j] == "."):
                j += 1
            out.append(Fraction(text[i:j]))
            i = j
            prev_operand = True
            continue
        if ch == "(":
            ops.append(ch)
            i += 1
            prev_operand = False
            continue
        if ch == ")":
            while ops and ops[-1] != "(":
                apply(ops.pop())
            if not ops:
                raise ValueError(f"unbalanced parens in {text!r}")
            ops.pop()
            i += 1
            prev_operand = True
            continue
        if ch in prec:
            if ch == "-" and not prev_operand:
                # unary minus: rewrite -x as 0 - x inside a virtual group
                out.append(Fraction(0))
            else:
                while ops and ops[-1] != "(" and prec[ops[-1]] >= prec[ch]:
                    apply(ops.pop())
            ops.append(ch)
            i += 1
            prev_operand = False
            continue
        raise ValueError(f"unexpected {ch!r} in {text!r}")
    while ops:
        op = ops.pop()
        if op == "(":
            raise ValueError(f"unbalanced parens in {text!r}")
        apply(op)
    if len(out) != 1:
        raise ValueError(f"malformed expression {text!r}")
    return out[0]


def random_expression(rng, depth: int = 0, max_depth: int = 4) -> str:
    """Well-formed expression tree rendered to text; values kept modest."""
    if depth >= max_depth or rng.random() < 0.3:
        return str(int(rng.integers(0, 10**6)))
    op = ["+", "-", "*", "/"][int(rng.integers(0, 4))]
    left = random_expression(rng, depth + 1, max_depth)
    right = random_expression(rng, depth + 1, max_depth)
    text = f"{left}{op}{right}"
    if rng.random() < 0.3:
        text = f"({text})"
    return text
