"""A tiny s-expression language with a Merkle content encoding.

Expressions are plain Python values: ``int`` (exact, arbitrary precision),
``str`` (a symbol), ``bytes`` (written as ``#x`` followed by hex), and
``tuple`` (a list).  The printer emits one canonical text form -- atoms
separated by single spaces, no other whitespace -- and ``parse`` inverts it
exactly, so equal expressions always produce equal text and equal content
addresses.
"""

from __future__ import annotations

import re
from typing import Iterator, Union

from .hashtree import HashFn, DEFAULT_HASH, MerkleTree

__all__ = [
    "EvalError",
    "Expr",
    "ParseError",
    "Value",
    "encode_tree",
    "evaluate",
    "parse",
    "tokens_of",
    "unparse",
]

Expr = Union[int, str, bytes, tuple]
Value = Union[int, bool, bytes]

_INT_RE = re.compile(r"-?[0-9]+\Z")
_HEX_RE = re.compile(r"#x(?:[0-9a-fA-F]{2})*\Z")
_SYMBOL_RE = re.compile(r"[A-Za-z!$%&*+\-./:<=>?@^_~][A-Za-z0-9!$%&*+\-./:<=>?@^_~]*\Z")
_DELIMS = frozenset("() \t\r\n")


class ParseError(ValueError):
    """Raised on malformed input; carries the byte offset of the fault."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class EvalError(ValueError):
    pass


def _byte_offset(text: str, index: int) -> int:
    return len(text[:index].encode("utf-8"))


def _tokenize(text: str) -> Iterator[tuple[str, int]]:
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch in " \t\r\n":
            i += 1
            continue
        if ch in "()":
            yield ch, i
            i += 1
            continue
        j = i
        while j < n and text[j] not in _DELIMS:
            j += 1
        yield text[i:j], i
        i = j


def _atom(token: str, text: str, pos: int) -> Expr:
    if _INT_RE.match(token):
        return int(token)
    if token.startswith("#"):
        if _HEX_RE.match(token):
            return bytes.fromhex(token[2:])
        raise ParseError(f"malformed byte literal {token!r}", _byte_offset(text, pos))
    if _SYMBOL_RE.match(token):
        return token
    raise ParseError(f"malformed token {token!r}", _byte_offset(text, pos))


def parse(text: str) -> Expr:
    """Parse one expression; reject trailing content and unbalanced parens."""
    stack: list[list[Expr]] = []
    result: list[Expr] = []
    last_open = 0
    for token, pos in _tokenize(text):
        if token == "(":
            stack.append([])
            last_open = pos
            continue
        if token == ")":
            if not stack:
                raise ParseError("unbalanced ')'", _byte_offset(text, pos))
            done: Expr = tuple(stack.pop())
            (stack[-1] if stack else result).append(done)
        else:
            item = _atom(token, text, pos)
            (stack[-1] if stack else result).append(item)
        if not stack and len(result) > 1:
            raise ParseError("trailing content after expression", _byte_offset(text, pos))
    if stack:
        raise ParseError("unbalanced '('", _byte_offset(text, len(text)))
    if not result:
        raise ParseError("empty input", 0)
    return result[0]


def _check_symbol(sym: str) -> str:
    if _SYMBOL_RE.match(sym) and not _INT_RE.match(sym):
        return sym
    raise ValueError(f"not a printable symbol: {sym!r}")


def tokens_of(expr: Expr) -> list[str]:
    """Canonical token stream, parentheses included."""
    out: list[str] = []

    def walk(e: Expr) -> None:
        if isinstance(e, bool):
            raise ValueError("booleans are values, not expressions; use the symbols true/false")
        if isinstance(e, int):
            out.append(str(e))
        elif isinstance(e, str):
            out.append(_check_symbol(e))
        elif isinstance(e, bytes):
            out.append("#x" + e.hex())
        elif isinstance(e, tuple):
            out.append("(")
            for item in e:
                walk(item)
            out.append(")")
        else:
            raise ValueError(f"not an expression: {e!r}")

    walk(expr)
    return out


def unparse(expr: Expr) -> str:
    """Canonical printed form: single spaces, lowercase hex, no sugar."""
    tokens = tokens_of(expr)
    pieces: list[str] = []
    prev = ""
    for tok in tokens:
        if pieces and not (prev == "(" or tok == ")"):
            pieces.append(" ")
        pieces.append(tok)
        prev = tok
    return "".join(pieces)


def encode_tree(expr: Expr, hash_fn: HashFn = DEFAULT_HASH) -> MerkleTree:
    """Content-address an expression: one leaf per canonical token."""
    return MerkleTree([t.encode("utf-8") for t in tokens_of(expr)], hash_fn)


def _want_int(v: Value, op: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise EvalError(f"{op}: expected integer, got {v!r}")
    return v


def _want_bool(v: Value, op: str) -> bool:
    if not isinstance(v, bool):
        raise EvalError(f"{op}: expected boolean, got {v!r}")
    return v


def evaluate(expr: Expr) -> Value:
    """Evaluate a closed expression down to an integer, boolean, or bytes."""
    if isinstance(expr, bool):
        raise EvalError("booleans are not source expressions")
    if isinstance(expr, int):
        return expr
    if isinstance(expr, bytes):
        return expr
    if isinstance(expr, str):
        if expr == "true":
            return True
        if expr == "false":
            return False
        raise EvalError(f"unbound symbol {expr!r}")
    if not isinstance(expr, tuple):
        raise EvalError(f"not an expression: {expr!r}")
    if not expr:
        raise EvalError("cannot evaluate the empty list")
    head = expr[0]
    if not isinstance(head, str):
        raise EvalError(f"operator must be a symbol, got {head!r}")
    args = [evaluate(a) for a in expr[1:]]

    if head == "+":
        return sum(_want_int(a, head) for a in args)
    if head == "*":
        product = 1
        for a in args:
            product *= _want_int(a, head)
        return product
    if head == "-":
        if not args:
            raise EvalError("-: needs at least one argument")
        first = _want_int(args[0], head)
        if len(args) == 1:
            return -first
        for a in args[1:]:
            first -= _want_int(a, head)
        return first
    if head in (">=", "<="):
        if len(args) != 2:
            raise EvalError(f"{head}: needs exactly two arguments")
        a, b = (_want_int(x, head) for x in args)
        return a >= b if head == ">=" else a <= b
    if head == "=":
        if len(args) != 2:
            raise EvalError("=: needs exactly two arguments")
        a, b = args
        if isinstance(a, bool) != isinstance(b, bool) or isinstance(a, bytes) != isinstance(b, bytes):
            raise EvalError("=: mismatched argument types")
        return a == b
    if head == "and":
        return all(_want_bool(a, head) for a in args)
    if head == "or":
        return any(_want_bool(a, head) for a in args)
    if head == "not":
        if len(args) != 1:
            raise EvalError("not: needs exactly one argument")
        return not _want_bool(args[0], head)
    if head == "threshold":
        if not args:
            raise EvalError("threshold: needs a count argument")
        m = _want_int(args[0], head)
        votes = sum(1 for a in args[1:] if _want_bool(a, head))
        return votes >= m
    raise EvalError(f"unknown operator {head!r}")
