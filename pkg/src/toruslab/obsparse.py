"""Text form of torus observables.

Two spellings are accepted:

* a sum of terms ``coef*cos(2pi*(k1 x + k2 p))``, ``coef*sin(...)`` and
  constants, e.g. ``"1 - 0.5*cos(2pi*(1x+0p)) + sin(2pi*(x-2p))"``;
* a raw mode list ``k1,k2:re,im`` separated by ``;``, e.g. ``"1,0:0.5,0; -1,0:0.5,0"``.

:func:`format_observable` prints the first form for real observables and the
second otherwise; parsing its output reproduces the coefficients exactly.
"""

from __future__ import annotations

import re

from .errors import DomainError
from .torus import TorusObservable


class ObservableSyntaxError(DomainError):
    """Malformed observable text; ``position`` is the 0-based character offset."""

    def __init__(self, message: str, text: str, position: int):
        self.text = text
        self.position = position
        super().__init__(f"{message} at position {position}: {text!r}")


_NUMBER = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?|inf|nan")
_INT = re.compile(r"\d+")


class _Scanner:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def accept(self, token: str) -> bool:
        self.skip()
        if self.text.startswith(token, self.pos):
            self.pos += len(token)
            return True
        return False

    def expect(self, token: str) -> None:
        if not self.accept(token):
            self.fail(f"expected {token!r}")

    def match(self, pattern: re.Pattern):
        self.skip()
        m = pattern.match(self.text, self.pos)
        if m:
            self.pos = m.end()
            return m.group(0)
        return None

    def fail(self, message: str):
        self.skip()
        raise ObservableSyntaxError(message, self.text, self.pos)


def _parse_linear(sc: _Scanner) -> tuple[int, int]:
    """``[+-] [int] (x|p)`` repeated; returns (k1, k2)."""
    k = [0, 0]
    first = True
    while True:
        sign = 1
        if sc.accept("-"):
            sign = -1
        elif not sc.accept("+") and not first:
            break
        digits = sc.match(_INT)
        coef = int(digits) if digits is not None else 1
        if sc.accept("x"):
            k[0] += sign * coef
        elif sc.accept("p"):
            k[1] += sign * coef
        elif digits is not None and sc.peek() == ")":
            if coef != 0:
                sc.fail("constant offset inside a Fourier mode")
        else:
            sc.fail("expected 'x' or 'p'")
        first = False
        if sc.peek() == ")":
            break
    return k[0], k[1]


def _parse_mode(sc: _Scanner) -> tuple[int, int]:
    sc.expect("(")
    sc.expect("2")
    sc.accept("*")
    sc.expect("pi")
    sc.accept("*")
    sc.expect("(")
    k = _parse_linear(sc)
    sc.expect(")")
    sc.expect(")")
    return k


def _add(coeffs: dict, k: tuple[int, int], c: complex) -> None:
    coeffs[k] = coeffs.get(k, 0j) + c


def _parse_sum(text: str) -> dict:
    sc = _Scanner(text)
    coeffs: dict = {}
    if not sc.peek():
        sc.fail("empty observable")
    first = True
    while sc.peek():
        sign = 1.0
        if sc.accept("-"):
            sign = -1.0
        elif not sc.accept("+") and not first:
            sc.fail("expected '+' or '-'")
        first = False
        num = sc.match(_NUMBER)
        coef = sign * float(num) if num is not None else sign
        if num is not None and not sc.accept("*"):
            _add(coeffs, (0, 0), coef)
            continue
        if sc.accept("cos"):
            k = _parse_mode(sc)
            _add(coeffs, k, coef / 2)
            _add(coeffs, (-k[0], -k[1]), coef / 2)
        elif sc.accept("sin"):
            k = _parse_mode(sc)
            _add(coeffs, k, coef / 2j)
            _add(coeffs, (-k[0], -k[1]), -coef / 2j)
        else:
            sc.fail("expected a number, 'cos' or 'sin'")
    return coeffs


_RAW = re.compile(r"\s*([+-]?\d+)\s*,\s*([+-]?\d+)\s*:\s*(\S+?)\s*,\s*(\S+?)\s*$")


def _parse_raw(text: str) -> dict:
    coeffs: dict = {}
    offset = 0
    for chunk in text.split(";"):
        if chunk.strip():
            m = _RAW.match(chunk)
            if not m:
                raise ObservableSyntaxError("expected 'k1,k2:re,im'", text, offset + len(chunk) - len(chunk.lstrip()))
            try:
                c = complex(float(m.group(3)), float(m.group(4)))
            except ValueError:
                raise ObservableSyntaxError("bad coefficient", text, offset + m.start(3)) from None
            _add(coeffs, (int(m.group(1)), int(m.group(2))), c)
        offset += len(chunk) + 1
    if not coeffs:
        raise ObservableSyntaxError("empty mode list", text, 0)
    return coeffs


def _exactly_real(f: TorusObservable) -> bool:
    return all(f.coeffs.get((-k1, -k2), 0j) == c.conjugate() for (k1, k2), c in f.coeffs.items())


def parse_observable(text: str, real: bool | None = None) -> TorusObservable:
    """Parse either spelling. ``real=True`` demands a real observable (DomainError
    otherwise) and symmetrizes round-off; ``None`` marks the result real only when
    its coefficients are exactly conjugate-symmetric, so nothing is lost."""
    coeffs = _parse_raw(text) if ":" in text else _parse_sum(text)
    probe = TorusObservable(coeffs)
    if real and not probe.is_real():
        raise DomainError(f"observable {text!r} is not real (c_-k != conj(c_k))")
    if real is None:
        real = _exactly_real(probe)
    if real:
        # make the symmetry exact so downstream reality checks see a clean object
        sym = {}
        for k, c in probe.coeffs.items():
            partner = probe.coeffs.get((-k[0], -k[1]), 0j)
            sym[k] = (c + partner.conjugate()) / 2
        return TorusObservable(sym, real=True, label=text.strip())
    return TorusObservable(coeffs, real=False, label=text.strip())


def _num(v: float) -> str:
    return repr(float(v))


def format_observable(f: TorusObservable) -> str:
    """Canonical text: cos/sin sum for exactly real observables, raw mode list otherwise."""
    if not (f.real and _exactly_real(f)):
        return "; ".join(f"{k1},{k2}:{_num(c.real)},{_num(c.imag)}" for (k1, k2), c in f.coeffs.items()) or "0,0:0.0,0.0"
    terms: list[tuple[float, str]] = []
    c0 = f.coeffs.get((0, 0), 0j).real
    if c0:
        terms.append((c0, ""))
    for (k1, k2), c in f.coeffs.items():
        if k1 > 0 or (k1 == 0 and k2 > 0):
            mode = f"(2pi*({k1}x{k2:+d}p))"
            a, b = 2 * c.real, -2 * c.imag
            if a:
                terms.append((a, "cos" + mode))
            if b:
                terms.append((b, "sin" + mode))
    if not terms:
        return "0"
    out = []
    for i, (v, func) in enumerate(terms):
        body = _num(abs(v)) + ("*" + func if func else "")
        out.append(("-" if v < 0 else "") + body if i == 0 else (" - " if v < 0 else " + ") + body)
    return "".join(out)
