"""Truncated formal series in x, phi+, phi- over a Grassmann algebra.

A series is stored as ``{k: raw}`` where ``raw`` is a raw Grassmann dictionary
on ``L + 2`` generators: bits ``0..L-1`` are the soul generators, bit ``L`` is
phi+ and bit ``L+1`` is phi-.  Because the odd variables come after every soul
generator in the canonical order, the raw element at mask ``S | phi-bits`` is
exactly ``coef_S * phi-monomial`` with the coefficient written on the left.

Truncation: an ``at_zero`` series is exact for every power ``k <= trunc`` and
unknown above; an ``at_infinity`` series is exact for ``k >= trunc``.
``trunc = None`` means the series is exact everywhere (a Laurent polynomial).
For exact series the kind still matters: it fixes the direction in which
inverses are expanded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

from .errors import GeneratorCountMismatch, IncompatibleKinds, NonInvertible, SubstitutionDiverges
from .field import FieldScalar, I as FIELD_I
from .grassmann import (
    DEFAULT_GENERATORS,
    ONE_T,
    GrassmannElement,
    Parity,
    popcount,
    raw_add_into,
    raw_mul,
    raw_scale,
    t_neg,
)

AT_ZERO = "at_zero"
AT_INFINITY = "at_infinity"
KINDS = (AT_ZERO, AT_INFINITY)

DEFAULT_ORDER = 8


def _flip(kind: str) -> str:
    return AT_INFINITY if kind == AT_ZERO else AT_ZERO


def _conv(a: Mapping[int, dict], b: Mapping[int, dict], n: int, hi: float = math.inf) -> dict:
    """Raw convolution of two term maps keeping only keys ``<= hi``."""
    out: dict = {}
    for ka, da in a.items():
        for kb, db in b.items():
            k = ka + kb
            if k > hi:
                continue
            prod = raw_mul(da, db, n)
            if not prod:
                continue
            cur = out.get(k)
            if cur is None:
                out[k] = prod
            else:
                raw_add_into(cur, prod)
                if not cur:
                    del out[k]
    return out


def _add_terms(a: Mapping[int, dict], b: Mapping[int, dict], sign: int = 1) -> dict:
    out = {k: dict(v) for k, v in a.items()}
    for k, v in b.items():
        cur = out.get(k)
        if cur is None:
            out[k] = {m: (t_neg(c) if sign < 0 else c) for m, c in v.items()}
        else:
            raw_add_into(cur, v, None if sign > 0 else -1)
            if not cur:
                del out[k]
    return out


class SuperSeries:
    """Immutable truncated series in R((x))[phi+, phi-]."""

    __slots__ = ("L", "kind", "trunc", "t")

    def __init__(self, L: int, kind: str, terms: Mapping[int, Mapping[int, tuple]], trunc: int | None):
        if kind not in KINDS:
            raise ValueError(f"unknown series kind {kind!r}")
        self.L = L
        self.kind = kind
        self.trunc = trunc
        t = {}
        for k, raw in terms.items():
            if trunc is not None and not self._known(k, kind, trunc):
                continue
            clean = {m: c for m, c in raw.items() if c[0] or c[1] or c[2] or c[3]}
            if clean:
                t[k] = clean
        self.t = t

    @staticmethod
    def _known(k: int, kind: str, trunc: int | None) -> bool:
        if trunc is None:
            return True
        return k <= trunc if kind == AT_ZERO else k >= trunc

    # ----------------------------------------------------------------- basics
    @property
    def nvars(self) -> int:
        return self.L + 2

    @property
    def bit_plus(self) -> int:
        return 1 << self.L

    @property
    def bit_minus(self) -> int:
        return 1 << (self.L + 1)

    @classmethod
    def zero(cls, L: int = DEFAULT_GENERATORS, kind: str = AT_ZERO, trunc: int | None = None) -> "SuperSeries":
        return cls(L, kind, {}, trunc)

    @classmethod
    def constant(cls, g: GrassmannElement | int, L: int | None = None, kind: str = AT_ZERO) -> "SuperSeries":
        if not isinstance(g, GrassmannElement):
            g = GrassmannElement.scalar(g, L if L is not None else DEFAULT_GENERATORS)
        return cls(g.L, kind, {0: dict(g.c)}, None)

    @classmethod
    def monomial(cls, k: int, jp: int = 0, jm: int = 0, coef: GrassmannElement | None = None,
                 L: int = DEFAULT_GENERATORS, kind: str = AT_ZERO) -> "SuperSeries":
        if coef is None:
            coef = GrassmannElement.one(L)
        L = coef.L
        bits = (jp << L) | (jm << (L + 1))
        return cls(L, kind, {k: {m | bits: c for m, c in coef.c.items()}}, None)

    @classmethod
    def x(cls, L: int = DEFAULT_GENERATORS, kind: str = AT_ZERO) -> "SuperSeries":
        return cls.monomial(1, L=L, kind=kind)

    @classmethod
    def phi(cls, sign: int, L: int = DEFAULT_GENERATORS, kind: str = AT_ZERO) -> "SuperSeries":
        return cls.monomial(0, 1 if sign > 0 else 0, 1 if sign < 0 else 0, L=L, kind=kind)

    @classmethod
    def from_terms(cls, L: int, kind: str, terms: Mapping[tuple, GrassmannElement],
                   trunc: int | None = None) -> "SuperSeries":
        out: dict = {}
        for (k, jp, jm), g in terms.items():
            if jp not in (0, 1) or jm not in (0, 1):
                raise ValueError("odd-variable exponents must be 0 or 1")
            g = g if isinstance(g, GrassmannElement) else GrassmannElement.scalar(g, L)
            if g.L != L:
                raise GeneratorCountMismatch(f"L={L} vs L={g.L}")
            bits = (jp << L) | (jm << (L + 1))
            raw_add_into(out.setdefault(k, {}), {m | bits: c for m, c in g.c.items()})
        return cls(L, kind, out, trunc)

    def _new(self, terms: Mapping[int, dict], trunc: int | None = "same", kind: str | None = None) -> "SuperSeries":
        return SuperSeries(self.L, kind or self.kind, terms, self.trunc if trunc == "same" else trunc)

    def with_kind(self, kind: str) -> "SuperSeries":
        if self.trunc is not None and kind != self.kind:
            raise IncompatibleKinds("cannot relabel the kind of a truncated series")
        return SuperSeries(self.L, kind, self.t, None)

    def truncate(self, trunc: int | None) -> "SuperSeries":
        """Tighten the truncation (never loosens it)."""
        if trunc is None:
            return self
        if self.trunc is not None:
            trunc = min(trunc, self.trunc) if self.kind == AT_ZERO else max(trunc, self.trunc)
        return self._new(self.t, trunc)

    # ---------------------------------------------------------------- access
    def terms(self) -> Iterator[tuple[int, int, int, GrassmannElement]]:
        L = self.L
        low = (1 << L) - 1
        for k in sorted(self.t):
            groups: dict = {}
            for m, c in self.t[k].items():
                groups.setdefault((m >> L) & 1, {}).setdefault((m >> (L + 1)) & 1, {})[m & low] = c
            for jp in (0, 1):
                for jm in (0, 1):
                    raw = groups.get(jp, {}).get(jm)
                    if raw:
                        yield k, jp, jm, GrassmannElement._raw(L, raw)

    def coef(self, k: int, jp: int = 0, jm: int = 0) -> GrassmannElement:
        L = self.L
        bits = (jp << L) | (jm << (L + 1))
        mask_phi = 3 << L
        raw = {m & ~mask_phi: c for m, c in self.t.get(k, {}).items() if m & mask_phi == bits}
        return GrassmannElement._raw(L, raw)

    def is_known(self, k: int) -> bool:
        return self._known(k, self.kind, self.trunc)

    def min_key(self) -> float:
        return min(self.t, default=math.inf)

    def max_key(self) -> float:
        return max(self.t, default=-math.inf)

    def floor(self) -> float:
        """Lowest power that may carry a nonzero coefficient (known or not)."""
        m = self.min_key()
        if self.trunc is not None and self.kind == AT_ZERO:
            m = min(m, self.trunc + 1)
        return m

    def ceil(self) -> float:
        m = self.max_key()
        if self.trunc is not None and self.kind == AT_INFINITY:
            m = max(m, self.trunc - 1)
        return m

    def window(self) -> tuple:
        """``(kmin, kmax)``: the exactly known range, ``None`` for an unbounded side."""
        if self.kind == AT_ZERO:
            lo = self.min_key()
            lo = None if lo == math.inf else lo
            if self.trunc is not None and (lo is None or lo > self.trunc):
                lo = self.trunc + 1
            return (lo, self.trunc)
        hi = self.max_key()
        hi = None if hi == -math.inf else hi
        if self.trunc is not None and (hi is None or hi < self.trunc):
            hi = self.trunc - 1
        return (self.trunc, hi)

    def is_zero(self) -> bool:
        return not self.t

    def parity(self) -> Parity | None:
        pars = {popcount(m) & 1 for raw in self.t.values() for m in raw}
        if len(pars) > 1:
            return None
        return Parity.ODD if pars == {1} else Parity.EVEN

    def constant_term(self) -> GrassmannElement:
        return self.coef(0)

    # ------------------------------------------------------------ arithmetic
    def _check(self, other: "SuperSeries") -> None:
        if other.L != self.L:
            raise GeneratorCountMismatch(f"L={self.L} vs L={other.L}")
        if self.trunc is not None and other.trunc is not None and self.kind != other.kind:
            raise IncompatibleKinds(f"{self.kind} vs {other.kind}")

    def _join_kind(self, other: "SuperSeries") -> str:
        if self.trunc is None and other.trunc is not None:
            return other.kind
        return self.kind

    def _coerce(self, other) -> "SuperSeries":
        if isinstance(other, SuperSeries):
            return other
        if isinstance(other, GrassmannElement):
            return SuperSeries.constant(other, kind=self.kind)
        return SuperSeries.constant(GrassmannElement.scalar(other, self.L), kind=self.kind)

    def _sum(self, other, sign: int) -> "SuperSeries":
        other = self._coerce(other)
        self._check(other)
        kind = self._join_kind(other)
        truncs = [s.trunc for s in (self, other) if s.trunc is not None]
        trunc = None
        if truncs:
            trunc = min(truncs) if kind == AT_ZERO else max(truncs)
        return SuperSeries(self.L, kind, _add_terms(self.t, other.t, sign), trunc)

    def __add__(self, other) -> "SuperSeries":
        return self._sum(other, 1)

    __radd__ = __add__

    def __sub__(self, other) -> "SuperSeries":
        return self._sum(other, -1)

    def __rsub__(self, other) -> "SuperSeries":
        return self._coerce(other) - self

    def __neg__(self) -> "SuperSeries":
        return self._new({k: {m: t_neg(c) for m, c in v.items()} for k, v in self.t.items()})

    def __mul__(self, other) -> "SuperSeries":
        if isinstance(other, SuperSeries):
            return self.mul(other)
        if isinstance(other, GrassmannElement):
            return self.mul(SuperSeries.constant(other, kind=self.kind))
        r = FieldScalar.coerce(other).r
        return self._new({k: raw_scale(v, r) for k, v in self.t.items()})

    def __rmul__(self, other) -> "SuperSeries":
        if isinstance(other, GrassmannElement):
            return SuperSeries.constant(other, kind=self.kind).mul(self)
        return self.__mul__(other)

    def mul(self, other: "SuperSeries") -> "SuperSeries":
        self._check(other)
        kind = self._join_kind(other)
        trunc = _product_trunc(self, other, kind)
        if kind == AT_ZERO:
            hi = math.inf if trunc is None else trunc
            terms = _conv(self.t, other.t, self.nvars, hi)
        else:
            lo = -math.inf if trunc is None else trunc
            terms = _reflect_terms(_conv(_reflect_terms(self.t), _reflect_terms(other.t), self.nvars, -lo))
        return SuperSeries(self.L, kind, terms, trunc)

    def __pow__(self, n: int) -> "SuperSeries":
        if n < 0:
            return self.inverse() ** (-n)
        out = SuperSeries.constant(GrassmannElement.one(self.L), kind=self.kind)
        for _ in range(n):
            out = out.mul(self)
        return out

    def scale_left(self, g: GrassmannElement) -> "SuperSeries":
        """``g * self`` for a Grassmann scalar ``g`` (Koszul signs handled by the raw product)."""
        n = self.nvars
        return self._new({k: raw_mul(g.c, v, n) for k, v in self.t.items()})

    def scale_right(self, g: GrassmannElement) -> "SuperSeries":
        n = self.nvars
        return self._new({k: raw_mul(v, g.c, n) for k, v in self.t.items()})

    def shift(self, n: int) -> "SuperSeries":
        """Multiply by x^n."""
        trunc = None if self.trunc is None else self.trunc + n
        return self._new({k + n: v for k, v in self.t.items()}, trunc)

    def inverse(self, order: int | None = None) -> "SuperSeries":
        """Multiplicative inverse expanded in the direction given by the kind.

        ``order`` caps the result (highest power at zero, lowest power at
        infinity) when the expansion does not terminate; default +-8.
        """
        if self.kind == AT_ZERO:
            return _inverse_at_zero(self, DEFAULT_ORDER if order is None else order)
        refl = _reflect(self)
        res = _inverse_at_zero(refl, DEFAULT_ORDER if order is None else -order)
        return _reflect(res)

    # ------------------------------------------------------------ calculus
    def dx(self) -> "SuperSeries":
        out = {}
        for k, v in self.t.items():
            if k:
                out[k - 1] = raw_scale(v, (FieldScalar(k).r))
        trunc = None if self.trunc is None else self.trunc - 1
        return self._new(out, trunc)

    def dphi(self, sign: int) -> "SuperSeries":
        """Left derivative with respect to phi+ (sign > 0) or phi-."""
        bit = self.bit_plus if sign > 0 else self.bit_minus
        below = bit - 1
        out = {}
        for k, v in self.t.items():
            nv = {}
            for m, c in v.items():
                if m & bit:
                    nv[m ^ bit] = t_neg(c) if popcount(m & below) & 1 else c
            if nv:
                out[k] = nv
        return self._new(out)

    def mul_phi(self, sign: int) -> "SuperSeries":
        """Left multiplication by phi+ (sign > 0) or phi-."""
        bit = self.bit_plus if sign > 0 else self.bit_minus
        below = bit - 1
        out = {}
        for k, v in self.t.items():
            nv = {}
            for m, c in v.items():
                if not m & bit:
                    nv[m | bit] = t_neg(c) if popcount(m & below) & 1 else c
            if nv:
                out[k] = nv
        return self._new(out)

    def D(self, sign: int) -> "SuperSeries":
        """D+- = d/dphi+- + phi-+ d/dx."""
        return self.dphi(sign) + self.dx().mul_phi(-sign)

    def x_free_of_phi(self) -> "SuperSeries":
        """Part of the series without any odd variable."""
        mask_phi = 3 << self.L
        return self._new({k: {m: c for m, c in v.items() if not m & mask_phi} for k, v in self.t.items()})

    # ------------------------------------------------------------ comparison
    def __eq__(self, other) -> bool:
        if not isinstance(other, SuperSeries):
            return NotImplemented
        if self.L != other.L or self.trunc != other.trunc:
            return False
        if self.trunc is not None and self.kind != other.kind:
            return False
        return self.t == other.t

    def __hash__(self) -> int:
        return hash((self.L, self.trunc, tuple(sorted((k, frozenset(v.items())) for k, v in self.t.items()))))

    def agrees(self, other: "SuperSeries", limit: int | None = None) -> bool:
        """Equality on the common exactly-known window (optionally cut at ``limit``)."""
        self._check(other)
        kind = self._join_kind(other)
        truncs = [s.trunc for s in (self, other) if s.trunc is not None]
        if limit is not None:
            truncs.append(limit)
        if truncs:
            bound = min(truncs) if kind == AT_ZERO else max(truncs)
        else:
            bound = None
        diff = (self - other).t
        for k in diff:
            if bound is None or (k <= bound if kind == AT_ZERO else k >= bound):
                return False
        return True

    def __repr__(self) -> str:
        parts = []
        for k, jp, jm, g in self.terms():
            mono = ("phi+" if jp else "") + ("phi-" if jm else "")
            parts.append(f"({g!r}){mono}x^{k}")
        tail = "" if self.trunc is None else (f" + O(x^{self.trunc + 1})" if self.kind == AT_ZERO
                                             else f" + O(x^{self.trunc - 1})")
        return (" + ".join(parts) or "0") + tail

    # --------------------------------------------------------- serialization
    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "window": list(self.window()),
            "terms": [{"k": k, "jp": jp, "jm": jm, "coef": g.to_json()} for k, jp, jm, g in self.terms()],
        }

    @classmethod
    def from_json(cls, data: Mapping, L: int = DEFAULT_GENERATORS) -> "SuperSeries":
        if not isinstance(data, dict) or data.get("kind") not in KINDS:
            raise ValueError("series needs a kind of at_zero or at_infinity")
        window = data.get("window", [None, None])
        if not isinstance(window, list) or len(window) != 2:
            raise ValueError("window must be a two-element list")
        kind = data["kind"]
        trunc = window[1] if kind == AT_ZERO else window[0]
        if trunc is not None and not isinstance(trunc, int):
            raise ValueError("window bounds must be integers or null")
        terms = {}
        for entry in data.get("terms", []):
            key = (int(entry["k"]), int(entry["jp"]), int(entry["jm"]))
            if key in terms:
                raise ValueError(f"duplicate term {key}")
            if not cls._known(key[0], kind, trunc):
                raise ValueError(f"term x^{key[0]} lies outside the declared window")
            terms[key] = GrassmannElement.from_json(entry["coef"], L)
        return cls.from_terms(L, kind, terms, trunc)


# ---------------------------------------------------------------------------
# window bookkeeping and inversion


def _reflect_terms(t: Mapping[int, dict]) -> dict:
    return {-k: v for k, v in t.items()}


def _reflect(s: SuperSeries) -> SuperSeries:
    """Relabel x^k -> x^-k, swapping kinds; commutes with products and inverses."""
    trunc = None if s.trunc is None else -s.trunc
    return SuperSeries(s.L, _flip(s.kind), _reflect_terms(s.t), trunc)


def _product_trunc(a: SuperSeries, b: SuperSeries, kind: str) -> int | None:
    cands = []
    if kind == AT_ZERO:
        if a.trunc is not None:
            cands.append(a.trunc + b.floor())
        if b.trunc is not None:
            cands.append(b.trunc + a.floor())
        if not cands:
            return None
        best = min(cands)
    else:
        if a.trunc is not None:
            cands.append(a.trunc + b.ceil())
        if b.trunc is not None:
            cands.append(b.trunc + a.ceil())
        if not cands:
            return None
        best = max(cands)
    if best in (math.inf, -math.inf):
        # a truncated zero times an exact zero: nothing is known beyond the trunc itself
        return a.trunc if a.trunc is not None else b.trunc
    return int(best)


def nilpotent_factor_bound(L: int, masks: Iterable[int]) -> int:
    """Upper bound on how many terms with these masks can have a nonzero product."""
    degs = [popcount(m) for m in masks]
    if not degs:
        return 0
    d = min(degs)
    if d == 0:
        raise ValueError("term with invertible body is not nilpotent")
    return (L + 2) // d


def _unit_keys(t: Mapping[int, dict]) -> list:
    """Keys whose coefficient has a nonzero pure body (phi-free, soul-free)."""
    return sorted(k for k, v in t.items() if 0 in v)


def _inverse_at_zero(s: SuperSeries, cap: int) -> SuperSeries:
    L, n = s.L, s.nvars
    units = _unit_keys(s.t)
    if not units:
        raise NonInvertible("series has no term with invertible body")
    v = units[0]
    phi_mask = 3 << L
    lead = GrassmannElement._raw(L, {m: c for m, c in s.t[v].items() if not m & phi_mask})
    lead_inv = lead.inverse()
    # s = lead * x^v * (1 + q)
    q_terms = {k - v: raw_mul(lead_inv.c, raw, n) for k, raw in s.t.items()}
    q_terms = {k: r for k, r in q_terms.items() if r}
    q0 = q_terms.get(0, {})
    raw_add_into(q0, {0: t_neg(ONE_T)})
    if q0:
        q_terms[0] = q0
    else:
        q_terms.pop(0, None)
    neg_q = {k: {m: t_neg(c) for m, c in r.items()} for k, r in q_terms.items()}

    low_masks = [m for k, r in q_terms.items() if k <= 0 for m in r]
    K = nilpotent_factor_bound(L, low_masks)
    m_low = min((k for k in q_terms if k <= 0), default=0)
    drop = K * m_low  # <= 0: how far nilpotent low terms can pull the unknown tail down

    terminating = s.trunc is None and not _unit_keys(q_terms)
    if s.trunc is not None:
        rel_trunc = s.trunc - v + drop
        rel_cap = min(rel_trunc, cap + v)
        out_trunc = rel_cap - v
    elif terminating:
        rel_cap = math.inf
        out_trunc = None
    else:
        rel_cap = cap + v
        out_trunc = cap
    work_cap = rel_cap - drop

    total: dict = {0: {0: ONE_T}}
    term: dict = {0: {0: ONE_T}}
    max_steps = None if work_cap == math.inf else int(work_cap) + K + 2 - K * min(m_low, 0) + 1
    steps = 0
    while True:
        steps += 1
        term = _conv(term, neg_q, n, work_cap)
        if not term:
            break
        total = _add_terms(total, term)
        if max_steps is not None and steps > max_steps:
            break
        if max_steps is None and steps > K + 2:
            raise AssertionError("nilpotent geometric series failed to terminate")
    result = {k - v: raw_mul(r, lead_inv.c, n) for k, r in total.items() if k <= rel_cap}
    return SuperSeries(L, s.kind, result, out_trunc)


# ---------------------------------------------------------------------------
# points and substitution


@dataclass(frozen=True)
class SuperPoint:
    """A coordinate triple (x~, phi~+, phi~-) of series."""

    x: SuperSeries
    p: SuperSeries
    m: SuperSeries

    def __iter__(self):
        return iter((self.x, self.p, self.m))

    @property
    def L(self) -> int:
        return self.x.L

    @classmethod
    def identity(cls, L: int = DEFAULT_GENERATORS, kind: str = AT_ZERO) -> "SuperPoint":
        return cls(SuperSeries.x(L, kind), SuperSeries.phi(1, L, kind), SuperSeries.phi(-1, L, kind))

    def map(self, fn) -> "SuperPoint":
        return SuperPoint(fn(self.x), fn(self.p), fn(self.m))

    def truncate(self, trunc: int | None) -> "SuperPoint":
        return self.map(lambda s: s.truncate(trunc))

    def agrees(self, other: "SuperPoint", limit: int | None = None) -> bool:
        return all(a.agrees(b, limit) for a, b in zip(self, other))

    def to_json(self) -> dict:
        return {"x": self.x.to_json(), "phip": self.p.to_json(), "phim": self.m.to_json()}

    @classmethod
    def from_json(cls, data: Mapping, L: int = DEFAULT_GENERATORS) -> "SuperPoint":
        if not isinstance(data, dict) or not {"x", "phip", "phim"} <= set(data):
            raise ValueError("a point needs x, phip and phim series")
        return cls(*(SuperSeries.from_json(data[key], L) for key in ("x", "phip", "phim")))


@dataclass(frozen=True)
class NumPoint:
    """A numeric point (z, theta+, theta-) with Grassmann entries."""

    z: GrassmannElement
    tp: GrassmannElement
    tm: GrassmannElement

    def __iter__(self):
        return iter((self.z, self.tp, self.tm))

    @classmethod
    def origin(cls, L: int = DEFAULT_GENERATORS) -> "NumPoint":
        zero = GrassmannElement.zero(L)
        return cls(zero, zero, zero)

    def to_json(self) -> list:
        return [self.z.to_json(), self.tp.to_json(), self.tm.to_json()]

    @classmethod
    def from_json(cls, data, L: int = DEFAULT_GENERATORS) -> "NumPoint":
        if not isinstance(data, list) or len(data) != 3:
            raise ValueError("a numeric point is a list of three Grassmann elements")
        return cls(*(GrassmannElement.from_json(d, L) for d in data))


def _smallness_direction(y: SuperSeries) -> str | None:
    """Direction in which every non-nilpotent term of ``y`` has positive order."""
    units = _unit_keys(y.t)
    if not units or min(units) >= 1:
        if y.trunc is None or y.kind == AT_ZERO:
            return AT_ZERO
    if not units or max(units) <= -1:
        if y.trunc is None or y.kind == AT_INFINITY:
            return AT_INFINITY
    return None


def _tail_floor(y: SuperSeries, n0: int, direction: str) -> float:
    """Lower bound (in ``direction`` orientation) on the order of y^n for every n >= n0."""
    t = y.t if direction == AT_ZERO else _reflect_terms(y.t)
    units = _unit_keys(t)
    all_keys = list(t)
    if not all_keys:
        return math.inf
    p = min(units) if units else math.inf
    p = min(p, min((k for k in all_keys if k >= 1), default=math.inf))
    low_masks = [m for k, r in t.items() if k < 1 for m in r]
    K = nilpotent_factor_bound(y.L, low_masks)
    m_low = min((k for k in all_keys if k < 1), default=p)
    if y.trunc is not None:
        y_floor = y.trunc + 1 if direction == AT_ZERO else -y.trunc + 1
        p = min(p, y_floor)
    best = math.inf
    for n in range(n0, n0 + K + 1):
        for j in range(0, min(n, K) + 1):
            val = (n - j) * p + j * m_low if p != math.inf or n == j else math.inf
            best = min(best, val)
    return best


def ss_compose(outer: SuperPoint, inner: SuperPoint, order: int | None = None) -> SuperPoint:
    """Substitute ``inner`` into ``outer`` (i.e. outer(inner(x, phi)))."""
    X, Pp, Pm = inner
    L = X.L
    if outer.L != L:
        raise GeneratorCountMismatch(f"L={outer.L} vs L={L}")
    ones = SuperSeries.constant(GrassmannElement.one(L), kind=X.kind)
    phis = {(0, 0): ones, (1, 0): Pp, (0, 1): Pm, (1, 1): Pp.mul(Pm)}
    powers: dict = {0: ones}
    inv_cache: list = []

    def xpow(k: int) -> SuperSeries:
        if k in powers:
            return powers[k]
        if k > 0:
            powers[k] = xpow(k - 1).mul(X)
        else:
            if not inv_cache:
                inv_cache.append(X.inverse(order))
            powers[k] = xpow(k + 1).mul(inv_cache[0])
        return powers[k]

    out = []
    for comp in outer:
        out.append(_substitute(comp, X, phis, xpow, inv_cache, order))
    return SuperPoint(*out)


def _substitute(s: SuperSeries, X: SuperSeries, phis: dict, xpow, inv_cache: list, order) -> SuperSeries:
    L = s.L
    tail_trunc = None
    result_kind = None
    if s.trunc is not None:
        if s.kind == AT_ZERO:
            y = X
            n0 = s.trunc + 1
        else:
            if not inv_cache:
                inv_cache.append(X.inverse(order))
            y = inv_cache[0]
            n0 = -s.trunc + 1
        direction = _smallness_direction(y)
        if direction is None:
            raise SubstitutionDiverges(
                "substituted even variable is not small in either direction; factor out a shift first")
        result_kind = direction
        y_floor = _tail_floor(y, n0, direction)
        phi_floor = min(
            (ph.floor() if direction == AT_ZERO else -ph.ceil()) for ph in phis.values() if not ph.is_zero())
        bound = y_floor + phi_floor - 1
        if bound != math.inf:
            tail_trunc = int(bound) if direction == AT_ZERO else -int(bound)
    acc = None
    mask_phi = 3 << L
    for k in sorted(s.t):
        raw = s.t[k]
        groups: dict = {}
        for m, c in raw.items():
            key = ((m >> L) & 1, (m >> (L + 1)) & 1)
            groups.setdefault(key, {})[m & ~mask_phi] = c
        ck = None
        for key, coef in groups.items():
            piece = phis[key].scale_left(GrassmannElement._raw(L, coef))
            ck = piece if ck is None else ck + piece
        term = ck.mul(xpow(k))
        acc = term if acc is None else acc + term
    if acc is None:
        kind = result_kind or X.kind
        acc = SuperSeries.zero(L, kind, None)
    if result_kind is not None:
        if acc.trunc is not None and acc.kind != result_kind:
            raise SubstitutionDiverges("truncation directions of outer and inner series conflict")
        if acc.trunc is None:
            acc = SuperSeries(L, result_kind, acc.t, tail_trunc)
        else:
            acc = acc.truncate(tail_trunc)
    return acc


# ---------------------------------------------------------------------------
# the inversion map and shifts


def inversion_point(L: int = DEFAULT_GENERATORS, inverse: bool = False) -> SuperPoint:
    """I = (1/x, i phi+/x, i phi-/x); with ``inverse`` the map I^-1 = (1/x, -i phi+/x, -i phi-/x)."""
    unit = GrassmannElement.scalar(-FIELD_I if inverse else FIELD_I, L)
    return SuperPoint(
        SuperSeries.monomial(-1, L=L, kind=AT_INFINITY),
        SuperSeries.monomial(-1, 1, 0, unit, kind=AT_INFINITY),
        SuperSeries.monomial(-1, 0, 1, unit, kind=AT_INFINITY),
    )


def ss_inversion_I(p, inverse: bool = False, order: int | None = None):
    """Apply I (or I^-1) to a series triple or a numeric point."""
    unit = -FIELD_I if inverse else FIELD_I
    if isinstance(p, NumPoint):
        w_inv = p.z.inverse()
        return NumPoint(w_inv, p.tp * w_inv * unit, p.tm * w_inv * unit)
    return ss_compose(inversion_point(p.L, inverse), p, order)


def shift_point(z: GrassmannElement, tp: GrassmannElement, tm: GrassmannElement) -> SuperPoint:
    """s(w, rho+, rho-) = (w - z - rho+ theta- - rho- theta+, rho+ - theta+, rho- - theta-)."""
    L = z.L
    x = SuperSeries.x(L) - SuperSeries.constant(z)
    # -phi+ theta- = +theta- phi+ in the coefficient-left normal form
    x = x + SuperSeries.monomial(0, 1, 0, tm, L) + SuperSeries.monomial(0, 0, 1, tp, L)
    p = SuperSeries.phi(1, L) - SuperSeries.constant(tp)
    m = SuperSeries.phi(-1, L) - SuperSeries.constant(tm)
    return SuperPoint(x, p, m)


def evaluate_point(H: SuperPoint, point: NumPoint) -> NumPoint:
    """Evaluate an exact (Laurent-polynomial) triple at a numeric point."""
    inner = SuperPoint(SuperSeries.constant(point.z), SuperSeries.constant(point.tp), SuperSeries.constant(point.tm))
    res = ss_compose(H, inner)
    vals = []
    for s in res:
        if any(k != 0 for k in s.t):
            raise ValueError("evaluation left a nonconstant series")
        vals.append(s.coef(0))
    return NumPoint(*vals)
