"""Ground-truth causal nonlinear systems used as desk-scale oracles.

All kinds share the odd-order basis ``x * |x|**(k-1)``, k = 1, 3, ..., K:

- ``MemorylessPoly``:   y[n] = P(x[n])
- ``MemoryPolynomial``: y[n] = sum_q P_q(x[n-q])   (independent polynomial per tap)
- ``Hammerstein``:      y[n] = sum_q b_q P(x[n-q]) (static block, then FIR)
- ``Wiener``:           y[n] = P(sum_q b_q x[n-q]) (FIR, then static block)

Samples before n = 0 are taken as zero.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import BadOrder, NonFiniteOutput, NotSeparable, SampleOutOfRange
from .signals import SampledSignal, as_signal

__all__ = [
    "SystemKind",
    "SystemSpec",
    "TAP_DECAY",
    "odd_basis",
    "eval_odd_poly",
    "make_memory_polynomial",
    "make_memoryless",
    "make_hammerstein",
    "make_wiener",
    "make_system",
    "simulate",
    "true_static_part",
]

TAP_DECAY = 0.5
MAX_INPUT_MAGNITUDE = 10.0


class SystemKind(str, enum.Enum):
    MEMORYLESS_POLY = "MemorylessPoly"
    HAMMERSTEIN = "Hammerstein"
    WIENER = "Wiener"
    MEMORY_POLYNOMIAL = "MemoryPolynomial"

    @classmethod
    def _missing_(cls, value):
        # accept CLI spellings such as "memory-poly" or "wiener"
        key = str(value).lower().replace("-", "").replace("_", "")
        aliases = {"memoryless": cls.MEMORYLESS_POLY, "memorylesspoly": cls.MEMORYLESS_POLY,
                   "static": cls.MEMORYLESS_POLY, "hammerstein": cls.HAMMERSTEIN,
                   "wiener": cls.WIENER, "memorypoly": cls.MEMORY_POLYNOMIAL,
                   "memorypolynomial": cls.MEMORY_POLYNOMIAL, "mp": cls.MEMORY_POLYNOMIAL}
        return aliases.get(key)


def odd_basis(x, order):
    """Columns x*|x|^(k-1) for k = 1, 3, ..., order."""
    x = np.asarray(x, dtype=np.complex128)
    mag2 = x.real**2 + x.imag**2
    cols = [x]
    for _ in range(1, (order + 1) // 2):
        cols.append(cols[-1] * mag2)
    return np.stack(cols, axis=1)


def eval_odd_poly(coefficients, x):
    """Horner-style evaluation of sum_j c_j x |x|^(2j)."""
    x = np.asarray(x, dtype=np.complex128)
    mag2 = x.real**2 + x.imag**2
    acc = np.zeros_like(x)
    for c in np.asarray(coefficients, dtype=np.complex128)[::-1]:
        acc = acc * mag2 + c
    return acc * x


def _delay(s, q):
    if q == 0:
        return s
    out = np.zeros_like(s)
    out[q:] = s[:-q] if q < s.size else 0
    return out


@dataclass(frozen=True, eq=False)
class SystemSpec:
    """Parametric description of a synthetic system.

    ``coefficients`` has shape ``(n_terms, memory_depth + 1)`` for the memory
    polynomial (row j multiplies ``x|x|^(2j)``, column q is the tap) and shape
    ``(n_terms, 1)`` for the other kinds, whose memory lives in ``fir_taps``.
    """

    kind: SystemKind
    nl_order: int
    memory_depth: int
    coefficients: np.ndarray
    fir_taps: np.ndarray
    seed: Optional[int] = None
    dynamic_strength: float = 0.0

    def __post_init__(self):
        kind = SystemKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if self.nl_order < 1 or self.nl_order % 2 == 0:
            raise BadOrder(f"nl_order must be odd and >= 1, got {self.nl_order}")
        if self.memory_depth < 0:
            raise ValueError("memory_depth must be >= 0")
        if (kind is SystemKind.MEMORYLESS_POLY) != (self.memory_depth == 0):
            raise ValueError("MemorylessPoly systems are exactly those with memory_depth = 0")
        n_terms = (self.nl_order + 1) // 2
        c = np.array(self.coefficients, dtype=np.complex128)
        if c.ndim == 1:
            c = c[:, None]
        taps = np.array(self.fir_taps, dtype=np.complex128).reshape(-1)
        if kind is SystemKind.MEMORY_POLYNOMIAL:
            expected = (n_terms, self.memory_depth + 1)
            if taps.size != 1:
                raise ValueError("memory polynomial keeps its memory in the coefficient table")
        else:
            expected = (n_terms, 1)
            if taps.size != self.memory_depth + 1:
                raise ValueError(f"expected {self.memory_depth + 1} FIR taps, got {taps.size}")
        if c.shape != expected:
            raise ValueError(f"coefficient table has shape {c.shape}, expected {expected}")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(taps))):
            raise ValueError("non-finite coefficients")
        c.setflags(write=False)
        taps.setflags(write=False)
        object.__setattr__(self, "coefficients", c)
        object.__setattr__(self, "fir_taps", taps)

    @classmethod
    def memoryless(cls, coefficients, seed=None):
        """Memoryless polynomial from per-odd-order coefficients [c1, c3, ...]."""
        c = np.asarray(coefficients, dtype=np.complex128).reshape(-1)
        return cls(SystemKind.MEMORYLESS_POLY, 2 * c.size - 1, 0, c[:, None], [1.0], seed)

    @classmethod
    def identity(cls):
        return cls.memoryless([1.0])

    @property
    def static_coefficients(self):
        """Coefficients of the q = 0 polynomial, i.e. the exact static part."""
        if self.kind is SystemKind.WIENER:
            raise NotSeparable("the static part of a Wiener system is not separable")
        if self.kind is SystemKind.HAMMERSTEIN:
            return self.coefficients[:, 0] * self.fir_taps[0]
        return self.coefficients[:, 0].copy()

    def to_dict(self):
        pairs = lambda a: [[float(v.real), float(v.imag)] for v in np.asarray(a).reshape(-1)]
        return {
            "kind": self.kind.value,
            "nl_order": int(self.nl_order),
            "memory_depth": int(self.memory_depth),
            "coefficient_shape": list(self.coefficients.shape),
            "coefficients": pairs(self.coefficients),
            "fir_taps": pairs(self.fir_taps),
            "seed": self.seed,
            "dynamic_strength": float(self.dynamic_strength),
            "oracle_class": "memory-polynomial",
        }

    @classmethod
    def from_dict(cls, d):
        shape = tuple(d["coefficient_shape"])
        unpair = lambda p: np.array([complex(a, b) for a, b in p], dtype=np.complex128)
        return cls(
            SystemKind(d["kind"]),
            int(d["nl_order"]),
            int(d["memory_depth"]),
            unpair(d["coefficients"]).reshape(shape),
            unpair(d["fir_taps"]),
            d.get("seed"),
            float(d.get("dynamic_strength", 0.0)),
        )

    def to_json(self, indent=2):
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


# --- constructors -----------------------------------------------------------


def _check_order(nl_order):
    if int(nl_order) != nl_order or nl_order < 1 or nl_order % 2 == 0:
        raise BadOrder(f"nl_order must be an odd integer >= 1, got {nl_order}")


def _static_poly(rng, nl_order):
    """Compressive odd polynomial: c1 = 1, |c_k| ~ 10^-j with alternating sign."""
    n_terms = (nl_order + 1) // 2
    c = np.zeros(n_terms, dtype=np.complex128)
    c[0] = 1.0
    for j in range(1, n_terms):
        mag = rng.uniform(0.5, 1.0) * 10.0 ** (-j)
        phase = rng.uniform(-0.5, 0.5)
        c[j] = (-1) ** j * mag * np.exp(1j * phase)
    return c


def _unit_phasors(rng, size):
    return rng.uniform(0.5, 1.0, size) * np.exp(1j * rng.uniform(-np.pi, np.pi, size))


def _memory_taps(rng, memory_depth, dynamic_strength):
    taps = np.zeros(memory_depth + 1, dtype=np.complex128)
    taps[0] = 1.0
    if memory_depth:
        q = np.arange(1, memory_depth + 1)
        taps[1:] = dynamic_strength * TAP_DECAY**q * _unit_phasors(rng, memory_depth)
    return taps


def make_memoryless(seed, nl_order):
    _check_order(nl_order)
    rng = np.random.default_rng(seed)
    return SystemSpec(SystemKind.MEMORYLESS_POLY, nl_order, 0, _static_poly(rng, nl_order)[:, None],
                      [1.0], seed, 0.0)


def make_memory_polynomial(seed, nl_order, memory_depth, dynamic_strength):
    """Memory polynomial whose tap-0 polynomial dominates.

    Tap q >= 1 coefficients are ``dynamic_strength * 0.5**q * |c_k scale| * z``
    with z a random phasor of modulus in [0.5, 1]; the linear tap-0
    coefficient is fixed to 1.
    """
    _check_order(nl_order)
    if not (0.0 <= dynamic_strength <= 1.0):
        raise ValueError(f"dynamic_strength must lie in [0, 1], got {dynamic_strength}")
    if memory_depth == 0:
        spec = make_memoryless(seed, nl_order)
        return SystemSpec(spec.kind, nl_order, 0, spec.coefficients, [1.0], seed, dynamic_strength)
    rng = np.random.default_rng(seed)
    n_terms = (nl_order + 1) // 2
    c = np.zeros((n_terms, memory_depth + 1), dtype=np.complex128)
    c[:, 0] = _static_poly(rng, nl_order)
    scale = 10.0 ** (-np.arange(n_terms, dtype=np.float64))
    q = np.arange(1, memory_depth + 1)
    z = _unit_phasors(rng, (n_terms, memory_depth))
    c[:, 1:] = dynamic_strength * scale[:, None] * TAP_DECAY ** q[None, :] * z
    return SystemSpec(SystemKind.MEMORY_POLYNOMIAL, nl_order, memory_depth, c, [1.0], seed,
                      dynamic_strength)


def make_hammerstein(seed, nl_order, memory_depth, dynamic_strength):
    _check_order(nl_order)
    if memory_depth == 0:
        return make_memory_polynomial(seed, nl_order, 0, dynamic_strength)
    rng = np.random.default_rng(seed)
    c = _static_poly(rng, nl_order)
    taps = _memory_taps(rng, memory_depth, dynamic_strength)
    return SystemSpec(SystemKind.HAMMERSTEIN, nl_order, memory_depth, c[:, None], taps, seed,
                      dynamic_strength)


def make_wiener(seed, nl_order, memory_depth, dynamic_strength):
    _check_order(nl_order)
    if memory_depth == 0:
        return make_memory_polynomial(seed, nl_order, 0, dynamic_strength)
    rng = np.random.default_rng(seed)
    c = _static_poly(rng, nl_order)
    taps = _memory_taps(rng, memory_depth, dynamic_strength)
    return SystemSpec(SystemKind.WIENER, nl_order, memory_depth, c[:, None], taps, seed,
                      dynamic_strength)


_MAKERS = {
    SystemKind.MEMORYLESS_POLY: lambda seed, k, q, s: make_memoryless(seed, k),
    SystemKind.MEMORY_POLYNOMIAL: make_memory_polynomial,
    SystemKind.HAMMERSTEIN: make_hammerstein,
    SystemKind.WIENER: make_wiener,
}


def make_system(kind, seed, nl_order=5, memory_depth=3, dynamic_strength=0.3):
    return _MAKERS[SystemKind(kind)](seed, nl_order, memory_depth, dynamic_strength)


# --- evaluation -------------------------------------------------------------


def _check_input(xs):
    if np.max(np.abs(xs), initial=0.0) > MAX_INPUT_MAGNITUDE:
        raise SampleOutOfRange(f"input magnitude exceeds {MAX_INPUT_MAGNITUDE}")


def _finish(x, ys):
    if not np.all(np.isfinite(ys)):
        raise NonFiniteOutput("simulation produced non-finite samples; reject this spec")
    return x.replace(ys)


def simulate(spec: SystemSpec, x) -> SampledSignal:
    x = as_signal(x)
    xs = x.samples
    _check_input(xs)
    with np.errstate(over="ignore", invalid="ignore"):
        if spec.kind is SystemKind.MEMORY_POLYNOMIAL:
            ys = np.zeros_like(xs)
            for q in range(spec.memory_depth + 1):
                ys += _delay(eval_odd_poly(spec.coefficients[:, q], xs), q)
        elif spec.kind is SystemKind.HAMMERSTEIN:
            p = eval_odd_poly(spec.coefficients[:, 0], xs)
            ys = np.zeros_like(xs)
            for q, b in enumerate(spec.fir_taps):
                ys += b * _delay(p, q)
        elif spec.kind is SystemKind.WIENER:
            v = np.zeros_like(xs)
            for q, b in enumerate(spec.fir_taps):
                v += b * _delay(xs, q)
            ys = eval_odd_poly(spec.coefficients[:, 0], v)
        else:
            ys = eval_odd_poly(spec.coefficients[:, 0], xs)
    return _finish(x, ys)


def true_static_part(spec: SystemSpec, x) -> SampledSignal:
    """Evaluate only the q = 0 terms of the spec (ground-truth G)."""
    x = as_signal(x)
    _check_input(x.samples)
    c = spec.static_coefficients
    with np.errstate(over="ignore", invalid="ignore"):
        return _finish(x, eval_odd_poly(c, x.samples))
