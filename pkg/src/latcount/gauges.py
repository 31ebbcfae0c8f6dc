"""Size functionals |g| defining the domain families, with scale conventions,
symmetry metadata, and entry-bound oracles for pruned enumeration.

Supported kinds:
  rnorm(r)          entrywise r-norm (Sigma |a_ij|^r)^(1/r), r in [1, inf]; T-scale
  hyperbolic        d(i, g.i) in the curvature -1 upper half-plane; t-scale
  rep_form(f0)      coefficient norm of the substituted binary form; T-scale
  height(p)         S-arithmetic height ||A||_F * |g|_p; T-scale
  weighted_product  L^p combination of component gauges (product groups)

Thresholds are compared exactly wherever the underlying quantity is an integer
or rational (squared norms, form norms), so enumeration never depends on
floating-point rounding at the boundary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from .errors import SpecError
from .groups import GroupElement

__all__ = [
    "BinaryForm",
    "Gauge",
    "rnorm_gauge",
    "hyperbolic_gauge",
    "rep_form_gauge",
    "height_gauge",
    "weighted_product_gauge",
    "parse_gauge",
    "gauge_eval",
    "gauge_leq",
    "gauge_eval_real",
    "mobius_distance",
    "mobius_distance_direct",
    "forms_substitute",
    "form_norm_sq",
    "unit_circle_min",
    "entry_bound",
]


# ---------------------------------------------------------------------------
# binary forms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BinaryForm:
    """Homogeneous binary form sum_i a_i x^(n-i) y^i with exact integer coefficients."""

    degree: int
    coeffs: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.degree < 1:
            raise SpecError(f"form degree must be >= 1, got {self.degree}")
        if len(self.coeffs) != self.degree + 1:
            raise SpecError(
                f"degree {self.degree} form needs {self.degree + 1} coefficients, "
                f"got {len(self.coeffs)}")
        if all(c == 0 for c in self.coeffs):
            raise SpecError("the zero form is not a valid gauge datum")

    def evaluate(self, x: float, y: float) -> float:
        n = self.degree
        return sum(c * x ** (n - i) * y ** i for i, c in enumerate(self.coeffs))

    def is_definite(self) -> bool:
        """True iff f(x, y) != 0 for all real (x, y) != 0 (exact Sturm test)."""
        if self.degree % 2 == 1:
            return False
        if self.coeffs[0] == 0:
            return False  # (1, 0) is a root
        poly = [Fraction(c) for c in reversed(self.coeffs)]  # f(x, 1), ascending powers
        return _real_root_count(poly) == 0


def _poly_trim(p: list[Fraction]) -> list[Fraction]:
    while p and p[-1] == 0:
        p.pop()
    return p


def _poly_deriv(p: list[Fraction]) -> list[Fraction]:
    return [i * c for i, c in enumerate(p)][1:]


def _poly_rem(a: list[Fraction], b: list[Fraction]) -> list[Fraction]:
    a = a[:]
    while len(a) >= len(b) and a:
        coef = a[-1] / b[-1]
        shift = len(a) - len(b)
        for i, c in enumerate(b):
            a[i + shift] -= coef * c
        _poly_trim(a)
    return a


def _real_root_count(poly: list[Fraction]) -> int:
    """Number of distinct real roots via the Sturm chain, evaluated at +-infinity."""
    p = _poly_trim(poly[:])
    if len(p) <= 1:
        return 0
    chain = [p, _poly_trim(_poly_deriv(p))]
    while chain[-1]:
        rem = _poly_rem(chain[-2], chain[-1])
        if not rem:
            break
        chain.append([-c for c in rem])
    def variations(at_plus_inf: bool) -> int:
        signs = []
        for q in chain:
            if not q:
                continue
            lead = q[-1]
            s = 1 if lead > 0 else -1
            if not at_plus_inf and (len(q) - 1) % 2 == 1:
                s = -s
            signs.append(s)
        return sum(1 for a, b in zip(signs, signs[1:]) if a != b)
    return variations(False) - variations(True)


def form_norm_sq(f: BinaryForm) -> Fraction:
    """Exact squared coefficient norm sum_i binom(n,i)^{-1} a_i^2."""
    n = f.degree
    return sum(Fraction(c * c, math.comb(n, i)) for i, c in enumerate(f.coeffs))


_MU_CACHE: dict[tuple[int, tuple[int, ...]], float] = {}


def unit_circle_min(f: BinaryForm, samples: int = 10_000) -> float:
    """min |f(cos t, sin t)| over the unit circle, by dense sampling + golden refinement."""
    key = (f.degree, f.coeffs)
    if key in _MU_CACHE:
        return _MU_CACHE[key]
    # |f| on the circle has period pi (antipodal points differ only in sign)
    def g(theta: float) -> float:
        return abs(f.evaluate(math.cos(theta), math.sin(theta)))
    step = math.pi / samples
    best_i = min(range(samples), key=lambda i: g(i * step))
    lo, hi = (best_i - 1) * step, (best_i + 1) * step
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - inv_phi * (b - a), a + inv_phi * (b - a)
    gc, gd = g(c), g(d)
    for _ in range(120):
        if gc < gd:
            b, d, gd = d, c, gc
            c = b - inv_phi * (b - a)
            gc = g(c)
        else:
            a, c, gc = c, d, gd
            d = a + inv_phi * (b - a)
            gd = g(d)
    mu = g((a + b) / 2.0)
    _MU_CACHE[key] = mu
    return mu


def forms_substitute(f: BinaryForm, g: GroupElement) -> BinaryForm:
    """Exact coefficients of the substituted form f(g11*x + g12*y, g21*x + g22*y).

    This is the right action used for integral equivalence: composing two
    substitutions equals substituting by the product.
    """
    if g.n != 2 or g.p_power != 0:
        raise SpecError("forms_substitute needs an integral 2x2 element")
    (a, b), (c, d) = g.entries
    n = f.degree
    out = [0] * (n + 1)
    for i, coef in enumerate(f.coeffs):
        if coef == 0:
            continue
        term = _homog_mul(_binpow(a, b, n - i), _binpow(c, d, i))
        for j, t in enumerate(term):
            out[j] += coef * t
    return BinaryForm(n, tuple(out))


def _binpow(alpha: int, beta: int, m: int) -> list[int]:
    """Coefficients of (alpha*x + beta*y)^m in the basis x^(m-j) y^j."""
    return [math.comb(m, j) * alpha ** (m - j) * beta ** j for j in range(m + 1)]


def _homog_mul(p: list[int], q: list[int]) -> list[int]:
    out = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a == 0:
            continue
        for j, b in enumerate(q):
            out[i + j] += a * b
    return out


# ---------------------------------------------------------------------------
# gauges
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Gauge:
    """A size functional with scale convention and enumeration metadata.

    scale is "T" for raw thresholds (t = log T at the reporting layer) and "t"
    for gauges natively logarithmic (hyperbolic distance).  symmetric declares
    |g^{-1}| = |g| in the gauge's supported pairing (see is_symmetric for the
    dimension-aware statement).
    """

    kind: str
    r: float | None = None
    form: BinaryForm | None = None
    prime: int | None = None
    components: tuple["Gauge", ...] = ()
    weights: tuple[float, ...] = ()
    exponent: float | None = None
    scale: str = "T"
    symmetric: bool = True
    bi_K_invariant: bool = False

    def describe(self) -> str:
        if self.kind == "rnorm":
            r = "inf" if math.isinf(self.r) else ("%g" % self.r)
            return f"rnorm:{r}"
        if self.kind == "hyperbolic":
            return "hyperbolic"
        if self.kind == "rep_form":
            coeffs = ",".join(str(c) for c in self.form.coeffs)
            return f"form:deg={self.form.degree}:coeffs={coeffs}"
        if self.kind == "height":
            return f"height:p={self.prime}"
        return self.kind

    def is_symmetric(self, n: int) -> bool:
        """Whether |g^{-1}| = |g| holds for dimension n."""
        if self.kind == "rnorm":
            return n == 2  # the 2x2 adjugate permutes entries up to sign
        if self.kind in ("hyperbolic", "height"):
            return n == 2
        if self.kind == "weighted_product":
            return all(c.is_symmetric(n) for c in self.components)
        return False

    def identity_value(self, n: int = 2) -> float:
        if self.kind == "rnorm":
            return 1.0 if math.isinf(self.r) else n ** (1.0 / self.r)
        if self.kind == "hyperbolic":
            return 0.0
        if self.kind == "rep_form":
            return math.sqrt(float(form_norm_sq(self.form)))
        if self.kind == "height":
            return math.sqrt(n)
        if self.kind == "weighted_product":
            vals = [c.identity_value(n) for c in self.components]
            return sum(w * v ** self.exponent for w, v in zip(self.weights, vals)) ** (1.0 / self.exponent)
        raise SpecError(f"unknown gauge kind {self.kind!r}")

    def dt_dlogT(self) -> float:
        """Asymptotic derivative of the native t-parameter w.r.t. log T.

        T-scale gauges use t = log T directly; the hyperbolic gauge satisfies
        t = arccosh(T^2/2) ~ 2 log T against the Frobenius threshold T.
        """
        return 2.0 if self.kind == "hyperbolic" else 1.0

    def threshold_to_t(self, threshold: float) -> float:
        """Native-t value of a threshold in the gauge's declared scale."""
        if self.scale == "t":
            return threshold
        if threshold <= 0:
            raise SpecError(f"T-scale threshold must be positive, got {threshold}")
        return math.log(threshold)

    def cartan_radius(self, threshold: float) -> float:
        """Hyperbolic radius of the sublevel set (bi-K-invariant, SL(2) rule).

        The Frobenius ball |g| <= T meets the Cartan ray at arccosh(T^2/2);
        the hyperbolic gauge is already the radius.
        """
        if not self.bi_K_invariant:
            raise SpecError("Cartan radius needs a bi-K-invariant gauge")
        if self.kind == "hyperbolic":
            return float(threshold)
        T = float(threshold)
        if T * T <= 2.0:
            return 0.0
        return math.acosh(T * T / 2.0)


def rnorm_gauge(r: float) -> Gauge:
    if not (r >= 1):
        raise SpecError(f"rnorm needs r >= 1, got {r}")
    return Gauge(kind="rnorm", r=float(r), scale="T", symmetric=True,
                 bi_K_invariant=(r == 2))


def hyperbolic_gauge() -> Gauge:
    return Gauge(kind="hyperbolic", scale="t", symmetric=True, bi_K_invariant=True)


def rep_form_gauge(form: BinaryForm) -> Gauge:
    if not form.is_definite():
        raise SpecError("rep_form gauge needs a definite form (no real zero)")
    return Gauge(kind="rep_form", form=form, scale="T", symmetric=False,
                 bi_K_invariant=False)


def height_gauge(p: int) -> Gauge:
    if p < 2 or any(p % d == 0 for d in range(2, math.isqrt(p) + 1)):
        raise SpecError(f"height gauge needs a prime, got {p}")
    return Gauge(kind="height", prime=p, scale="T", symmetric=True,
                 bi_K_invariant=False)


def weighted_product_gauge(components: Sequence[Gauge], weights: Sequence[float],
                           exponent: float = 1.0) -> Gauge:
    if len(components) != len(weights) or not components:
        raise SpecError("weighted_product needs matching nonempty components and weights")
    if exponent < 1:
        raise SpecError(f"weighted_product exponent must be >= 1, got {exponent}")
    return Gauge(kind="weighted_product", components=tuple(components),
                 weights=tuple(float(w) for w in weights), exponent=float(exponent),
                 scale=components[0].scale,
                 symmetric=all(c.symmetric for c in components), bi_K_invariant=False)


def parse_gauge(spec: str) -> Gauge:
    """Parse a CLI gauge string: rnorm:2, rnorm:inf, hyperbolic,
    form:deg=4:coeffs=1,0,0,0,1, height:p=2."""
    parts = spec.strip().split(":")
    try:
        if parts[0] == "rnorm" and len(parts) == 2:
            r = math.inf if parts[1] == "inf" else float(parts[1])
            return rnorm_gauge(r)
        if parts[0] == "hyperbolic" and len(parts) == 1:
            return hyperbolic_gauge()
        if parts[0] == "form" and len(parts) == 3:
            kv = dict(p.split("=", 1) for p in parts[1:])
            deg = int(kv["deg"])
            coeffs = tuple(int(c) for c in kv["coeffs"].split(","))
            return rep_form_gauge(BinaryForm(deg, coeffs))
        if parts[0] == "height" and len(parts) == 2 and parts[1].startswith("p="):
            return height_gauge(int(parts[1][2:]))
    except (KeyError, ValueError) as exc:
        raise SpecError(f"malformed gauge spec {spec!r}") from exc
    raise SpecError(f"unknown gauge spec {spec!r}")


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def gauge_eval(gauge: Gauge, g: GroupElement) -> float:
    """Gauge value of a group element, as a float (exact internals where possible)."""
    if gauge.kind == "rnorm":
        flat = g.entries_flat()
        denom = float(g.prime) ** g.p_power if g.p_power else 1.0
        r = gauge.r
        if math.isinf(r):
            return max(abs(e) for e in flat) / denom
        if r == 2:
            return math.sqrt(float(g.frobenius_sq()))
        if r == 1:
            return sum(abs(e) for e in flat) / denom
        return sum((abs(e) / denom) ** r for e in flat) ** (1.0 / r)
    if gauge.kind == "hyperbolic":
        _require_integral_2x2(g, "hyperbolic gauge")
        return math.acosh(max(1.0, float(g.frobenius_sq()) / 2.0))
    if gauge.kind == "rep_form":
        _require_integral_2x2(g, "rep_form gauge")
        return math.sqrt(float(form_norm_sq(forms_substitute(gauge.form, g))))
    if gauge.kind == "height":
        if g.n != 2:
            raise SpecError("height gauge is implemented for n = 2")
        if g.p_power > 0 and gauge.prime != g.prime:
            raise SpecError(f"height prime {gauge.prime} != element prime {g.prime}")
        # H(g) = ||g||_F * |g|_p = ||A||_F for the canonical representation p^{-k} A
        return math.sqrt(float(sum(e * e for e in g.entries_flat())))
    if gauge.kind == "weighted_product":
        raise SpecError("weighted_product gauges evaluate on tuples of factor "
                        "elements; use gauge_eval_product")
    raise SpecError(f"unknown gauge kind {gauge.kind!r}")


def gauge_eval_product(gauge: Gauge, gs: Sequence[GroupElement]) -> float:
    if gauge.kind != "weighted_product":
        raise SpecError("gauge_eval_product needs a weighted_product gauge")
    if len(gs) != len(gauge.components):
        raise SpecError("component count mismatch")
    p = gauge.exponent
    total = sum(w * gauge_eval(c, g) ** p
                for w, c, g in zip(gauge.weights, gauge.components, gs))
    return total ** (1.0 / p)


def gauge_leq(gauge: Gauge, g: GroupElement, threshold: float) -> bool:
    """Exact closed-sublevel test gauge(g) <= threshold (rational comparisons)."""
    if gauge.kind == "rnorm":
        flat = g.entries_flat()
        if g.p_power:
            thr = Fraction(threshold) * g.prime ** g.p_power
        else:
            thr = Fraction(threshold)
        r = gauge.r
        if math.isinf(r):
            return max(abs(e) for e in flat) <= thr
        if r == 1:
            return sum(abs(e) for e in flat) <= thr
        if r == int(r):
            ri = int(r)
            return sum(abs(e) ** ri for e in flat) <= thr ** ri
        return gauge_eval(gauge, g) <= threshold
    if gauge.kind == "hyperbolic":
        _require_integral_2x2(g, "hyperbolic gauge")
        if threshold < 0:
            return False
        return sum(e * e for e in g.entries_flat()) <= 2.0 * math.cosh(threshold)
    if gauge.kind == "rep_form":
        _require_integral_2x2(g, "rep_form gauge")
        return form_norm_sq(forms_substitute(gauge.form, g)) <= Fraction(threshold) ** 2
    if gauge.kind == "height":
        return sum(e * e for e in g.entries_flat()) <= Fraction(threshold) ** 2
    return gauge_eval(gauge, g) <= threshold


def gauge_eval_real(gauge: Gauge, mat: Sequence[Sequence[float]]) -> float:
    """Gauge value of a real 2x2 matrix (used by admissibility sampling)."""
    flat = [mat[0][0], mat[0][1], mat[1][0], mat[1][1]]
    if gauge.kind == "rnorm":
        r = gauge.r
        if math.isinf(r):
            return max(abs(e) for e in flat)
        return sum(abs(e) ** r for e in flat) ** (1.0 / r)
    if gauge.kind == "hyperbolic":
        return math.acosh(max(1.0, sum(e * e for e in flat) / 2.0))
    raise SpecError(f"real-matrix evaluation unsupported for gauge {gauge.kind!r}")


def _require_integral_2x2(g: GroupElement, what: str) -> None:
    if g.n != 2 or g.p_power != 0:
        raise SpecError(f"{what} needs an integral 2x2 element, got n={g.n}, k={g.p_power}")


# ---------------------------------------------------------------------------
# hyperbolic distance, two routes
# ---------------------------------------------------------------------------

def mobius_distance(g: GroupElement) -> float:
    """d(i, g.i) in curvature -1 via the identity cosh d = ||g||_F^2 / 2."""
    _require_integral_2x2(g, "mobius_distance")
    return math.acosh(max(1.0, float(g.frobenius_sq()) / 2.0))


def mobius_distance_direct(g: GroupElement) -> float:
    """Same distance via the explicit Moebius action on z = i (independent route)."""
    _require_integral_2x2(g, "mobius_distance_direct")
    (a, b), (c, d) = g.entries
    z = (a * 1j + b) / (c * 1j + d)
    w = z - 1j
    return math.acosh(1.0 + (w.real * w.real + w.imag * w.imag) / (2.0 * z.imag))


# ---------------------------------------------------------------------------
# entry bounds
# ---------------------------------------------------------------------------

def entry_bound(gauge: Gauge, threshold: float) -> int:
    """A sound bound B: every element with gauge <= threshold has all |entries| <= B."""
    if gauge.kind == "rnorm":
        if threshold < 0:
            return 0
        return math.floor(threshold)
    if gauge.kind == "hyperbolic":
        if threshold < 0:
            return 0
        return math.floor(math.sqrt(2.0 * math.cosh(threshold)))
    if gauge.kind == "rep_form":
        if threshold <= 0:
            return 0
        f = gauge.form
        if not f.is_definite():
            raise SpecError("entry bound undefined: form vanishes on the circle")
        mu = unit_circle_min(f)
        n = f.degree
        # |f0(u gamma)| >= mu ||u gamma||^n and sup-circle |sigma(gamma) f0| <=
        # sqrt(n+1) * coefficient norm, so ||gamma||_op^n <= sqrt(n+1) T / mu.
        return math.ceil((math.sqrt(n + 1) * threshold / mu) ** (1.0 / n))
    if gauge.kind == "height":
        if threshold < 0:
            return 0
        return math.floor(threshold)
    raise SpecError(f"no entry bound for gauge kind {gauge.kind!r}")
