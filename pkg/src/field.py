"""
Finite-field layer: field construction, the multiplicative subgroup B0 and
coset representatives for the per-node multipliers sigma_i.

Fields are galois.GF classes. Element values cross module boundaries as
galois FieldArray scalars; on disk and in dataclasses they are plain integer
representatives in [0, order).
"""

import logging
from dataclasses import dataclass, field as dc_field

import galois
import numpy as np

logger = logging.getLogger(__name__)

# A field element: a 0-d galois FieldArray
Fe = galois.FieldArray


class FieldError(ValueError):
    """Raised when a field, subgroup or coset request is malformed."""


@dataclass(frozen=True)
class FieldSpec:
    """Description of a finite field B plus its galois class.

    poly is the irreducible polynomial bit mask for binary extension fields
    and 0 for prime fields.
    """

    order: int
    poly: int
    generator: int
    GF: type = dc_field(compare=False, repr=False)

    @property
    def characteristic(self) -> int:
        return self.GF.characteristic

    def element(self, value) -> Fe:
        return self.GF(int(value))

    def array(self, values) -> Fe:
        if isinstance(values, galois.FieldArray):
            if type(values) is self.GF:
                return values
            values = values.view(np.ndarray)
        return self.GF(np.array(values, dtype=np.int64))

    @property
    def one(self) -> Fe:
        return self.GF(1)

    @property
    def zero(self) -> Fe:
        return self.GF(0)


@dataclass(frozen=True)
class Subgroup:
    """The cyclic subgroup of B \\ {0} of order s (B0).

    elements are listed in generator-power order: generator^0, generator^1, ...
    """

    order: int
    elements: tuple
    generator: int

    def contains(self, spec: FieldSpec, x) -> bool:
        x = spec.element(x)
        return x != 0 and x ** self.order == 1


def _check_generator(GF, order: int) -> int:
    gen = GF.primitive_element
    if int(gen.multiplicative_order()) != order - 1:
        raise FieldError(f"generator {int(gen)} does not have order {order - 1}")
    return int(gen)


def make_field(prime: int | None = None, poly: int | None = None) -> FieldSpec:
    """
    Build a prime field GF(prime) or a binary extension field GF(2^deg(poly)).

    Exactly one of prime / poly must be given. poly is a bit mask, e.g.
    0x1009 for x^12 + x^3 + 1.
    """
    if (prime is None) == (poly is None):
        raise FieldError("give exactly one of prime or poly")

    if prime is not None:
        if prime < 2 or not galois.is_prime(prime):
            raise FieldError(f"{prime} is not prime")
        GF = galois.GF(prime)
        spec = FieldSpec(order=prime, poly=0, generator=_check_generator(GF, prime), GF=GF)
        logger.debug("Built prime field GF(%d), generator %d", prime, spec.generator)
        return spec

    if poly < 4:
        raise FieldError(f"polynomial mask {poly:#x} has degree < 2")
    if not galois.Poly.Int(poly).is_irreducible():
        raise FieldError(f"polynomial {poly:#x} is reducible over GF(2)")

    degree = poly.bit_length() - 1
    order = 1 << degree
    GF = galois.GF(order, irreducible_poly=poly)
    spec = FieldSpec(order=order, poly=poly, generator=_check_generator(GF, order), GF=GF)
    logger.debug("Built GF(2^%d) mod %#x, generator %d", degree, poly, spec.generator)
    return spec


def field_from_order(order: int, poly: int) -> FieldSpec:
    """Rebuild a field from its (order, poly) record; poly == 0 means prime."""
    if poly == 0:
        return make_field(prime=order)
    spec = make_field(poly=poly)
    if spec.order != order:
        raise FieldError(f"polynomial {poly:#x} gives order {spec.order}, not {order}")
    return spec


def subgroup_of_order(spec: FieldSpec, s: int) -> Subgroup:
    """Return the unique subgroup of order s, generated by generator^((|B|-1)/s)."""
    if s < 1 or (spec.order - 1) % s != 0:
        raise FieldError(f"{s} does not divide {spec.order - 1}")

    gen = spec.element(spec.generator) ** ((spec.order - 1) // s)
    elements = []
    x = spec.one
    for _ in range(s):
        elements.append(int(x))
        x = x * gen
    return Subgroup(order=s, elements=tuple(elements), generator=int(gen))


def coset_representatives(spec: FieldSpec, sub: Subgroup, count: int) -> list[int]:
    """
    Return `count` values lying in pairwise distinct cosets of B0.

    x and y share a coset iff x^s == y^s. The representative of each coset
    is its smallest integer value, and cosets are ordered by it.
    """
    coset_count = (spec.order - 1) // sub.order
    if count > coset_count:
        raise FieldError(
            f"need {count} cosets but B0 of order {sub.order} has only {coset_count}"
        )

    values = np.arange(1, spec.order, dtype=np.int64)
    keys = (spec.array(values) ** sub.order).view(np.ndarray)
    _, first = np.unique(keys, return_index=True)
    leaders = sorted(int(values[i]) for i in first)
    return leaders[:count]


def power_matrix(spec: FieldSpec, points, rows: int) -> Fe:
    """Vandermonde block [p^t] with t in [0, rows) down and one column per point."""
    points = spec.array([int(p) for p in np.atleast_1d(points)])
    out = spec.GF.Zeros((rows, points.size))
    if rows == 0:
        return out
    out[0] = 1
    for t in range(1, rows):
        out[t] = out[t - 1] * points
    return out


class SingularSystemError(FieldError):
    """A square system that the construction guarantees invertible is not."""


def erasure_operator(spec: FieldSpec, points, erased) -> Fe:
    """
    Linear map recovering erased symbols of a Vandermonde-parity codeword.

    For parity rows [p_i^t], t < r, and a set E of |E| <= r erased columns,
    returns X of shape (|E|, n) with zero columns on E such that
    c_E = X @ c for every codeword c. Only the first |E| parity rows are
    used; with distinct points they already form an invertible system.
    """
    points = spec.array([int(p) for p in np.atleast_1d(points)])
    n = points.size
    erased = list(erased)
    known = [i for i in range(n) if i not in erased]
    out = spec.GF.Zeros((len(erased), n))
    if not erased:
        return out

    H = power_matrix(spec, points, len(erased))
    try:
        inv = np.linalg.inv(H[:, erased])
    except np.linalg.LinAlgError as e:
        raise SingularSystemError(
            f"parity block over columns {erased} is singular"
        ) from e
    out[:, known] = -(inv @ H[:, known])
    return out
