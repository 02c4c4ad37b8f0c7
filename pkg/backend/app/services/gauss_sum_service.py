import cmath
import logging
from math import gcd, sqrt

import numpy as np

from app.core.exceptions import InvalidArgumentError, NoInverseError
from app.schemas.models import ComplexValue, GaussArgs

logger = logging.getLogger(__name__)


def _split_power_of_two(c: int):
    r = 0
    while c % 2 == 0:
        c //= 2
        r += 1
    return r, c


def _root_of_unity(numerator: int, denominator: int) -> complex:
    """exp(2*pi*i*numerator/denominator), with the residue taken exactly first."""
    return cmath.exp(2j * cmath.pi * (numerator % denominator) / denominator)


class GaussSumService:
    """Generalized quadratic Gauss sums G(a, b, c) = sum_{l<c} exp(2*pi*i*(a*l^2 + b*l)/c).

    The closed form reduces every case to the classic b = 0 sums: c is split as
    2^r * c' (multiplicativity), the odd factor is handled by completing the
    square with the inverse of 4a, and the power of two by the parity rules.
    All modular arithmetic stays in Python integers; only the final value is
    floating point.
    """

    def gauss_sum_direct(self, args: GaussArgs) -> ComplexValue:
        return ComplexValue.from_complex(self._direct(args.a, args.b, args.c))

    def gauss_sum_closed(self, args: GaussArgs) -> ComplexValue:
        self._require_coprime(args)
        return ComplexValue.from_complex(self._closed(args.a, args.b, args.c))

    def gauss_magnitude(self, args: GaussArgs) -> float:
        self._require_coprime(args)
        return self._magnitude(args.c, args.b)

    def jacobi_symbol(self, a: int, n: int) -> int:
        if n < 1 or n % 2 == 0:
            raise InvalidArgumentError(f"Jacobi symbol needs a positive odd modulus, got n={n}")
        a %= n
        result = 1
        while a != 0:
            while a % 2 == 0:
                a //= 2
                if n % 8 in (3, 5):
                    result = -result
            a, n = n, a
            if a % 4 == 3 and n % 4 == 3:
                result = -result
            a %= n
        return result if n == 1 else 0

    def mod_inverse(self, a: int, c: int) -> int:
        if c < 1:
            raise InvalidArgumentError(f"modulus must be positive, got c={c}")
        # extended Euclid on (a mod c, c)
        old_r, r = a % c, c
        old_x, x = 1, 0
        while r != 0:
            quotient = old_r // r
            old_r, r = r, old_r - quotient * r
            old_x, x = x, old_x - quotient * x
        if old_r != 1:
            raise NoInverseError(f"{a} has no inverse modulo {c} (gcd={old_r})")
        return old_x % c

    def gauss_sum_classic(self, a: int, c: int) -> complex:
        """G(a, 0, c) for gcd(a, c) = 1."""
        if gcd(a, c) != 1:
            raise InvalidArgumentError(f"gcd({a}, {c}) != 1")
        if c == 1:
            return 1.0 + 0.0j
        residue = c % 4
        if residue == 1:
            return self.jacobi_symbol(a, c) * sqrt(c) + 0.0j
        if residue == 3:
            return 1j * self.jacobi_symbol(a, c) * sqrt(c)
        if residue == 2:
            return 0.0j
        a %= c
        # a is odd and positive here, so (c/a) is a proper Jacobi symbol
        return self.jacobi_symbol(c, a) * (1 + 1j ** (a % 4)) * sqrt(c)

    def _require_coprime(self, args: GaussArgs) -> None:
        if gcd(args.a, args.c) != 1:
            raise InvalidArgumentError(
                f"closed form requires gcd(a, c) = 1, got a={args.a}, c={args.c}")

    def _magnitude(self, c: int, b: int) -> float:
        """|G(a, b, c)| for any a coprime to c."""
        if c % 2 == 1:
            return sqrt(c)
        if (c // 2 - b) % 2 == 0:
            return sqrt(2 * c)
        return 0.0

    def _direct(self, a: int, b: int, c: int) -> complex:
        if c < 1:
            raise InvalidArgumentError(f"c must be >= 1, got {c}")
        l = np.arange(c, dtype=np.int64)
        # exponent residues kept below c^2 so int64 holds them
        residues = ((a % c) * (l * l % c) + (b % c) * l) % c
        return complex(np.exp(2j * np.pi * residues / c).sum())

    def _closed(self, a: int, b: int, c: int) -> complex:
        if gcd(a, c) != 1:
            raise InvalidArgumentError(f"gcd({a}, {c}) != 1")
        if c == 1:
            return 1.0 + 0.0j
        r, odd = _split_power_of_two(c)
        two_power = c // odd
        # G(a, b, 2^r c') = G(a c', b, 2^r) * G(a 2^r, b, c')
        return self._closed_power_of_two(a * odd, b, two_power, r) * self._closed_odd(a * two_power, b, odd)

    def _closed_odd(self, a: int, b: int, c: int) -> complex:
        if c == 1:
            return 1.0 + 0.0j
        a %= c
        phi = self.mod_inverse(4 * a, c)
        return _root_of_unity(-phi * b * b, c) * self.gauss_sum_classic(a, c)

    def _closed_power_of_two(self, a: int, b: int, c: int, r: int) -> complex:
        if r == 0:
            return 1.0 + 0.0j
        a %= c
        if r == 1:
            return 2.0 + 0.0j if b % 2 == 1 else 0.0j
        if b % 2 == 1:
            return 0.0j
        phi = self.mod_inverse(a, c)
        half_b = b // 2
        # exp(-pi*i*phi*b^2/(2c)) = exp(-2*pi*i*phi*(b/2)^2/c)
        return _root_of_unity(-phi * half_b * half_b, c) * self.gauss_sum_classic(a, c)


gauss_sum_service = GaussSumService()
