#pragma once

// Exact integer/rational helpers for the closed-form scaling results.

#include <boost/multiprecision/cpp_int.hpp>
#include <stdexcept>
#include <string>

namespace pathent {

using BigInt = boost::multiprecision::cpp_int;
using BigRational = boost::multiprecision::cpp_rational;

inline BigInt big_factorial(int n) {
    if (n < 0) throw std::invalid_argument("factorial of negative argument");
    BigInt r = 1;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
}

inline BigInt big_binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    BigInt r = 1;
    for (int i = 0; i < k; ++i) {
        r *= (n - i);
        r /= (i + 1);  // exact at every step
    }
    return r;
}

inline BigInt big_pow(BigInt base, int exp) {
    if (exp < 0) throw std::invalid_argument("negative exponent");
    BigInt r = 1;
    while (exp-- > 0) r *= base;
    return r;
}

inline double to_double(const BigRational& q) { return q.convert_to<double>(); }

// "p/q" in lowest terms, or just "p" for integers.
inline std::string rational_string(const BigRational& q) {
    BigInt num = boost::multiprecision::numerator(q);
    BigInt den = boost::multiprecision::denominator(q);
    std::string s = num.str();
    if (den != 1) s += "/" + den.str();
    return s;
}

}  // namespace pathent
