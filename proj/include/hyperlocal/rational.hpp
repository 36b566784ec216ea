// Exact rational arithmetic helpers on top of GMP.
// Requirements: C++20, gmpxx.
#pragma once
#include <gmpxx.h>
#include <compare>
#include <optional>
#include <stdexcept>
#include <string>

namespace hyperlocal {

using BigInt = mpz_class;
using BigRat = mpq_class;

inline BigRat rat(long n, long d = 1) {
    BigRat r(n, d);
    r.canonicalize();
    return r;
}

inline BigRat rat_from_string(const std::string& s) {
    BigRat r(s);
    r.canonicalize();
    return r;
}

inline std::string to_string(const BigRat& r) { return r.get_str(); }
inline std::string to_string(const BigInt& z) { return z.get_str(); }

inline bool is_integer(const BigRat& r) { return r.get_den() == 1; }

/// Floor of a rational.
inline BigInt floor_rat(const BigRat& r) {
    BigInt q;
    mpz_fdiv_q(q.get_mpz_t(), r.get_num().get_mpz_t(), r.get_den().get_mpz_t());
    return q;
}

inline BigInt ceil_rat(const BigRat& r) {
    BigInt q;
    mpz_cdiv_q(q.get_mpz_t(), r.get_num().get_mpz_t(), r.get_den().get_mpz_t());
    return q;
}

/// p-adic valuation of a nonzero integer.
inline long val_p_int(BigInt x, const BigInt& p) {
    if (x == 0) throw std::invalid_argument("val_p_int: zero");
    long v = 0;
    BigInt q, r;
    for (;;) {
        mpz_fdiv_qr(q.get_mpz_t(), r.get_mpz_t(), x.get_mpz_t(), p.get_mpz_t());
        if (r != 0) break;
        x = q;
        ++v;
    }
    return v;
}

/// A rational value or +infinity (valuation of 0).
struct ValOrInf {
    bool inf = false;
    BigRat value;  // meaningful only if !inf

    static ValOrInf infinity() { return {true, BigRat()}; }
    static ValOrInf of(BigRat v) { return {false, std::move(v)}; }

    bool is_inf() const { return inf; }

    friend bool operator==(const ValOrInf& a, const ValOrInf& b) {
        if (a.inf || b.inf) return a.inf == b.inf;
        return a.value == b.value;
    }
    friend bool operator<(const ValOrInf& a, const ValOrInf& b) {
        if (a.inf) return false;
        if (b.inf) return true;
        return a.value < b.value;
    }
    friend bool operator<=(const ValOrInf& a, const ValOrInf& b) { return a < b || a == b; }
    friend bool operator>(const ValOrInf& a, const ValOrInf& b) { return b < a; }
    friend bool operator>=(const ValOrInf& a, const ValOrInf& b) { return b <= a; }

    friend ValOrInf min(const ValOrInf& a, const ValOrInf& b) { return a < b ? a : b; }
    friend ValOrInf operator+(const ValOrInf& a, const ValOrInf& b) {
        if (a.inf || b.inf) return infinity();
        return of(a.value + b.value);
    }

    std::string str() const { return inf ? "inf" : value.get_str(); }
};

/// Exact p-adic valuation of a rational; +inf iff x = 0.
inline ValOrInf val_p(const BigRat& x, const BigInt& p) {
    if (x == 0) return ValOrInf::infinity();
    long v = val_p_int(x.get_num(), p) - val_p_int(x.get_den(), p);
    return ValOrInf::of(rat(v));
}

inline ValOrInf val_p(const BigRat& x, long p) { return val_p(x, BigInt(p)); }

/// 2-adic valuation of a nonzero rational (may be negative).
inline long ord2(const BigRat& x) {
    if (x == 0) throw std::invalid_argument("ord2: zero");
    return val_p_int(x.get_num(), 2) - val_p_int(x.get_den(), 2);
}

}  // namespace hyperlocal
