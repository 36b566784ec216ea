// Polynomials over the rationals: arithmetic, resultants, Newton polygons.
#pragma once
#include "rational.hpp"
#include <vector>
#include <algorithm>

namespace hyperlocal {

/// Dense polynomial with exact rational coefficients, coeffs[i] = coefficient of x^i.
struct RatPoly {
    std::vector<BigRat> coeffs;

    RatPoly() = default;
    explicit RatPoly(std::vector<BigRat> c) : coeffs(std::move(c)) { trim(); }

    static RatPoly constant(BigRat c) { return RatPoly({std::move(c)}); }
    static RatPoly x() { return RatPoly({rat(0), rat(1)}); }
    /// x^n with coefficient c
    static RatPoly monomial(BigRat c, size_t n) {
        std::vector<BigRat> v(n + 1, rat(0));
        v[n] = std::move(c);
        return RatPoly(std::move(v));
    }

    void trim() {
        while (!coeffs.empty() && coeffs.back() == 0) coeffs.pop_back();
    }
    bool is_zero() const { return coeffs.empty(); }
    long degree() const { return (long)coeffs.size() - 1; }  // -1 for zero poly
    const BigRat& lc() const { return coeffs.back(); }
    BigRat coeff(size_t i) const { return i < coeffs.size() ? coeffs[i] : rat(0); }

    BigRat eval(const BigRat& x) const {
        BigRat r = 0;
        for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) r = r * x + *it;
        return r;
    }

    friend RatPoly operator+(const RatPoly& a, const RatPoly& b) {
        std::vector<BigRat> c(std::max(a.coeffs.size(), b.coeffs.size()), rat(0));
        for (size_t i = 0; i < a.coeffs.size(); ++i) c[i] += a.coeffs[i];
        for (size_t i = 0; i < b.coeffs.size(); ++i) c[i] += b.coeffs[i];
        return RatPoly(std::move(c));
    }
    friend RatPoly operator-(const RatPoly& a, const RatPoly& b) {
        std::vector<BigRat> c(std::max(a.coeffs.size(), b.coeffs.size()), rat(0));
        for (size_t i = 0; i < a.coeffs.size(); ++i) c[i] += a.coeffs[i];
        for (size_t i = 0; i < b.coeffs.size(); ++i) c[i] -= b.coeffs[i];
        return RatPoly(std::move(c));
    }
    friend RatPoly operator*(const RatPoly& a, const RatPoly& b) {
        if (a.is_zero() || b.is_zero()) return RatPoly();
        std::vector<BigRat> c(a.coeffs.size() + b.coeffs.size() - 1, rat(0));
        for (size_t i = 0; i < a.coeffs.size(); ++i)
            for (size_t j = 0; j < b.coeffs.size(); ++j) c[i + j] += a.coeffs[i] * b.coeffs[j];
        return RatPoly(std::move(c));
    }
    friend RatPoly operator*(const BigRat& s, const RatPoly& a) {
        if (s == 0) return RatPoly();
        std::vector<BigRat> c = a.coeffs;
        for (auto& x : c) x *= s;
        return RatPoly(std::move(c));
    }
    friend bool operator==(const RatPoly& a, const RatPoly& b) { return a.coeffs == b.coeffs; }

    RatPoly derivative() const {
        if (coeffs.size() <= 1) return RatPoly();
        std::vector<BigRat> c(coeffs.size() - 1);
        for (size_t i = 1; i < coeffs.size(); ++i) c[i - 1] = rat((long)i) * coeffs[i];
        return RatPoly(std::move(c));
    }

    /// f(x + z)
    RatPoly shift(const BigRat& z) const {
        // Horner: result = ((...)*(x+z) + a_i)
        RatPoly res;
        RatPoly xz({z, rat(1)});
        for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it)
            res = res * xz + RatPoly::constant(*it);
        return res;
    }
    /// f(s*x)
    RatPoly scale_arg(const BigRat& s) const {
        std::vector<BigRat> c = coeffs;
        BigRat pw = 1;
        for (size_t i = 0; i < c.size(); ++i) {
            c[i] *= pw;
            pw *= s;
        }
        return RatPoly(std::move(c));
    }

    /// Euclidean remainder a mod b, b nonzero.
    friend RatPoly rem(RatPoly a, const RatPoly& b) {
        long db = b.degree();
        while (!a.is_zero() && a.degree() >= db) {
            BigRat q = a.lc() / b.lc();
            long shift = a.degree() - db;
            for (long i = 0; i <= db; ++i) a.coeffs[i + shift] -= q * b.coeffs[i];
            a.coeffs.pop_back();
            a.trim();
        }
        return a;
    }
    friend RatPoly quot(RatPoly a, const RatPoly& b) {
        long db = b.degree();
        if (a.degree() < db) return RatPoly();
        std::vector<BigRat> q(a.degree() - db + 1, rat(0));
        while (!a.is_zero() && a.degree() >= db) {
            BigRat c = a.lc() / b.lc();
            long shift = a.degree() - db;
            q[shift] = c;
            for (long i = 0; i <= db; ++i) a.coeffs[i + shift] -= c * b.coeffs[i];
            a.coeffs.pop_back();
            a.trim();
        }
        return RatPoly(std::move(q));
    }
};

inline RatPoly poly_gcd(RatPoly a, RatPoly b) {
    while (!b.is_zero()) {
        RatPoly r = rem(a, b);
        a = std::move(b);
        b = std::move(r);
    }
    if (!a.is_zero()) {
        BigRat inv = 1 / a.lc();
        a = inv * a;  // monic normalisation
    }
    return a;
}

/// Resultant of f and g via the Euclidean recursion with leading-coefficient bookkeeping.
inline BigRat resultant(RatPoly f, RatPoly g) {
    if (f.is_zero() || g.is_zero()) return rat(0);
    BigRat res = 1;
    bool neg = false;
    while (g.degree() > 0) {
        RatPoly r = rem(f, g);
        long df = f.degree(), dg = g.degree(), dr = r.degree();
        if ((df & 1) && (dg & 1)) neg = !neg;
        if (r.is_zero()) return rat(0);
        BigRat lg = g.lc();
        // res *= lc(g)^(df - dr)
        for (long i = 0; i < df - dr; ++i) res *= lg;
        f = std::move(g);
        g = std::move(r);
    }
    // g constant nonzero: multiply by g^deg(f)
    BigRat c = g.coeffs[0];
    for (long i = 0; i < f.degree(); ++i) res *= c;
    return neg ? -res : res;
}

/// disc(f) = (-1)^{n(n-1)/2} res(f, f') / lc(f)
inline BigRat discriminant(const RatPoly& f) {
    long n = f.degree();
    BigRat r = resultant(f, f.derivative()) / f.lc();
    return ((n * (n - 1) / 2) % 2) ? -r : r;
}

/// One segment of a Newton polygon: all roots of this valuation, with count.
struct NewtonSegment {
    BigRat rootValuation;
    long length;
    friend bool operator==(const NewtonSegment& a, const NewtonSegment& b) {
        return a.rootValuation == b.rootValuation && a.length == b.length;
    }
};

/// Root-valuation data of f at p: segments sorted by decreasing valuation,
/// plus the number of roots equal to 0 (valuation +inf), reported separately.
struct NewtonPolygon {
    std::vector<NewtonSegment> segments;
    long zeroRoots = 0;
};

inline NewtonPolygon newton_polygon(const RatPoly& f, const BigInt& p) {
    NewtonPolygon np;
    size_t lo = 0;
    while (lo < f.coeffs.size() && f.coeffs[lo] == 0) ++lo;
    np.zeroRoots = (long)lo;
    // lower convex hull of (i, v(a_i)) for i in [lo, deg]
    std::vector<std::pair<long, BigRat>> pts;
    for (size_t i = lo; i < f.coeffs.size(); ++i) {
        if (f.coeffs[i] == 0) continue;
        pts.emplace_back((long)i, val_p(f.coeffs[i], p).value);
    }
    std::vector<std::pair<long, BigRat>> hull;
    for (auto& pt : pts) {
        while (hull.size() >= 2) {
            auto& a = hull[hull.size() - 2];
            auto& b = hull[hull.size() - 1];
            // keep b only if it is strictly below segment a-pt
            // cross: (b-a) x (pt-a) <= 0 means b above or on line -> drop
            BigRat cross = (b.second - a.second) * rat(pt.first - a.first) -
                           (pt.second - a.second) * rat(b.first - a.first);
            if (cross >= 0)
                hull.pop_back();
            else
                break;
        }
        hull.push_back(pt);
    }
    for (size_t i = 0; i + 1 < hull.size(); ++i) {
        BigRat slope = (hull[i + 1].second - hull[i].second) / rat(hull[i + 1].first - hull[i].first);
        np.segments.push_back({-slope, hull[i + 1].first - hull[i].first});
    }
    // slopes increase left to right, so root valuations already decrease
    return np;
}

inline NewtonPolygon newton_polygon(const RatPoly& f, long p) { return newton_polygon(f, BigInt(p)); }

}  // namespace hyperlocal
