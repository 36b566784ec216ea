// Finite fields F_{p^k}: deterministic defining polynomials, square classes,
// root finding via equal-degree splitting.
#pragma once
#include "rational.hpp"
#include <vector>
#include <memory>
#include <random>
#include <stdexcept>
#include <algorithm>

namespace hyperlocal {

struct FqField;
using FqFieldPtr = std::shared_ptr<const FqField>;

/// Element of F_{p^k} as a coefficient vector mod the defining polynomial.
struct Fq {
    FqFieldPtr field;
    std::vector<BigInt> c;  // size k, entries in [0, p)

    bool is_zero() const {
        return std::all_of(c.begin(), c.end(), [](const BigInt& x) { return x == 0; });
    }
    friend bool operator==(const Fq& a, const Fq& b) { return a.c == b.c; }
};

/// F_{p^k} with the lexicographically smallest monic irreducible defining polynomial.
struct FqField : std::enable_shared_from_this<FqField> {
    BigInt p;
    int k;
    std::vector<BigInt> defpoly;  // monic degree k; defpoly[i] = coeff of x^i, i < k

    BigInt q() const {
        BigInt r;
        mpz_pow_ui(r.get_mpz_t(), p.get_mpz_t(), k);
        return r;
    }

    static FqFieldPtr make(const BigInt& p, int k) {
        auto f = std::make_shared<FqField>();
        f->p = p;
        f->k = k;
        f->defpoly = smallest_irreducible(p, k);
        return f;
    }
    static FqFieldPtr make(long p, int k = 1) { return make(BigInt(p), k); }

    Fq zero() const { return {shared_from_this(), std::vector<BigInt>(k, BigInt(0))}; }
    Fq one() const { return from_int(1); }
    Fq from_int(const BigInt& n) const {
        auto e = zero();
        mpz_mod(e.c[0].get_mpz_t(), n.get_mpz_t(), p.get_mpz_t());
        return e;
    }
    Fq from_int(long n) const { return from_int(BigInt(n)); }
    Fq gen() const {
        auto e = zero();
        if (k == 1) throw std::logic_error("gen: prime field");
        e.c[1] = 1;
        return e;
    }
    /// element with given coefficient vector (reduced mod p)
    Fq from_coeffs(std::vector<BigInt> v) const {
        v.resize(k, BigInt(0));
        for (auto& x : v) mpz_mod(x.get_mpz_t(), x.get_mpz_t(), p.get_mpz_t());
        return {shared_from_this(), std::move(v)};
    }

    Fq add(const Fq& a, const Fq& b) const {
        Fq r = a;
        for (int i = 0; i < k; ++i) {
            r.c[i] += b.c[i];
            if (r.c[i] >= p) r.c[i] -= p;
        }
        return r;
    }
    Fq sub(const Fq& a, const Fq& b) const {
        Fq r = a;
        for (int i = 0; i < k; ++i) {
            r.c[i] -= b.c[i];
            if (r.c[i] < 0) r.c[i] += p;
        }
        return r;
    }
    Fq neg(const Fq& a) const { return sub(zero(), a); }

    Fq mul(const Fq& a, const Fq& b) const {
        if (k == 1) {
            Fq r = {shared_from_this(), std::vector<BigInt>(1)};
            r.c[0] = a.c[0] * b.c[0] % p;
            return r;
        }
        std::vector<BigInt> prod(2 * k - 1, BigInt(0));
        for (int i = 0; i < k; ++i) {
            if (a.c[i] == 0) continue;
            for (int j = 0; j < k; ++j) prod[i + j] += a.c[i] * b.c[j];
        }
        // reduce mod defpoly then mod p
        for (int d = 2 * k - 2; d >= k; --d) {
            if (prod[d] == 0) continue;
            BigInt t = prod[d];
            for (int i = 0; i < k; ++i) prod[d - k + i] -= t * defpoly[i];
            prod[d] = 0;
        }
        prod.resize(k);
        for (auto& x : prod) mpz_mod(x.get_mpz_t(), x.get_mpz_t(), p.get_mpz_t());
        return {shared_from_this(), std::move(prod)};
    }

    Fq pow(Fq a, BigInt e) const {
        Fq r = one();
        while (e > 0) {
            if (mpz_odd_p(e.get_mpz_t())) r = mul(r, a);
            a = mul(a, a);
            e >>= 1;
        }
        return r;
    }

    Fq inv(const Fq& a) const {
        if (a.is_zero()) throw std::domain_error("inv of zero");
        if (k == 1) {
            Fq r = {shared_from_this(), std::vector<BigInt>(1)};
            if (!mpz_invert(r.c[0].get_mpz_t(), a.c[0].get_mpz_t(), p.get_mpz_t()))
                throw std::domain_error("inv of zero");
            return r;
        }
        return pow(a, q() - 2);
    }

    /// Frobenius x -> x^p
    Fq frob(const Fq& a) const { return pow(a, p); }

private:
    // Irreducibility test over F_p for a monic polynomial of degree k (coeff vector
    // of length k for the lower terms): x^{p^k} = x and gcd(x^{p^{k/l}} - x, f) trivial.
    static std::vector<BigInt> smallest_irreducible(const BigInt& p, int k) {
        if (k == 1) return {};  // F_p itself, defining poly x - 0 unused
        std::vector<BigInt> c(k, BigInt(0));
        for (;;) {
            if (is_irreducible(p, c)) return c;
            // lexicographic increment on (c[k-1], ..., c[0])? Smallest by the
            // natural reading a_{k-1} x^{k-1} + ... + a_0: iterate a_{k-1} slowest.
            int i = 0;
            while (i < k) {
                c[i] += 1;
                if (c[i] < p) break;
                c[i] = 0;
                ++i;
            }
            if (i == k) throw std::logic_error("no irreducible found");
        }
    }

    // dense poly arithmetic over F_p for the irreducibility test
    using PP = std::vector<BigInt>;  // coeffs mod p, trimmed
    static void ptrim(PP& a) {
        while (!a.empty() && a.back() == 0) a.pop_back();
    }
    static PP pmulmod(const PP& a, const PP& b, const PP& m, const BigInt& p) {
        if (a.empty() || b.empty()) return {};
        PP r(a.size() + b.size() - 1, BigInt(0));
        for (size_t i = 0; i < a.size(); ++i)
            for (size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
        for (auto& x : r) mpz_mod(x.get_mpz_t(), x.get_mpz_t(), p.get_mpz_t());
        return pmod(std::move(r), m, p);
    }
    static PP pmod(PP a, const PP& m, const BigInt& p) {
        ptrim(a);
        long dm = (long)m.size() - 1;
        BigInt lcinv = modinv(m.back(), p);
        while ((long)a.size() - 1 >= dm) {
            BigInt f = a.back() * lcinv % p;
            long sh = (long)a.size() - 1 - dm;
            for (long i = 0; i <= dm; ++i) {
                a[i + sh] = (a[i + sh] - f * m[i]) % p;
                if (a[i + sh] < 0) a[i + sh] += p;
            }
            ptrim(a);
        }
        return a;
    }
    static BigInt modinv(const BigInt& a, const BigInt& p) {
        BigInt r;
        if (!mpz_invert(r.get_mpz_t(), a.get_mpz_t(), p.get_mpz_t()))
            throw std::domain_error("modinv");
        return r;
    }
    static PP pgcd(PP a, PP b, const BigInt& p) {
        ptrim(a);
        ptrim(b);
        while (!b.empty()) {
            PP r = pmod(a, b, p);
            a = std::move(b);
            b = std::move(r);
        }
        return a;
    }
    static PP ppowmod(PP base, BigInt e, const PP& m, const BigInt& p) {
        PP r = {BigInt(1)};
        while (e > 0) {
            if (mpz_odd_p(e.get_mpz_t())) r = pmulmod(r, base, m, p);
            base = pmulmod(base, base, m, p);
            e >>= 1;
        }
        return r;
    }
    static bool is_irreducible(const BigInt& p, const std::vector<BigInt>& lower) {
        int k = (int)lower.size();
        PP f = lower;
        f.push_back(BigInt(1));
        // x^{p^k} == x mod f
        PP x = {BigInt(0), BigInt(1)};
        BigInt pk;
        mpz_pow_ui(pk.get_mpz_t(), p.get_mpz_t(), k);
        PP xpk = ppowmod(x, pk, f, p);
        PP diff = psub(xpk, x, p);
        if (!diff.empty()) return false;
        // for each prime l | k: gcd(x^{p^{k/l}} - x, f) == 1
        std::vector<int> primes;
        {
            int n = k;
            for (int l = 2; (long)l * l <= n; ++l)
                if (n % l == 0) {
                    primes.push_back(l);
                    while (n % l == 0) n /= l;
                }
            if (n > 1) primes.push_back(n);
        }
        for (int l : primes) {
            BigInt pe;
            mpz_pow_ui(pe.get_mpz_t(), p.get_mpz_t(), k / l);
            PP g = pgcd(f, psub(ppowmod(x, pe, f, p), x, p), p);
            if ((long)g.size() - 1 != 0) return false;
        }
        return true;
    }
    static PP psub(PP a, const PP& b, const BigInt& p) {
        if (a.size() < b.size()) a.resize(b.size(), BigInt(0));
        for (size_t i = 0; i < b.size(); ++i) {
            a[i] = (a[i] - b[i]) % p;
            if (a[i] < 0) a[i] += p;
        }
        ptrim(a);
        return a;
    }
};

/// +1 nonzero square, -1 nonzero non-square, 0 if zero; via a^{(q-1)/2}.
inline int square_class(const Fq& a) {
    if (a.is_zero()) return 0;
    const auto& F = *a.field;
    if (F.k == 1) return mpz_legendre(a.c[0].get_mpz_t(), F.p.get_mpz_t());
    Fq r = F.pow(a, (F.q() - 1) / 2);
    return r == F.one() ? 1 : -1;
}

/// Polynomial over Fq as a coefficient vector (index = power), not necessarily trimmed.
using FqPoly = std::vector<Fq>;

namespace fqpoly {

inline void trim(FqPoly& f) {
    while (!f.empty() && f.back().is_zero()) f.pop_back();
}
inline FqPoly mod(FqPoly a, const FqPoly& m) {
    trim(a);
    const auto& F = *m.back().field;
    long dm = (long)m.size() - 1;
    Fq lci = F.inv(m.back());
    while ((long)a.size() - 1 >= dm) {
        Fq f = F.mul(a.back(), lci);
        long sh = (long)a.size() - 1 - dm;
        for (long i = 0; i <= dm; ++i) a[i + sh] = F.sub(a[i + sh], F.mul(f, m[i]));
        trim(a);
    }
    return a;
}
inline FqPoly mulmod(const FqPoly& a, const FqPoly& b, const FqPoly& m) {
    if (a.empty() || b.empty()) return {};
    const auto& F = *m.back().field;
    FqPoly r(a.size() + b.size() - 1, F.zero());
    for (size_t i = 0; i < a.size(); ++i)
        for (size_t j = 0; j < b.size(); ++j)
            r[i + j] = F.add(r[i + j], F.mul(a[i], b[j]));
    return mod(std::move(r), m);
}
inline FqPoly powmod(FqPoly base, BigInt e, const FqPoly& m) {
    const auto& F = *m.back().field;
    FqPoly r = {F.one()};
    while (e > 0) {
        if (mpz_odd_p(e.get_mpz_t())) r = mulmod(r, base, m);
        base = mulmod(base, base, m);
        e >>= 1;
    }
    return r;
}
inline FqPoly sub(FqPoly a, const FqPoly& b, const FqField& F) {
    if (a.size() < b.size()) a.resize(b.size(), F.zero());
    for (size_t i = 0; i < b.size(); ++i) a[i] = F.sub(a[i], b[i]);
    trim(a);
    return a;
}
inline FqPoly gcd(FqPoly a, FqPoly b) {
    trim(a);
    trim(b);
    while (!b.empty()) {
        FqPoly r = mod(a, b);
        a = std::move(b);
        b = std::move(r);
    }
    if (!a.empty()) {
        const auto& F = *a.back().field;
        Fq lci = F.inv(a.back());
        for (auto& c : a) c = F.mul(c, lci);
    }
    return a;
}
/// divide a by (x - r), assuming r is a root; returns quotient
inline FqPoly deflate(const FqPoly& a, const Fq& r) {
    const auto& F = *r.field;
    FqPoly q(a.size() - 1, F.zero());
    Fq carry = F.zero();
    for (long i = (long)a.size() - 1; i >= 1; --i) {
        carry = F.add(a[i], F.mul(carry, r));
        q[i - 1] = carry;
    }
    return q;
}
inline Fq eval(const FqPoly& a, const Fq& x) {
    const auto& F = *x.field;
    Fq r = F.zero();
    for (auto it = a.rbegin(); it != a.rend(); ++it) r = F.add(F.mul(r, x), *it);
    return r;
}

}  // namespace fqpoly

/// All roots of f in F_q with multiplicity, via equal-degree splitting restricted
/// to the linear part. Deterministic: fixed-seed generator.
inline std::vector<Fq> fq_roots(const FqPoly& f_in, unsigned seed = 12345) {
    FqPoly f = f_in;
    fqpoly::trim(f);
    if (f.empty()) throw std::invalid_argument("fq_roots: zero polynomial");
    const auto field = f.back().field;
    const auto& F = *field;
    std::vector<Fq> roots;
    if (f.size() == 1) return roots;

    // linear part: gcd(f, x^q - x) on the squarefree level
    FqPoly x = {F.zero(), F.one()};
    FqPoly xq = fqpoly::powmod(x, F.q(), f);
    FqPoly lin = fqpoly::gcd(f, fqpoly::sub(xq, x, F));

    std::mt19937 rng(seed);
    auto rand_elt = [&]() {
        std::vector<BigInt> c(F.k);
        for (int i = 0; i < F.k; ++i) {
            BigInt r = 0;
            // p is small in practice; draw via 64-bit chunks mod p
            unsigned long u = rng();
            r = BigInt(u);
            mpz_mod(r.get_mpz_t(), r.get_mpz_t(), F.p.get_mpz_t());
            c[i] = r;
        }
        return F.from_coeffs(std::move(c));
    };

    // split lin into linear factors (Cantor-Zassenhaus)
    std::vector<FqPoly> stack = {lin};
    std::vector<Fq> distinct;
    while (!stack.empty()) {
        FqPoly g = stack.back();
        stack.pop_back();
        fqpoly::trim(g);
        if (g.size() <= 1) continue;
        if (g.size() == 2) {
            // root = -g0/g1
            distinct.push_back(F.neg(F.mul(g[0], F.inv(g[1]))));
            continue;
        }
        // random a; h = gcd(g, (x+a)^{(q-1)/2} - 1)
        Fq a = rand_elt();
        FqPoly xa = {a, F.one()};
        FqPoly h = fqpoly::powmod(xa, (F.q() - 1) / 2, g);
        if (h.empty())
            h = fqpoly::sub({}, {F.one()}, F);  // -(1)
        else
            h = fqpoly::sub(h, {F.one()}, F);
        FqPoly d = fqpoly::gcd(g, h);
        if (d.size() <= 1 || d.size() == g.size()) {
            stack.push_back(std::move(g));  // retry with new random
            continue;
        }
        // g / d
        FqPoly q;
        {
            const FqPoly& den = d;
            FqPoly num = g;
            fqpoly::trim(num);
            long dd = (long)den.size() - 1;
            Fq lci = F.inv(den.back());
            FqPoly quo((long)num.size() - dd, F.zero());
            while ((long)num.size() - 1 >= dd) {
                Fq c = F.mul(num.back(), lci);
                long sh = (long)num.size() - 1 - dd;
                quo[sh] = c;
                for (long i = 0; i <= dd; ++i) num[i + sh] = F.sub(num[i + sh], F.mul(c, den[i]));
                fqpoly::trim(num);
            }
            q = std::move(quo);
        }
        stack.push_back(std::move(d));
        stack.push_back(std::move(q));
    }

    // multiplicities by repeated deflation of the original f
    for (const auto& r : distinct) {
        FqPoly g = f;
        while (g.size() > 1 && fqpoly::eval(g, r).is_zero()) {
            roots.push_back(r);
            g = fqpoly::deflate(g, r);
        }
    }
    return roots;
}

}  // namespace hyperlocal
