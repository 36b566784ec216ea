// Ingestion: cluster picture and Galois data of y^2 = f(x) over Q_p computed
// from an exact polynomial, in the tame case. Roots are isolated by recursive
// Newton polygons over a tame tower Z_p[u][pi]/(m_u(u), pi^e - p) mod p^N.
#pragma once
#include "cluster.hpp"
#include "fq.hpp"
#include "poly.hpp"
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace hyperlocal {

/// A Newton-polygon slope with denominator divisible by p: the extension is
/// wildly ramified and outside the scope of the computed ingestion. Annotate
/// the Galois layer by hand instead.
struct WildInput : std::runtime_error {
    BigRat slope;
    explicit WildInput(const BigRat& s)
        : std::runtime_error("wild input: Newton polygon slope " + s.get_str() +
                             " has denominator divisible by p; annotate the layer manually"),
          slope(s) {}
};

/// The computed picture kept changing under precision doubling.
struct PrecisionUnstable : std::runtime_error {
    explicit PrecisionUnstable(const std::string& what)
        : std::runtime_error("precision unstable: " + what) {}
};

struct CurveSpec {
    RatPoly f;                      // squarefree
    long p = 0;                     // odd prime
    std::optional<long> precision;  // override for the working precision N
};

// ---------------------------------------------------------------------------
// tame tower arithmetic
// ---------------------------------------------------------------------------

namespace detail {
inline BigInt bigpow(const BigInt& b, unsigned long e) {
    BigInt r;
    mpz_pow_ui(r.get_mpz_t(), b.get_mpz_t(), e);
    return r;
}
}  // namespace detail

/// context for Z_p[u][pi]/(m_u(u), pi^e - p) mod p^N
struct Tower {
    BigInt p;
    long N = 0;
    BigInt pN;                    // p^N
    int fu = 1;                   // unramified degree
    long e = 1;                   // tame ramification index, pi^e = p
    std::vector<BigInt> defpoly;  // lower coefficients of the monic defining poly of u
    FqFieldPtr F;                 // residue field F_{p^fu}

    long dim() const { return (long)fu * e; }
};
using TowerPtr = std::shared_ptr<const Tower>;

inline TowerPtr make_tower(const BigInt& p, int fu, long e, long N) {
    auto t = std::make_shared<Tower>();
    t->p = p;
    t->N = N;
    t->pN = detail::bigpow(p, (unsigned long)N);
    t->fu = fu;
    t->e = e;
    t->F = FqField::make(p, fu);
    t->defpoly = t->F->defpoly;
    return t;
}

/// element of the tower; c[i + fu*j] is the coefficient of u^i pi^j in [0, p^N)
struct TowerElt {
    TowerPtr T;
    std::vector<BigInt> c;

    bool is_zero() const {
        return std::all_of(c.begin(), c.end(), [](const BigInt& x) { return x == 0; });
    }
    friend bool operator==(const TowerElt& a, const TowerElt& b) { return a.c == b.c; }
};

inline TowerElt te_zero(const TowerPtr& T) {
    return {T, std::vector<BigInt>((size_t)T->dim(), BigInt(0))};
}
inline TowerElt te_from_int(const TowerPtr& T, const BigInt& n) {
    auto r = te_zero(T);
    mpz_mod(r.c[0].get_mpz_t(), n.get_mpz_t(), T->pN.get_mpz_t());
    return r;
}
/// lift of a residue-field element into the pi^0 slice
inline TowerElt te_lift(const TowerPtr& T, const Fq& a) {
    auto r = te_zero(T);
    for (int i = 0; i < T->fu; ++i) r.c[i] = a.c[i];
    return r;
}

inline TowerElt operator+(const TowerElt& a, const TowerElt& b) {
    TowerElt r = a;
    for (size_t i = 0; i < r.c.size(); ++i) {
        r.c[i] += b.c[i];
        if (r.c[i] >= a.T->pN) r.c[i] -= a.T->pN;
    }
    return r;
}
inline TowerElt operator-(const TowerElt& a, const TowerElt& b) {
    TowerElt r = a;
    for (size_t i = 0; i < r.c.size(); ++i) {
        r.c[i] -= b.c[i];
        if (r.c[i] < 0) r.c[i] += a.T->pN;
    }
    return r;
}
inline TowerElt operator*(const TowerElt& a, const TowerElt& b) {
    const auto& T = *a.T;
    const int fu = T.fu;
    const long e = T.e;
    const long wu = 2 * fu - 1, we = 2 * e - 1;
    std::vector<BigInt> t((size_t)(wu * we), BigInt(0));
    for (long j1 = 0; j1 < e; ++j1)
        for (int i1 = 0; i1 < fu; ++i1) {
            const BigInt& x = a.c[(size_t)(i1 + fu * j1)];
            if (x == 0) continue;
            for (long j2 = 0; j2 < e; ++j2)
                for (int i2 = 0; i2 < fu; ++i2) {
                    const BigInt& y = b.c[(size_t)(i2 + fu * j2)];
                    if (y == 0) continue;
                    t[(size_t)((i1 + i2) + wu * (j1 + j2))] += x * y;
                }
        }
    // pi^e = p
    for (long j = we - 1; j >= e; --j)
        for (long i = 0; i < wu; ++i) {
            BigInt& s = t[(size_t)(i + wu * j)];
            if (s == 0) continue;
            t[(size_t)(i + wu * (j - e))] += T.p * s;
            s = 0;
        }
    // reduce u-powers by the monic defining polynomial
    for (long j = 0; j < e; ++j)
        for (long d = wu - 1; d >= fu; --d) {
            BigInt& td = t[(size_t)(d + wu * j)];
            if (td == 0) continue;
            for (int i = 0; i < fu; ++i) t[(size_t)((d - fu + i) + wu * j)] -= td * T.defpoly[i];
            td = 0;
        }
    TowerElt r = te_zero(a.T);
    for (long j = 0; j < e; ++j)
        for (int i = 0; i < fu; ++i)
            mpz_mod(r.c[(size_t)(i + fu * j)].get_mpz_t(), t[(size_t)(i + wu * j)].get_mpz_t(),
                    T.pN.get_mpz_t());
    return r;
}

inline TowerElt te_scale_int(const TowerElt& a, const BigInt& s) {
    TowerElt r = a;
    for (auto& x : r.c) {
        x *= s;
        mpz_mod(x.get_mpz_t(), x.get_mpz_t(), a.T->pN.get_mpz_t());
    }
    return r;
}
/// multiply by pi^m, m >= 0
inline TowerElt te_scale_pi(const TowerElt& a, long m) {
    const auto& T = *a.T;
    long s = m / T.e, mp = m % T.e;
    TowerElt r = te_zero(a.T);
    for (long j = 0; j < T.e; ++j) {
        long jt = j + mp, extra = s;
        if (jt >= T.e) {
            jt -= T.e;
            ++extra;
        }
        BigInt ps = detail::bigpow(T.p, (unsigned long)extra);
        for (int i = 0; i < T.fu; ++i) {
            BigInt v = a.c[(size_t)(i + T.fu * j)] * ps;
            mpz_mod(r.c[(size_t)(i + T.fu * jt)].get_mpz_t(), v.get_mpz_t(), T.pN.get_mpz_t());
        }
    }
    return r;
}

/// pi-adic valuation m (true valuation m/e), or nullopt for 0 mod p^N
inline std::optional<long> te_val(const TowerElt& a) {
    const auto& T = *a.T;
    std::optional<long> best;
    for (long j = 0; j < T.e; ++j) {
        long kmin = -1;
        for (int i = 0; i < T.fu; ++i) {
            const BigInt& x = a.c[(size_t)(i + T.fu * j)];
            if (x == 0) continue;
            long v = val_p_int(x, T.p);
            if (kmin < 0 || v < kmin) kmin = v;
        }
        if (kmin < 0) continue;
        long m = kmin * T.e + j;
        if (!best || m < *best) best = m;
    }
    return best;
}

/// residue in F_{p^fu} of a / pi^m, where m = te_val(a)
inline Fq te_residue(const TowerElt& a, long m) {
    const auto& T = *a.T;
    long j = m % T.e, s = m / T.e;
    BigInt ps = detail::bigpow(T.p, (unsigned long)s);
    std::vector<BigInt> v((size_t)T.fu);
    for (int i = 0; i < T.fu; ++i) {
        BigInt q, r;
        mpz_fdiv_qr(q.get_mpz_t(), r.get_mpz_t(), a.c[(size_t)(i + T.fu * j)].get_mpz_t(),
                    ps.get_mpz_t());
        if (r != 0) throw PrecisionUnstable("residue extraction below the working precision");
        v[(size_t)i] = q;
    }
    return T.F->from_coeffs(std::move(v));
}

/// exact division by pi^m (requires valuation >= m/e)
inline TowerElt te_div_pi(const TowerElt& a, long m) {
    const auto& T = *a.T;
    long s = m / T.e, mp = m % T.e;
    TowerElt r = te_zero(a.T);
    for (long j = 0; j < T.e; ++j) {
        long jt = j - mp, extra = s;
        if (jt < 0) {
            jt += T.e;
            ++extra;
        }
        BigInt ps = detail::bigpow(T.p, (unsigned long)extra);
        for (int i = 0; i < T.fu; ++i) {
            const BigInt& x = a.c[(size_t)(i + T.fu * j)];
            if (x == 0) continue;
            BigInt q, rm;
            mpz_fdiv_qr(q.get_mpz_t(), rm.get_mpz_t(), x.get_mpz_t(), ps.get_mpz_t());
            if (rm != 0) throw PrecisionUnstable("division by pi below the working precision");
            r.c[(size_t)(i + T.fu * jt)] = q;
        }
    }
    return r;
}

/// inverse of a unit, by lifting the residue-field inverse
inline TowerElt te_inv_unit(const TowerElt& a) {
    const auto& T = *a.T;
    auto m = te_val(a);
    if (!m || *m != 0) throw std::invalid_argument("te_inv_unit: not a unit");
    TowerElt y = te_lift(a.T, T.F->inv(te_residue(a, 0)));
    TowerElt two = te_from_int(a.T, BigInt(2));
    long its = 1;
    while ((1L << its) < T.N * T.e + 1) ++its;
    for (long k = 0; k <= its; ++k) y = y * (two - a * y);
    return y;
}

using TPoly = std::vector<TowerElt>;

inline TPoly tp_from_ints(const TowerPtr& T, const std::vector<BigInt>& cs) {
    TPoly f;
    f.reserve(cs.size());
    for (const auto& c : cs) f.push_back(te_from_int(T, c));
    return f;
}
inline TowerElt tp_eval(const TPoly& f, const TowerElt& x) {
    TowerElt r = te_zero(x.T);
    for (auto it = f.rbegin(); it != f.rend(); ++it) r = r * x + *it;
    return r;
}
inline TPoly tp_derivative(const TPoly& f) {
    if (f.size() <= 1) return {};
    TPoly d;
    d.reserve(f.size() - 1);
    for (size_t i = 1; i < f.size(); ++i) d.push_back(te_scale_int(f[i], BigInt((long)i)));
    return d;
}
/// f(x + z)
inline TPoly tp_shift(const TPoly& f, const TowerElt& z) {
    TPoly res;
    for (auto it = f.rbegin(); it != f.rend(); ++it) {
        TPoly nxt(res.size() + 1, te_zero(z.T));
        for (size_t k = 0; k < res.size(); ++k) {
            nxt[k + 1] = res[k];
            nxt[k] = nxt[k] + z * res[k];
        }
        nxt[0] = nxt[0] + *it;
        res = std::move(nxt);
    }
    return res;
}

// ---------------------------------------------------------------------------
// root isolation
// ---------------------------------------------------------------------------

namespace detail {

struct GrowFu {
    int fu;
};
struct GrowE {
    long e;
};

struct HullSeg {
    long i0, m0, i1, m1;
};

/// lower convex hull of (index, pi-valuation) points, as consecutive segments
inline std::vector<HullSeg> lower_hull(const std::vector<std::pair<long, long>>& pts) {
    std::vector<std::pair<long, long>> hull;
    for (const auto& pt : pts) {
        while (hull.size() >= 2) {
            const auto& a = hull[hull.size() - 2];
            const auto& b = hull[hull.size() - 1];
            // drop b unless it is strictly below the segment a-pt
            long cross = (b.second - a.second) * (pt.first - a.first) -
                         (pt.second - a.second) * (b.first - a.first);
            if (cross >= 0)
                hull.pop_back();
            else
                break;
        }
        hull.push_back(pt);
    }
    std::vector<HullSeg> segs;
    for (size_t i = 0; i + 1 < hull.size(); ++i)
        segs.push_back({hull[i].first, hull[i].second, hull[i + 1].first, hull[i + 1].second});
    return segs;
}

/// euclidean quotient over F_q
inline FqPoly fq_quot(FqPoly num, const FqPoly& den) {
    const auto& F = *den.back().field;
    fqpoly::trim(num);
    long dd = (long)den.size() - 1;
    if ((long)num.size() - 1 < dd) return {};
    Fq lci = F.inv(den.back());
    FqPoly quo((size_t)((long)num.size() - dd), F.zero());
    while ((long)num.size() - 1 >= dd) {
        Fq c = F.mul(num.back(), lci);
        long sh = (long)num.size() - 1 - dd;
        quo[(size_t)sh] = c;
        for (long i = 0; i <= dd; ++i) num[(size_t)(i + sh)] = F.sub(num[(size_t)(i + sh)], F.mul(c, den[(size_t)i]));
        fqpoly::trim(num);
    }
    return quo;
}

/// lcm of irreducible-factor degrees of rho over its field (distinct-degree split)
inline int needed_degree(FqPoly rho) {
    const auto field = rho.back().field;
    const auto& F = *field;
    // a polynomial in T^p has the factor-degree pattern of its exponent
    // compression (coefficientwise Frobenius preserves degrees)
    long pl = mpz_get_si(F.p.get_mpz_t());
    for (bool again = true; again && rho.size() > (size_t)pl;) {
        for (size_t i = 1; i < rho.size(); ++i)
            if ((long)i % pl != 0 && !rho[i].is_zero()) {
                again = false;
                break;
            }
        if (!again) break;
        FqPoly cmp;
        for (size_t i = 0; i < rho.size(); i += (size_t)pl) cmp.push_back(rho[i]);
        rho = std::move(cmp);
    }
    // squarefree part
    FqPoly d;
    for (size_t i = 1; i < rho.size(); ++i) d.push_back(F.mul(F.from_int((long)i), rho[i]));
    FqPoly g = fqpoly::gcd(rho, d);
    FqPoly fs = ((long)g.size() - 1 < 1) ? rho : fq_quot(rho, g);
    fqpoly::trim(fs);
    int need = 1;
    FqPoly x = {F.zero(), F.one()};
    FqPoly w = fqpoly::mod(x, fs);
    for (int dg = 1; (long)fs.size() - 1 > 0; ++dg) {
        if ((long)fs.size() - 1 < 2 * dg) {  // remainder is irreducible
            need = std::lcm(need, (int)fs.size() - 1);
            break;
        }
        w = fqpoly::powmod(w, F.q(), fs);
        FqPoly gd = fqpoly::gcd(fs, fqpoly::sub(w, x, F));
        if ((long)gd.size() - 1 > 0) {
            need = std::lcm(need, dg);
            fs = fq_quot(fs, gd);
            fqpoly::trim(fs);
            if ((long)fs.size() - 1 > 0) w = fqpoly::mod(w, fs);
        }
    }
    return need;
}

struct IsoCtx {
    TPoly base, dbase;
    std::vector<TowerElt> roots;
    long denLcm = 1;   // lcm of slope denominators seen
    long shiftK = 0;   // roots are p^shiftK times the true roots (error reporting)
};

/// Newton iteration towards the unique root closest to x; appends it to ctx
inline void newton_polish(IsoCtx& ctx, TowerElt x) {
    const auto& T = *x.T;
    const long cap = 4 * T.N * T.e + 64;
    std::optional<long> lastDelta;
    int stall = 0;
    for (long it = 0; it < cap; ++it) {
        TowerElt gx = tp_eval(ctx.base, x);
        auto mg = te_val(gx);
        if (!mg) break;  // root to full precision
        TowerElt gpx = tp_eval(ctx.dbase, x);
        auto mgp = te_val(gpx);
        if (!mgp) throw PrecisionUnstable("derivative vanishes at an approximate root");
        if (*mg <= *mgp) throw PrecisionUnstable("Newton step does not contract");
        TowerElt delta = te_div_pi(gx, *mgp) * te_inv_unit(te_div_pi(gpx, *mgp));
        auto md = te_val(delta);
        if (!md) break;
        x = x - delta;
        if (*md + *mgp >= T.N * T.e - T.e) break;  // at the noise floor
        if (lastDelta && *md <= *lastDelta) {
            if (++stall > 3) break;
        } else
            stall = 0;
        lastDelta = md;
    }
    ctx.roots.push_back(std::move(x));
}

/// isolate the `expected` roots of ctx.base with v(x - z) > lambdaPrev
inline void isolate(IsoCtx& ctx, const TowerElt& z, const BigRat& lambdaPrev, long expected,
                    int depth) {
    const TowerPtr& Tp = z.T;
    const auto& T = *Tp;
    if (depth > 64) throw PrecisionUnstable("root isolation recursion too deep");
    if (expected == 1) {
        newton_polish(ctx, z);
        return;
    }
    TPoly h = tp_shift(ctx.base, z);
    long lo = 0;
    while (lo < (long)h.size() && h[(size_t)lo].is_zero()) ++lo;
    if (lo >= (long)h.size()) throw PrecisionUnstable("shifted polynomial vanishes");
    if (lo > 1) throw PrecisionUnstable("multiple roots coincide at the working precision");
    long found = 0;
    if (lo == 1) {  // z itself is a root to full precision
        ctx.roots.push_back(z);
        found = 1;
    }
    std::vector<std::pair<long, long>> pts;
    std::vector<std::optional<long>> vals(h.size());
    for (long i = lo; i < (long)h.size(); ++i) {
        vals[(size_t)i] = te_val(h[(size_t)i]);
        if (vals[(size_t)i]) pts.emplace_back(i, *vals[(size_t)i]);
    }
    for (const auto& sg : lower_hull(pts)) {
        BigRat lam = BigRat(rat(sg.m0 - sg.m1) / rat((sg.i1 - sg.i0) * T.e));
        if (!(lam > lambdaPrev)) continue;  // roots of shallower levels
        long den = mpz_get_si(lam.get_den().get_mpz_t());
        if (mpz_divisible_p(BigInt(lam.get_den()).get_mpz_t(), T.p.get_mpz_t()))
            throw WildInput(BigRat(lam - rat(ctx.shiftK)));
        if (T.e % den != 0) throw GrowE{std::lcm(T.e, den)};
        ctx.denLcm = std::lcm(ctx.denLcm, den);
        long le = mpz_get_si(BigRat(lam * rat(T.e)).get_num().get_mpz_t());
        // residual polynomial along the segment
        FqPoly rho((size_t)(sg.i1 - sg.i0 + 1), T.F->zero());
        for (long i = sg.i0; i <= sg.i1; ++i) {
            long L = sg.m0 - (i - sg.i0) * le;
            if (vals[(size_t)i] && *vals[(size_t)i] == L)
                rho[(size_t)(i - sg.i0)] = te_residue(h[(size_t)i], L);
        }
        auto rts = fq_roots(rho);
        if ((long)rts.size() < (long)rho.size() - 1) throw GrowFu{T.fu * needed_degree(rho)};
        // distinct residual roots with multiplicity, in first-seen order
        std::vector<std::pair<Fq, long>> agg;
        for (const auto& r : rts) {
            auto it = std::find_if(agg.begin(), agg.end(),
                                   [&](const auto& pr) { return pr.first == r; });
            if (it == agg.end())
                agg.emplace_back(r, 1);
            else
                ++it->second;
        }
        for (const auto& [alpha, mult] : agg) {
            TowerElt zz = z + te_scale_pi(te_lift(Tp, alpha), le);
            isolate(ctx, zz, lam, mult, depth + 1);
            found += mult;
        }
    }
    if (found != expected)
        throw PrecisionUnstable("root count mismatch on a Newton polygon level");
}

/// image of the unramified generator under Frobenius, Hensel-lifted
inline TowerElt frob_u_image(const TowerPtr& Tp) {
    const auto& T = *Tp;
    std::vector<BigInt> mu = T.defpoly;
    mu.push_back(BigInt(1));
    TPoly m = tp_from_ints(Tp, mu);
    TPoly dm = tp_derivative(m);
    TowerElt x = te_lift(Tp, T.F->frob(T.F->gen()));
    long its = 1;
    while ((1L << its) < T.N * T.e + 1) ++its;
    for (long k = 0; k <= its; ++k)
        x = x - tp_eval(m, x) * te_inv_unit(tp_eval(dm, x));
    return x;
}

/// primitive e-th root of unity in the tower, Hensel-lifted
inline TowerElt primitive_root_of_unity(const TowerPtr& Tp) {
    const auto& T = *Tp;
    const auto& F = *T.F;
    FqPoly xe((size_t)T.e + 1, F.zero());
    xe[0] = F.neg(F.one());
    xe[(size_t)T.e] = F.one();
    auto rts = fq_roots(xe);
    std::vector<long> primes;
    {
        long n = T.e;
        for (long l = 2; l * l <= n; ++l)
            if (n % l == 0) {
                primes.push_back(l);
                while (n % l == 0) n /= l;
            }
        if (n > 1) primes.push_back(n);
    }
    std::optional<Fq> zb;
    for (const auto& r : rts) {
        bool prim = true;
        for (long l : primes)
            if (F.pow(r, BigInt(T.e / l)) == F.one()) {
                prim = false;
                break;
            }
        if (prim) {
            zb = r;
            break;
        }
    }
    if (!zb) throw std::logic_error("no primitive root of unity in the residue field");
    // Newton on X^e - 1
    TowerElt x = te_lift(Tp, *zb);
    TowerElt one = te_from_int(Tp, BigInt(1));
    BigInt ee((long)T.e);
    long its = 1;
    while ((1L << its) < T.N * T.e + 1) ++its;
    for (long k = 0; k <= its; ++k) {
        TowerElt xem1 = one;
        for (long j = 0; j < T.e - 1; ++j) xem1 = xem1 * x;  // x^{e-1}
        TowerElt g = xem1 * x - one;
        TowerElt dg = te_scale_int(xem1, ee);
        x = x - g * te_inv_unit(dg);
    }
    return x;
}

/// match Galois images of roots back to roots; separation must exceed maxm
inline std::vector<int> match_roots(const std::vector<TowerElt>& roots,
                                    const std::vector<TowerElt>& img, long maxm) {
    int n = (int)roots.size();
    std::vector<int> perm(n, -1);
    std::vector<char> used(n, 0);
    for (int i = 0; i < n; ++i) {
        int best = -1;
        long bestm = -1;
        bool bestInf = false;
        for (int j = 0; j < n; ++j) {
            auto d = te_val(img[(size_t)i] - roots[(size_t)j]);
            bool inf = !d.has_value();
            if (best < 0 || inf || (!bestInf && *d > bestm)) {
                best = j;
                bestInf = inf;
                bestm = inf ? -1 : *d;
                if (inf) break;
            }
        }
        if (best < 0 || used[best] || (!bestInf && bestm <= maxm))
            throw PrecisionUnstable("a Galois image does not match a unique root");
        used[best] = 1;
        perm[(size_t)i] = best;
    }
    return perm;
}

struct RunResult {
    TowerPtr T;
    std::vector<TowerElt> roots;
    long denLcm = 1;
    std::vector<std::vector<std::optional<long>>> m;  // pairwise pi-valuations
    std::vector<int> frob, inertia;
};

inline RunResult run_once(const BigInt& P, int fu, long e, long N,
                          const std::vector<BigInt>& gc, long shiftK) {
    auto Tp = make_tower(P, fu, e, N);
    IsoCtx ctx;
    ctx.base = tp_from_ints(Tp, gc);
    ctx.dbase = tp_derivative(ctx.base);
    ctx.shiftK = shiftK;
    long deg = (long)gc.size() - 1;
    isolate(ctx, te_zero(Tp), rat(-1), deg, 0);
    if ((long)ctx.roots.size() != deg) throw PrecisionUnstable("wrong number of isolated roots");

    RunResult R;
    R.T = Tp;
    R.roots = std::move(ctx.roots);
    R.denLcm = ctx.denLcm;
    int n = (int)deg;
    R.m.assign((size_t)n, std::vector<std::optional<long>>((size_t)n));
    long maxm = -1;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            auto d = te_val(R.roots[(size_t)i] - R.roots[(size_t)j]);
            if (!d) throw PrecisionUnstable("two roots coincide at the working precision");
            R.m[(size_t)i][(size_t)j] = R.m[(size_t)j][(size_t)i] = d;
            maxm = std::max(maxm, *d);
        }

    // Frobenius: fixes pi, acts by the lifted residue Frobenius on u
    if (fu == 1) {
        R.frob.resize((size_t)n);
        for (int i = 0; i < n; ++i) R.frob[(size_t)i] = i;
    } else {
        TowerElt ui = frob_u_image(Tp);
        std::vector<TowerElt> up(1, te_from_int(Tp, BigInt(1)));
        for (int i = 1; i < fu; ++i) up.push_back(up.back() * ui);
        std::vector<TowerElt> img;
        for (const auto& r : R.roots) {
            TowerElt acc = te_zero(Tp);
            for (long j = 0; j < e; ++j)
                for (int i = 0; i < fu; ++i) {
                    const BigInt& c = r.c[(size_t)(i + fu * j)];
                    if (c == 0) continue;
                    acc = acc + te_scale_pi(te_scale_int(up[(size_t)i], c), j);
                }
            img.push_back(std::move(acc));
        }
        R.frob = match_roots(R.roots, img, maxm);
    }

    // tame inertia generator: pi -> zeta_e pi, u fixed
    if (e == 1) {
        R.inertia.resize((size_t)n);
        for (int i = 0; i < n; ++i) R.inertia[(size_t)i] = i;
    } else {
        TowerElt zeta = primitive_root_of_unity(Tp);
        std::vector<TowerElt> zp(1, te_from_int(Tp, BigInt(1)));
        for (long j = 1; j < e; ++j) zp.push_back(zp.back() * zeta);
        std::vector<TowerElt> img;
        for (const auto& r : R.roots) {
            TowerElt acc = te_zero(Tp);
            for (long j = 0; j < e; ++j) {
                TowerElt slice = te_zero(Tp);
                bool any = false;
                for (int i = 0; i < fu; ++i) {
                    slice.c[(size_t)(i + fu * j)] = r.c[(size_t)(i + fu * j)];
                    any = any || slice.c[(size_t)(i + fu * j)] != 0;
                }
                if (any) acc = acc + slice * zp[(size_t)j];
            }
            img.push_back(std::move(acc));
        }
        R.inertia = match_roots(R.roots, img, maxm);
    }
    return R;
}

inline bool same_run(const RunResult& a, const RunResult& b) {
    return a.m == b.m && a.frob == b.frob && a.inertia == b.inertia && a.denLcm == b.denLcm;
}

inline long mult_order_mod(const BigInt& P, long e) {
    long pm = (long)mpz_fdiv_ui(P.get_mpz_t(), (unsigned long)e);
    long acc = pm % e, d = 1;
    while (acc != 1 % e) {
        acc = (acc * pm) % e;
        if (++d > e) throw std::logic_error("p not invertible modulo e");
    }
    return d;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// public interface
// ---------------------------------------------------------------------------

struct RootSystem {
    TowerPtr tower;
    std::vector<TowerElt> roots;  // approximations of p^shift * (true roots)
    long shift = 0;
    std::vector<std::vector<ValOrInf>> valMatrix;  // true pairwise v(r_i - r_j)
    std::vector<int> frob, inertiaGen;
    std::map<std::vector<int>, TowerElt> centres;      // per proper cluster (scaled)
    std::map<std::vector<int>, Fq> thetaResidue;       // unit residue of theta^2, per star cluster
    std::map<std::vector<int>, int> thetaSquareClass;  // its square class in F_q
    BigRat lead;                                       // leading coefficient of f
};

struct ClusterData {
    ClusterPicture picture;
    GaloisLayer layer;
    RootSystem roots;
};

/// epsilon_s(Frob^{q_s}) for an even or cotwin cluster s, from the theta^2
/// residue of star(s) composed along the Frobenius orbit of s
inline int epsilon_frob(const RootSystem& rs, const ClusterPicture& pic,
                        const std::vector<int>& id) {
    int s = pic.find(id);
    if (s < 0) throw std::invalid_argument("epsilon_frob: no such cluster");
    auto a = attributes(pic, s);
    if (!(a.isEven || a.isCotwin))
        throw std::invalid_argument("epsilon_frob: cluster is neither even nor a cotwin");
    int t = star(pic, s);
    auto it = rs.thetaResidue.find(pic[t].roots);
    if (it == rs.thetaResidue.end())
        throw std::invalid_argument("epsilon_frob: theta residue not available");
    auto cp = induced_cluster_perm(pic, rs.frob);
    if (cp.empty()) throw std::logic_error("epsilon_frob: Frobenius does not act on clusters");
    long q = 1;
    for (int x = cp[s]; x != s; x = cp[x]) ++q;
    const auto& F = *rs.tower->F;
    BigInt pq = detail::bigpow(rs.tower->p, (unsigned long)q);
    Fq sgn = F.pow(it->second, BigInt((pq - 1) / 2));
    if (sgn == F.one()) return 1;
    if (sgn == F.neg(F.one())) return -1;
    throw std::logic_error("epsilon_frob: residue not fixed by the Frobenius power");
}

/// Cluster picture, Galois layer and root system of y^2 = f(x) over Q_p.
inline ClusterData cluster_data(const CurveSpec& spec) {
    BigInt P(spec.p);
    if (spec.p < 3 || spec.p % 2 == 0 || mpz_probab_prime_p(P.get_mpz_t(), 30) == 0)
        throw std::invalid_argument("cluster_data: p must be an odd prime");
    const RatPoly& f = spec.f;
    long deg = f.degree();
    if (deg < 2) throw std::invalid_argument("cluster_data: deg f must be at least 2");
    if (discriminant(f) == 0)
        throw std::invalid_argument("cluster_data: polynomial is not squarefree");

    // leading coefficient data
    long vcOrig = mpz_get_si(val_p(f.lc(), P).value.get_num().get_mpz_t());
    BigInt unum(f.lc().get_num()), uden(f.lc().get_den());
    {  // strip p-powers to get the unit part
        while (mpz_divisible_p(unum.get_mpz_t(), P.get_mpz_t())) unum /= P;
        while (mpz_divisible_p(uden.get_mpz_t(), P.get_mpz_t())) uden /= P;
    }
    BigInt uprod = unum * uden;
    int sq = mpz_legendre(uprod.get_mpz_t(), P.get_mpz_t());

    // integer model with the same roots
    BigInt den(1);
    for (const auto& c : f.coeffs) mpz_lcm(den.get_mpz_t(), den.get_mpz_t(), c.get_den().get_mpz_t());
    std::vector<BigInt> ic;
    for (long i = 0; i <= deg; ++i) ic.push_back(BigInt(BigRat(f.coeff((size_t)i) * rat(1) * BigRat(den)).get_num()));

    // substitute x -> x / p^k so that all roots become integral
    long kScale = 0;
    for (const auto& sgm : newton_polygon(f, P).segments)
        if (sgm.rootValuation < 0)
            kScale = std::max(kScale, mpz_get_si(ceil_rat(-sgm.rootValuation).get_mpz_t()));
    std::vector<BigInt> b(ic);
    for (long i = 0; i <= deg; ++i)
        b[(size_t)i] *= detail::bigpow(P, (unsigned long)(kScale * (deg - i)));

    // working precision
    long N0;
    if (spec.precision)
        N0 = std::max(*spec.precision, 8L);
    else {
        std::vector<BigRat> bc;
        for (const auto& x : b) bc.push_back(BigRat(x));
        N0 = mpz_get_si(val_p(discriminant(RatPoly(bc)), P).value.get_num().get_mpz_t()) + deg + 4;
    }

    // grow the tower until a run completes; doubled precision must agree
    int fu = 1;
    long e = 1;
    detail::RunResult rA, rB;
    for (int guard = 0;; ++guard) {
        if (guard > 40 || fu > 48 || e > 120)
            throw PrecisionUnstable("field tower growth did not stabilise");
        if (e > 1) {  // residue field must contain the e-th roots of unity
            long d = detail::mult_order_mod(P, e);
            if (fu % d != 0) {
                fu = (int)std::lcm((long)fu, d);
                continue;
            }
        }
        try {
            rA = detail::run_once(P, fu, e, N0, b, kScale);
            rB = detail::run_once(P, fu, e, 2 * N0, b, kScale);
            if (!detail::same_run(rA, rB)) {
                auto rC = detail::run_once(P, fu, e, 4 * N0, b, kScale);
                if (!detail::same_run(rB, rC))
                    throw PrecisionUnstable("picture changed under two precision doublings");
                rA = std::move(rB);
                rB = std::move(rC);
            }
            break;
        } catch (const detail::GrowFu& g) {
            fu = (int)std::lcm((long)fu, (long)g.fu);
        } catch (const detail::GrowE& g) {
            e = std::lcm(e, g.e);
        }
    }

    int n = (int)deg;
    ClusterData out;

    // picture from the exact valuation matrix
    std::vector<std::vector<ValOrInf>> M((size_t)n, std::vector<ValOrInf>((size_t)n, ValOrInf::infinity()));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j)
                M[(size_t)i][(size_t)j] =
                    ValOrInf::of(BigRat(rat(*rB.m[(size_t)i][(size_t)j], rB.T->e) - rat(kScale)));
    try {
        out.picture = from_depth_matrix(M, vcOrig, sq > 0 ? 1 : -1);
    } catch (const UltrametricViolation&) {
        throw PrecisionUnstable("computed valuation matrix is not ultrametric");
    }

    // root system
    RootSystem& rs = out.roots;
    rs.tower = rB.T;
    rs.roots = rB.roots;
    rs.shift = kScale;
    rs.valMatrix = M;
    rs.frob = rB.frob;
    rs.inertiaGen = rB.inertia;
    rs.lead = f.lc();
    for (int i = 0; i < (int)out.picture.num_clusters(); ++i)
        rs.centres[out.picture[i].roots] = rs.roots[(size_t)out.picture[i].roots[0]];

    // theta^2 residues for star clusters of even / cotwin clusters
    const auto& F = *rB.T->F;
    Fq cunit = F.mul(F.from_int(unum), F.inv(F.from_int(uden)));
    std::set<int> stars;
    for (int i = 0; i < (int)out.picture.num_clusters(); ++i) {
        auto a = attributes(out.picture, i);
        if (a.isEven || a.isCotwin) stars.insert(star(out.picture, i));
    }
    bool ramifiedTheta = false;
    for (int t : stars) {
        const auto& id = out.picture[t].roots;
        TowerElt z = rs.centres.at(id);
        TowerElt Q = te_from_int(rB.T, BigInt(1));
        for (int r = 0; r < n; ++r)
            if (!std::binary_search(id.begin(), id.end(), r)) Q = Q * (z - rs.roots[(size_t)r]);
        auto mQ = te_val(Q);
        if (!mQ) throw PrecisionUnstable("theta^2 vanishes at the working precision");
        Fq u = F.mul(te_residue(Q, *mQ), cunit);
        rs.thetaResidue[id] = u;
        rs.thetaSquareClass[id] = square_class(u);
        // v(theta^2) in units of 1/denLcm; odd numerator means a ramified square root
        BigRat vtheta = BigRat(rat(vcOrig) + outside_depth_sum(out.picture, t));
        BigRat scaled = BigRat(vtheta * rat(rB.denLcm));
        if (mpz_odd_p(BigInt(scaled.get_num()).get_mpz_t())) ramifiedTheta = true;
    }

    // Galois layer
    GaloisLayer& l = out.layer;
    l.frob = rB.frob;
    l.inertiaGen = rB.inertia;
    l.tame = true;
    l.tameKnown = true;
    l.annotated = false;
    l.residueSize = spec.p;
    l.cSquare = (vcOrig % 2 == 0 && sq > 0) ? 1 : -1;
    l.eKR = ramifiedTheta ? 2 * rB.denLcm : rB.denLcm;

    auto cpF = induced_cluster_perm(out.picture, l.frob);
    if (cpF.empty()) throw PrecisionUnstable("Frobenius does not preserve the picture");
    std::vector<char> seen((size_t)out.picture.num_clusters(), 0);
    for (int i = 0; i < (int)out.picture.num_clusters(); ++i) {
        if (seen[(size_t)i]) continue;
        auto a = attributes(out.picture, i);
        if (!(a.isEven || a.isCotwin)) continue;
        std::vector<int> orbit = {i};
        seen[(size_t)i] = 1;
        for (int x = cpF[i]; x != i; x = cpF[x]) {
            orbit.push_back(x);
            seen[(size_t)x] = 1;
        }
        int sign = epsilon_frob(rs, out.picture, out.picture[i].roots);
        for (size_t k = 0; k + 1 < orbit.size(); ++k)
            l.epsFrob[out.picture[orbit[k]].roots] = 1;
        l.epsFrob[out.picture[orbit.back()].roots] = sign;
    }
    return out;
}

/// Multiset of v(r - s) over roots r of g and s of h, via the Newton polygon of
/// Res_x(g(x), h(x + y)) in y. Zero differences (shared roots) are omitted.
inline std::vector<BigRat> root_distance_profile(const RatPoly& g, const RatPoly& h, long p) {
    if (g.degree() < 1 || h.degree() < 1)
        throw std::invalid_argument("root_distance_profile: constant polynomial");
    if ((g.degree() > 1 && discriminant(g) == 0) || (h.degree() > 1 && discriminant(h) == 0))
        throw std::invalid_argument("root_distance_profile: polynomial is not squarefree");
    long D = g.degree() * h.degree();
    // interpolate R(y) = Res_x(g(x), h(x + y)) from D+1 sample points
    std::vector<BigRat> xs, ys;
    for (long t = 0; t <= D; ++t) {
        xs.push_back(rat(t));
        ys.push_back(resultant(g, h.shift(rat(t))));
    }
    RatPoly R = RatPoly::constant(rat(0));
    for (long i = 0; i <= D; ++i) {
        RatPoly term = RatPoly::constant(ys[(size_t)i]);
        for (long j = 0; j <= D; ++j) {
            if (j == i) continue;
            term = BigRat(1 / (xs[(size_t)i] - xs[(size_t)j])) *
                   (term * RatPoly({-xs[(size_t)j], rat(1)}));
        }
        R = R + term;
    }
    std::vector<BigRat> out;
    for (const auto& sgm : newton_polygon(R, p).segments)
        for (long k = 0; k < sgm.length; ++k) out.push_back(sgm.rootValuation);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace hyperlocal
