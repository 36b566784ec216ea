// Special fibres and models: the semistable special fibre with its linking
// chains, regular-model charts, dual graphs with homology and component
// groups, and the SNC special fibre in the tame case.
#pragma once
#include "bytree.hpp"
#include "cluster.hpp"
#include "fq.hpp"
#include "poly.hpp"
#include "reduction.hpp"

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace hyperlocal {

struct NonPrincipalTop : std::runtime_error {
    NonPrincipalTop() : std::runtime_error("top cluster is not principal") {}
};
struct NotSemistable : std::runtime_error {
    NotSemistable() : std::runtime_error("picture is not semistable") {}
};
struct NotTame : std::runtime_error {
    NotTame() : std::runtime_error("reduction is not tame") {}
};
struct NoComponent : std::runtime_error {
    NoComponent() : std::runtime_error("point does not reduce to a smooth component point") {}
};
struct AssumptionViolated : std::runtime_error {
    std::string name;
    explicit AssumptionViolated(const std::string& n)
        : std::runtime_error("assumption violated: " + n), name(n) {}
};

namespace detail {

inline std::string cluster_label(const std::vector<int>& roots) {
    std::string s = "{";
    for (size_t i = 0; i < roots.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(roots[i]);
    }
    return s + "}";
}

inline long require_count(const BigRat& r, const char* what) {
    if (!is_integer(r) || r < 0)
        throw std::logic_error(std::string("non-integral chain count for ") + what +
                               ": " + r.get_str());
    return r.get_num().get_si();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Fibre graphs
// ---------------------------------------------------------------------------

struct FibreComponent {
    std::string id;
    std::vector<int> cluster;  // id of the source cluster (orbit representative)
    long genus = 0;
    long multiplicity = 1;
    bool splitPair = false;  // one of a +/- pair
    int sign = 0;            // +1 / -1 within a split pair
    std::string equation;    // optional, over the residue field
};

/// A chain of P^1s between two components (or hanging off one, to = -1).
/// A chain with interior 0 between distinct endpoints is a direct intersection.
struct FibreChain {
    int from = -1, to = -1;
    long interior = 0;
    std::vector<long> multiplicities;  // per interior curve; empty means all 1
    BigRat length;                     // edge count (dual-graph form)
    std::string source;                // cluster / orbit that produced the chain
    int branch = 0;                    // +1/-1 for a +- pair of parallel chains
    BigRat t1, t2;                     // slope parameters (SNC form)
    long mu = 0;
    bool crossed = false;              // two extra P^1s of multiplicity crossMultiplicity
    long crossMultiplicity = 0;
};

struct FibreGraph {
    std::vector<FibreComponent> components;
    std::vector<FibreChain> chains;
    // Frobenius action, when known: component permutation, chain permutation
    // and a sign per chain (-1 = orientation reversed).
    std::vector<int> frobComponent;
    std::vector<int> frobChain;
    std::vector<int> frobChainSign;

    int find(const std::string& id) const {
        for (size_t i = 0; i < components.size(); ++i)
            if (components[i].id == id) return (int)i;
        return -1;
    }

    /// first Betti number of the underlying graph (open tails ignored)
    long betti() const {
        std::vector<int> par(components.size());
        for (size_t i = 0; i < par.size(); ++i) par[i] = (int)i;
        std::function<int(int)> root = [&](int x) {
            while (par[x] != x) x = par[x] = par[par[x]];
            return x;
        };
        long edges = 0, merges = 0;
        for (auto& c : chains) {
            if (c.to < 0 || c.from < 0) continue;
            ++edges;
            int a = root(c.from), b = root(c.to);
            if (a != b) {
                par[a] = b;
                ++merges;
            }
        }
        return edges - merges;
    }

    long total_genus() const {
        long g = betti();
        for (auto& c : components) g += c.genus;
        return g;
    }
};

// ---------------------------------------------------------------------------
// Residue-level data supplied by ingestion (or by hand in tests): rational
// centres per cluster and the leading terms c_s of principal clusters.
// ---------------------------------------------------------------------------

struct ResidueData {
    long prime = 0;
    FqFieldPtr F;
    std::map<std::vector<int>, BigRat> centre;  // per cluster, incl. singletons {r}
    std::map<std::vector<int>, Fq> leading;     // c_s per principal cluster
};

/// residue of a p-integral rational
inline Fq fq_of_rat(const FqField& F, const BigRat& x, long prime) {
    BigInt num = x.get_num(), den = x.get_den();
    if (val_p_int(den, prime) > 0) throw std::invalid_argument("residue of non-integral value");
    BigInt pz(prime);
    BigInt n = num % pz, d = den % pz;
    Fq r = F.mul(F.from_int(n), F.inv(F.from_int(d)));
    return r;
}

namespace detail {

inline BigRat pow_rat(long p, const BigRat& e) {
    if (!is_integer(e)) throw std::invalid_argument("fractional power of uniformiser");
    long k = e.get_num().get_si();
    BigInt num = 1;
    for (long i = 0; i < (k >= 0 ? k : -k); ++i) num *= p;
    return k >= 0 ? BigRat(num) : BigRat(1) / BigRat(num);
}

/// red_D(t) = (t - z)/p^d mod m
inline Fq red_in_disc(const ResidueData& res, const BigRat& z, const BigRat& d, const BigRat& t) {
    BigRat u = (t - z) / pow_rat(res.prime, d);
    return fq_of_rat(*res.F, u, res.prime);
}

inline std::string fq_str(const Fq& a) {
    if (a.c.size() == 1) return a.c[0].get_str();
    std::string s = "[";
    for (size_t i = 0; i < a.c.size(); ++i) {
        if (i) s += ",";
        s += a.c[i].get_str();
    }
    return s + "]";
}

inline std::vector<Fq> mul_linear(const std::vector<Fq>& a, const Fq& root, const FqField& F) {
    // a(X) * (X - root)
    std::vector<Fq> r(a.size() + 1, F.zero());
    for (size_t i = 0; i < a.size(); ++i) {
        r[i + 1] = F.add(r[i + 1], a[i]);
        r[i] = F.sub(r[i], F.mul(a[i], root));
    }
    return r;
}

inline std::string fqpoly_str(const std::vector<Fq>& c) {
    // render sum c_i X^i, high degree first
    std::string s;
    for (long i = (long)c.size() - 1; i >= 0; --i) {
        if (c[i].is_zero()) continue;
        if (!s.empty()) s += " + ";
        std::string coef = fq_str(c[i]);
        if (i == 0) s += coef;
        else {
            if (coef != "1") s += coef + "*";
            s += (i == 1) ? "X" : "X^" + std::to_string(i);
        }
    }
    return s.empty() ? "0" : s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Semistable special fibre
// ---------------------------------------------------------------------------

struct FibreGraph;

namespace detail {

/// Frobenius action on a fibre graph whose components/chains are keyed by
/// cluster labels. Split pairs map by epsilon of their cluster; a +- pair of
/// parallel chains maps by epsilon of an ubereven endpoint cluster when one
/// exists and by epsilon of the source cluster otherwise; loop chains pick up
/// an orientation sign epsilon.
template <typename Graph>
void fibre_frobenius(const ClusterPicture& p, const GaloisLayer& l,
                     const std::map<int, std::pair<int, int>>& comp, Graph& G) {
    auto fperm = induced_cluster_perm(p, l.frob);
    if (fperm.empty()) return;
    auto eps = [&](int s) {
        auto it = l.epsFrob.find(p[s].roots);
        if (it == l.epsFrob.end() || it->second == 0)
            throw MissingEpsilon(cluster_label(p[s].roots));
        return it->second;
    };
    auto epsKnown = [&](int s) {
        auto it = l.epsFrob.find(p[s].roots);
        return it != l.epsFrob.end() && it->second != 0;
    };
    G.frobComponent.assign(G.components.size(), -1);
    for (auto& [s, pr] : comp) {
        int img = fperm[s];
        if (pr.first == pr.second) {
            G.frobComponent[pr.first] = comp.at(img).first;
        } else {
            int e = eps(s);
            G.frobComponent[pr.first] = e > 0 ? comp.at(img).first : comp.at(img).second;
            G.frobComponent[pr.second] = e > 0 ? comp.at(img).second : comp.at(img).first;
        }
    }
    auto clusterOfLabel = [&](const std::string& lab) {
        for (int i = 0; i < p.num_clusters(); ++i)
            if (cluster_label(p[i].roots) == lab) return i;
        return -1;
    };
    G.frobChain.assign(G.chains.size(), -1);
    G.frobChainSign.assign(G.chains.size(), +1);
    for (size_t ci = 0; ci < G.chains.size(); ++ci) {
        auto& c = G.chains[ci];
        int sc = clusterOfLabel(c.source);
        if (sc < 0) continue;
        int isc = fperm[sc];
        std::string isrc = cluster_label(p[isc].roots);
        if (c.branch == 0) {
            // unique chain with this source; loops carry an orientation sign
            for (size_t cj = 0; cj < G.chains.size(); ++cj)
                if (G.chains[cj].source == isrc && G.chains[cj].branch == 0) {
                    G.frobChain[ci] = (int)cj;
                    bool loop = c.from == c.to ||
                                (G.components[c.from].splitPair &&
                                 G.components[c.from].cluster == G.components[c.to].cluster);
                    G.frobChainSign[ci] = (loop && epsKnown(sc)) ? eps(sc) : +1;
                }
            continue;
        }
        // +- pair: decide the image branch
        int sgn;
        int par = p[sc].parent;
        if (G.components[c.from].splitPair) sgn = eps(par >= 0 ? par : sc);
        else if (G.components[c.to].splitPair) sgn = eps(sc);
        else sgn = eps(sc);
        int want = c.branch * sgn;
        for (size_t cj = 0; cj < G.chains.size(); ++cj)
            if (G.chains[cj].source == isrc && G.chains[cj].branch == want)
                G.frobChain[ci] = (int)cj;
    }
}

}  // namespace detail

inline FibreGraph special_fibre_semistable(const ClusterPicture& p, const GaloisLayer& l,
                                           const ResidueData* res = nullptr) {
    if (!attributes(p, p.top).isPrincipal) throw NonPrincipalTop();
    if (!semistability(p, l).semistable) throw NotSemistable();

    FibreGraph G;
    std::map<int, std::pair<int, int>> comp;  // cluster -> (plus index, minus index)

    for (int i = 0; i < p.num_clusters(); ++i) {
        auto a = attributes(p, i);
        if (!a.isPrincipal) continue;
        std::string base = "G" + detail::cluster_label(p[i].roots);
        if (a.isUbereven) {
            FibreComponent plus{base + "+", p[i].roots, 0, 1, true, +1, ""};
            FibreComponent minus{base + "-", p[i].roots, 0, 1, true, -1, ""};
            comp[i] = {(int)G.components.size(), (int)G.components.size() + 1};
            G.components.push_back(plus);
            G.components.push_back(minus);
        } else {
            FibreComponent c{base, p[i].roots, (odd_children(p, i) - 1) / 2, 1, false, 0, ""};
            comp[i] = {(int)G.components.size(), (int)G.components.size()};
            G.components.push_back(c);
        }
    }

    // defining equations when residue data is available
    if (res) {
        for (int i = 0; i < p.num_clusters(); ++i) {
            auto a = attributes(p, i);
            if (!a.isPrincipal) continue;
            auto cs = res->leading.find(p[i].roots);
            if (cs == res->leading.end()) continue;
            const FqField& F = *res->F;
            BigRat z = res->centre.at(p[i].roots);
            // rhs = c_s * prod over odd children (X - red(o)) * prod over
            // half-integral-depth twins (X - red(t))^2
            std::vector<Fq> rhs = {cs->second};
            auto mul_lin = [&](const Fq& r0, int mult) {
                for (int m = 0; m < mult; ++m) rhs = detail::mul_linear(rhs, r0, F);
            };
            for (int r : p[i].solo)
                mul_lin(detail::red_in_disc(*res, z, p[i].depth, res->centre.at({r})), 1);
            for (int ch : p[i].children) {
                auto ca = attributes(p, ch);
                Fq r0 = detail::red_in_disc(*res, z, p[i].depth, res->centre.at(p[ch].roots));
                if (!ca.isEven) mul_lin(r0, 1);
                else if (ca.isTwin && p[ch].delta == rat(1, 2)) mul_lin(r0, 2);
            }
            if (!a.isUbereven) {
                G.components[comp[i].first].equation = "Y^2 = " + detail::fqpoly_str(rhs);
            } else {
                // perfect square: Y = +-sqrt(c_s) prod (X - red(t))
                Fq sq = F.zero();
                for (BigInt t = 0; t < F.q(); ++t) {
                    // search the (small) field for a square root of c_s
                    Fq cand = F.from_int(t);
                    if (F.k > 1) break;
                    if (F.mul(cand, cand) == cs->second) {
                        sq = cand;
                        break;
                    }
                }
                if (!sq.is_zero() || cs->second.is_zero()) {
                    std::vector<Fq> lin = {sq};
                    for (int ch : p[i].children) {
                        auto ca = attributes(p, ch);
                        if (ca.isTwin && p[ch].delta == rat(1, 2)) {
                            Fq r0 = detail::red_in_disc(*res, z, p[i].depth,
                                                        res->centre.at(p[ch].roots));
                            lin = detail::mul_linear(lin, r0, F);
                        }
                    }
                    G.components[comp[i].first].equation = "Y = " + detail::fqpoly_str(lin);
                    std::vector<Fq> neg = lin;
                    for (auto& c : neg) c = F.neg(c);
                    G.components[comp[i].second].equation = "Y = " + detail::fqpoly_str(neg);
                }
            }
        }
    }

    // linking chains
    for (int i = 0; i < p.num_clusters(); ++i) {
        if (!attributes(p, i).isPrincipal) continue;
        for (int ch : p[i].children) {
            auto ca = attributes(p, ch);
            FibreChain c;
            c.source = detail::cluster_label(p[ch].roots);
            if (ca.isTwin) {
                c.from = comp[i].second;
                c.to = comp[i].first;
                c.interior = detail::require_count(rat(2) * p[ch].delta - 1, "twin chain");
                c.length = rat(2) * p[ch].delta;
                G.chains.push_back(c);
            } else if (ca.isPrincipal && !ca.isEven) {
                c.from = comp[i].first;
                c.to = comp[ch].first;
                c.interior = detail::require_count(p[ch].delta / 2 - 1, "odd chain");
                c.length = p[ch].delta / 2;
                G.chains.push_back(c);
            } else if (ca.isPrincipal) {
                for (int b : {+1, -1}) {
                    FibreChain cb = c;
                    cb.branch = b;
                    cb.from = b > 0 ? comp[i].first : comp[i].second;
                    cb.to = b > 0 ? comp[ch].first : comp[ch].second;
                    cb.interior = detail::require_count(p[ch].delta - 1, "even chain");
                    cb.length = p[ch].delta;
                    G.chains.push_back(cb);
                }
            }
        }
        // principal cluster sitting under a cotwin: a loop through the
        // ramification point over the cotwin
        int pa = p[i].parent;
        if (pa != -1 && attributes(p, pa).isCotwin) {
            FibreChain c;
            c.source = detail::cluster_label(p[pa].roots);
            c.from = comp[i].second;
            c.to = comp[i].first;
            c.interior = detail::require_count(rat(2) * p[i].delta - 1, "cotwin chain");
            c.length = rat(2) * p[i].delta;
            G.chains.push_back(c);
        }
    }

    detail::fibre_frobenius(p, l, comp, G);
    return G;
}

// ---------------------------------------------------------------------------
// Reduction of a rational point
// ---------------------------------------------------------------------------

struct ReducedPoint {
    std::string componentId;
    bool atInfinity = false;
    Fq X, Y;
};

inline ReducedPoint reduction_of_point(const ClusterPicture& p, const GaloisLayer& l,
                                       const ResidueData& res, const BigRat& x,
                                       const BigRat& y) {
    if (!attributes(p, p.top).isPrincipal) throw NonPrincipalTop();
    if (!semistability(p, l).semistable) throw NotSemistable();
    const FqField& F = *res.F;

    auto vx = [&](const BigRat& t) {  // v_p of a rational
        if (t == 0) return ValOrInf::infinity();
        return ValOrInf::of(rat(val_p_int(t.get_num(), res.prime) -
                                val_p_int(t.get_den(), res.prime)));
    };

    for (int i = 0; i < p.num_clusters(); ++i) {
        auto a = attributes(p, i);
        if (!a.isPrincipal) continue;
        BigRat z = res.centre.at(p[i].roots);
        auto v = vx(x - z);
        bool inside = v.inf || v.value >= p[i].depth;
        if (!inside) {
            if (i == p.top) {
                return {"G" + detail::cluster_label(p[i].roots), true, F.zero(), F.zero()};
            }
            continue;
        }
        if (!is_integer(p[i].depth)) continue;
        Fq rx = detail::red_in_disc(res, z, p[i].depth, x);
        bool clears = true;
        for (int ch : p[i].children) {
            Fq rc = detail::red_in_disc(res, z, p[i].depth, res.centre.at(p[ch].roots));
            if (rx == rc) clears = false;
        }
        if (!clears) continue;
        // reduction formula
        BigRat nus = nu(p, i);
        BigRat yscale = y / detail::pow_rat(res.prime, nus / 2);
        Fq Y = fq_of_rat(F, yscale, res.prime);
        for (int ch : p[i].children) {
            if (!(p[ch].delta > rat(1, 2))) continue;
            Fq rc = detail::red_in_disc(res, z, p[i].depth, res.centre.at(p[ch].roots));
            long e = p[ch].size() / 2;
            Fq diff = F.sub(rx, rc);
            Y = F.mul(Y, F.inv(F.pow(diff, BigInt(e))));
        }
        std::string base = "G" + detail::cluster_label(p[i].roots);
        return {base, false, rx, Y};
    }
    throw NoComponent();
}

// ---------------------------------------------------------------------------
// Regular-model charts
// ---------------------------------------------------------------------------

struct Chart {
    std::vector<int> cluster;  // cluster cut out by the disc
    BigRat centre;
    long depth = 0;
    BigRat nuD;
    int omegaD = 0;
    RatPoly fD;                    // p^{-nu_D} f(p^d x + z)
    RatPoly gTop;                  // top chart only: t^{deg f} f_D(1/t)
    std::map<long, BigRat> gD;     // inner charts: t-exponent -> coefficient
                                   // (negative exponent e: coefficient of s^{-e})
    std::vector<std::string> removedU, removedW;
    std::vector<std::string> gluing;
    bool blowDown = false;  // omega = 1: multiplicity-2 P^1, self-intersection -1
};

struct ChartSet {
    long prime = 0;
    std::vector<Chart> charts;
};

inline ChartSet regular_model_charts(const RatPoly& f, long prime, const ClusterPicture& p,
                                     const GaloisLayer& l, const ResidueData& res) {
    if (!semistability(p, l).semistable) throw AssumptionViolated("semistable");
    for (int i = 0; i < p.num_clusters(); ++i) {
        if (i != p.top && p[i].size() == 2 * p.genus() + 1)
            throw AssumptionViolated("no cluster of size 2g+1 besides the top");
        if (!is_integer(p[i].depth) && !attributes(p, i).isTwin)
            throw AssumptionViolated("integral depths outside twins");
    }
    if (!is_integer(p[p.top].depth)) throw AssumptionViolated("integral top depth");

    struct Disc {
        int cluster;
        long depth;
    };
    std::vector<Disc> discs;
    long dR = p[p.top].depth.get_num().get_si();
    discs.push_back({p.top, dR});
    for (int i = 0; i < p.num_clusters(); ++i) {
        if (i == p.top) continue;
        long lo = floor_rat(p[p[i].parent].depth).get_si() + 1;
        long hi = floor_rat(p[i].depth).get_si();
        for (long d = std::max(lo, floor_rat(p[p[i].parent].depth).get_si() + 1); d <= hi; ++d)
            discs.push_back({i, d});
    }

    auto maximal_valid_subdiscs = [&](const Disc& D) {
        std::vector<Disc> out;
        for (int i = 0; i < p.num_clusters(); ++i) {
            if (!p.is_ancestor(D.cluster, i)) continue;
            long lo = (i == p.top) ? dR : floor_rat(p[p[i].parent].depth).get_si() + 1;
            long hi = floor_rat(p[i].depth).get_si();
            long d = D.depth + 1;
            if (d >= lo && d <= hi && (i == D.cluster || p[i].depth >= rat(d)))
                out.push_back({i, d});
        }
        return out;
    };

    ChartSet CS;
    CS.prime = prime;
    for (auto& D : discs) {
        Chart c;
        c.cluster = p[D.cluster].roots;
        c.centre = res.centre.at(p[D.cluster].roots);
        c.depth = D.depth;
        c.nuD = rat(p.vc) + rat(p[D.cluster].size()) * rat(D.depth) +
                outside_depth_sum(p, D.cluster);
        c.omegaD = (is_integer(c.nuD) && mpz_odd_p(c.nuD.get_num().get_mpz_t())) ? 1 : 0;
        c.blowDown = c.omegaD == 1;

        BigRat pd = detail::pow_rat(prime, rat(D.depth));
        RatPoly shifted = f.shift(c.centre).scale_arg(pd);
        c.fD = BigRat(rat(1) / detail::pow_rat(prime, c.nuD)) * shifted;

        for (auto& S : maximal_valid_subdiscs(D)) {
            BigRat zS = res.centre.at(p[S.cluster].roots);
            BigRat r = (zS - c.centre) / pd;
            c.removedU.push_back("x = " + detail::fq_str(fq_of_rat(*res.F, r, prime)));
        }

        bool top = D.cluster == p.top && D.depth == dR;
        if (top) {
            // g(t) = t^{deg f} f_D(1/t): reversed coefficients
            std::vector<BigRat> rev(c.fD.coeffs.rbegin(), c.fD.coeffs.rend());
            while ((long)rev.size() < f.degree() + 1) rev.push_back(rat(0));
            c.gTop = RatPoly{rev};
            // removed points of W: repeated roots of the reduction of g
            // (checked in tests; under the standing assumptions none arise
            // except from subdiscs, which live in the U charts)
        } else {
            // parent disc
            long dP = D.depth - 1;
            int pc = D.cluster;
            // the parent disc cuts the same cluster unless it crosses d_{P}
            while (pc != p.top && !(rat(dP) > p[p[pc].parent].depth)) pc = p[pc].parent;
            BigRat nuP = rat(p.vc) + rat(p[pc].size()) * rat(dP) + outside_depth_sum(p, pc);
            // F(t) = t^{nu_D - nu_P} f_D(1/t)
            long shiftExp = detail::require_count(c.nuD - nuP, "chart exponent");
            for (long i = 0; i <= c.fD.degree(); ++i) {
                BigRat coef = c.fD.coeff(i);
                if (coef == 0) continue;
                long e = shiftExp - i;
                if (e >= 0) c.gD[e] += coef;
                else c.gD[e] += coef / detail::pow_rat(prime, rat(-e));
            }
            // removed points of W: the other maximal valid subdiscs of P(D),
            // in the s coordinate
            Disc PD{pc, dP};
            BigRat pdm1 = detail::pow_rat(prime, rat(dP));
            for (auto& S : maximal_valid_subdiscs(PD)) {
                if (S.cluster == D.cluster && S.depth == D.depth) continue;
                BigRat zS = res.centre.at(p[S.cluster].roots);
                BigRat r = (zS - c.centre) / pdm1;
                c.removedW.push_back("s = " + detail::fq_str(fq_of_rat(*res.F, r, prime)));
            }
            BigRat zP = res.centre.at(p[pc].roots);
            std::string off = BigRat((c.centre - zP) / pdm1).get_str();
            c.gluing.push_back("t = 1/x_D = p/(x_P - (" + off + "))");
            c.gluing.push_back("s = p*x_D = x_P - (" + off + ")");
            long wexp = floor_rat(c.nuD / 2).get_si() - floor_rat(nuP / 2).get_si();
            c.gluing.push_back("w = t^" + std::to_string(wexp) + " y_D = s^" +
                               std::to_string(-wexp) + " y_P");
        }
        CS.charts.push_back(std::move(c));
    }
    return CS;
}

// ---------------------------------------------------------------------------
// Dual graph and homology
// ---------------------------------------------------------------------------

inline FibreGraph dual_graph(const ClusterPicture& p, const GaloisLayer& l) {
    if (!semistability(p, l).semistable) throw NotSemistable();

    FibreGraph G;
    std::map<int, std::pair<int, int>> comp;
    for (int i = 0; i < p.num_clusters(); ++i) {
        auto a = attributes(p, i);
        if (!a.isPrincipal) continue;
        std::string base = "v" + detail::cluster_label(p[i].roots);
        if (a.isUbereven) {
            comp[i] = {(int)G.components.size(), (int)G.components.size() + 1};
            G.components.push_back({base + "+", p[i].roots, 0, 1, true, +1, ""});
            G.components.push_back({base + "-", p[i].roots, 0, 1, true, -1, ""});
        } else {
            comp[i] = {(int)G.components.size(), (int)G.components.size()};
            G.components.push_back(
                {base, p[i].roots, (odd_children(p, i) - 1) / 2, 1, false, 0, ""});
        }
    }

    auto add = [&](int from, int to, BigRat len, const std::string& src, int branch) {
        FibreChain c;
        c.from = from;
        c.to = to;
        c.length = len;
        c.interior = detail::require_count(len, src.c_str()) - 1;
        c.source = src;
        c.branch = branch;
        G.chains.push_back(c);
    };

    for (int i = 0; i < p.num_clusters(); ++i) {
        if (!attributes(p, i).isPrincipal) continue;
        for (int ch : p[i].children) {
            auto ca = attributes(p, ch);
            std::string src = detail::cluster_label(p[ch].roots);
            if (ca.isTwin)
                add(comp[i].second, comp[i].first, rat(2) * p[ch].delta, src, 0);
            else if (ca.isPrincipal && !ca.isEven)
                add(comp[i].first, comp[ch].first, p[ch].delta / 2, src, 0);
            else if (ca.isPrincipal) {
                add(comp[i].first, comp[ch].first, p[ch].delta, src, +1);
                add(comp[i].second, comp[ch].second, p[ch].delta, src, -1);
            }
        }
        int pa = p[i].parent;
        if (pa != -1 && attributes(p, pa).isCotwin)
            add(comp[i].second, comp[i].first, rat(2) * p[i].delta,
                detail::cluster_label(p[pa].roots), 0);
    }

    // non-principal top of the form R = s1 u s2
    if (!attributes(p, p.top).isPrincipal && !attributes(p, p.top).isCotwin) {
        auto& kids = p[p.top].children;
        if (kids.size() == 2 && p[p.top].solo.empty()) {
            int s1 = kids[0], s2 = kids[1];
            auto a1 = attributes(p, s1), a2 = attributes(p, s2);
            std::string src = detail::cluster_label(p[p.top].roots);
            if (a1.isPrincipal && a2.isPrincipal && !a1.isEven && !a2.isEven)
                add(comp[s1].first, comp[s2].first, (p[s1].delta + p[s2].delta) / 2, src, 0);
            else if (a1.isPrincipal && a2.isPrincipal) {
                add(comp[s1].first, comp[s2].first, p[s1].delta + p[s2].delta, src, +1);
                add(comp[s1].second, comp[s2].second, p[s1].delta + p[s2].delta, src, -1);
            } else {
                if (a2.isPrincipal) std::swap(s1, s2);
                if (attributes(p, s1).isPrincipal && attributes(p, s2).isTwin)
                    add(comp[s1].second, comp[s1].first,
                        rat(2) * (p[s1].delta + p[s2].delta), src, 0);
            }
        }
    }

    detail::fibre_frobenius(p, l, comp, G);
    return G;
}

struct Homology {
    long rank = 0;
    std::vector<std::string> basis;  // labels of the chosen basis vectors
    std::vector<std::vector<long>> frobMatrix;
    std::vector<std::vector<long>> gram;
};

inline Homology homology(const ClusterPicture& p, const GaloisLayer& l) {
    if (!semistability(p, l).semistable) throw NotSemistable();
    std::vector<int> A;
    for (int i = 0; i < p.num_clusters(); ++i) {
        auto at = attributes(p, i);
        if (i != p.top && at.isEven && !at.isUbereven) A.push_back(i);
    }
    bool topUber = attributes(p, p.top).isUbereven;

    auto pairing = [&](int s1, int s2) -> long {
        int st1 = star(p, s1), st2 = star(p, s2);
        if (st1 != st2) return 0;
        BigRat base = st1 == p.top ? p[p.top].depth : p[p[st1].parent].depth;
        BigRat v = rat(2) * (p[wedge(p, s1, s2)].depth - base);
        return detail::require_count(v, "length pairing");
    };

    // basis of Z[A], or of the corank-1 submodule when the top is ubereven
    std::vector<std::vector<long>> basisVecs;  // coordinates in Z[A]
    Homology H;
    if (!topUber) {
        for (size_t i = 0; i < A.size(); ++i) {
            std::vector<long> v(A.size(), 0);
            v[i] = 1;
            basisVecs.push_back(v);
            H.basis.push_back("l" + detail::cluster_label(p[A[i]].roots));
        }
    } else {
        std::vector<int> B;
        for (size_t i = 0; i < A.size(); ++i)
            if (star(p, A[i]) == p.top) B.push_back((int)i);
        for (size_t i = 0; i < A.size(); ++i) {
            if (!B.empty() && (int)i == B[0]) continue;
            std::vector<long> v(A.size(), 0);
            v[i] = 1;
            std::string label = "l" + detail::cluster_label(p[A[i]].roots);
            if (std::find(B.begin(), B.end(), (int)i) != B.end()) {
                v[B[0]] = -1;
                label += " - l" + detail::cluster_label(p[A[B[0]]].roots);
            }
            basisVecs.push_back(v);
            H.basis.push_back(label);
        }
    }
    H.rank = (long)basisVecs.size();

    // Gram matrix
    std::vector<std::vector<long>> P(A.size(), std::vector<long>(A.size(), 0));
    for (size_t i = 0; i < A.size(); ++i)
        for (size_t j = 0; j < A.size(); ++j) P[i][j] = pairing(A[i], A[j]);
    H.gram.assign(H.rank, std::vector<long>(H.rank, 0));
    for (long i = 0; i < H.rank; ++i)
        for (long j = 0; j < H.rank; ++j) {
            long s = 0;
            for (size_t a = 0; a < A.size(); ++a)
                for (size_t b = 0; b < A.size(); ++b)
                    s += basisVecs[i][a] * P[a][b] * basisVecs[j][b];
            H.gram[i][j] = s;
        }

    // Frobenius
    auto fperm = induced_cluster_perm(p, l.frob);
    if (!fperm.empty()) {
        std::vector<long> idxOf(p.num_clusters(), -1);
        for (size_t i = 0; i < A.size(); ++i) idxOf[A[i]] = (long)i;
        auto eps = [&](int s) {
            auto it = l.epsFrob.find(p[s].roots);
            if (it == l.epsFrob.end() || it->second == 0)
                throw MissingEpsilon(detail::cluster_label(p[s].roots));
            return it->second;
        };
        H.frobMatrix.assign(H.rank, std::vector<long>(H.rank, 0));
        for (long j = 0; j < H.rank; ++j) {
            std::vector<long> w(A.size(), 0);  // image of basis vector j in Z[A]
            for (size_t a = 0; a < A.size(); ++a) {
                if (basisVecs[j][a] == 0) continue;
                long img = idxOf[fperm[A[a]]];
                if (img < 0) throw std::logic_error("frobenius leaves the generator set");
                w[img] += basisVecs[j][a] * eps(A[a]);
            }
            // express w in the basis
            std::vector<long> coord(H.rank, 0);
            std::vector<long> recon(A.size(), 0);
            for (long i = 0; i < H.rank; ++i) {
                // the basis is triangular: each vector has a unique +1 slot
                for (size_t a = 0; a < A.size(); ++a)
                    if (basisVecs[i][a] == 1) {
                        coord[i] = w[a];
                        break;
                    }
            }
            for (long i = 0; i < H.rank; ++i)
                for (size_t a = 0; a < A.size(); ++a) recon[a] += coord[i] * basisVecs[i][a];
            if (recon != w) throw std::logic_error("frobenius image outside homology");
            for (long i = 0; i < H.rank; ++i) H.frobMatrix[i][j] = coord[i];
        }
    }
    return H;
}

/// invariant factors (> 1) of the cokernel of a symmetric integer pairing
inline std::vector<BigInt> component_group(std::vector<std::vector<BigInt>> m) {
    std::vector<BigInt> out;
    size_t n = m.size();
    size_t done = 0;
    while (done < n) {
        // find a pivot with smallest nonzero absolute value
        size_t pi = done, pj = done;
        bool any = false;
        for (size_t i = done; i < n; ++i)
            for (size_t j = done; j < n; ++j)
                if (m[i][j] != 0 && (!any || abs(m[i][j]) < abs(m[pi][pj]))) {
                    pi = i;
                    pj = j;
                    any = true;
                }
        if (!any) break;
        std::swap(m[done], m[pi]);
        for (size_t i = 0; i < n; ++i) std::swap(m[i][done], m[i][pj]);
        bool again = true;
        while (again) {
            again = false;
            for (size_t i = done + 1; i < n; ++i) {
                BigInt q = m[i][done] / m[done][done];
                if (q != 0)
                    for (size_t j = done; j < n; ++j) m[i][j] -= q * m[done][j];
                if (m[i][done] != 0) {
                    std::swap(m[done], m[i]);
                    again = true;
                }
            }
            for (size_t j = done + 1; j < n; ++j) {
                BigInt q = m[done][j] / m[done][done];
                if (q != 0)
                    for (size_t i = done; i < n; ++i) m[i][j] -= q * m[i][done];
                if (m[done][j] != 0) {
                    for (size_t i = 0; i < n; ++i) std::swap(m[i][done], m[i][j]);
                    again = true;
                }
            }
        }
        out.push_back(abs(m[done][done]));
        ++done;
    }
    // enforce divisibility d_1 | d_2 | ...
    for (size_t i = 0; i + 1 < out.size(); ++i)
        for (size_t j = i + 1; j < out.size(); ++j) {
            BigInt g = gcd(out[i], out[j]);
            BigInt lc = out[i] / g * out[j];
            out[i] = g;
            out[j] = lc;
        }
    std::sort(out.begin(), out.end());
    std::vector<BigInt> nontrivial;
    for (auto& d : out)
        if (d > 1) nontrivial.push_back(d);
    return nontrivial;
}

inline std::vector<BigInt> component_group(const std::vector<std::vector<long>>& m) {
    std::vector<std::vector<BigInt>> z(m.size());
    for (size_t i = 0; i < m.size(); ++i)
        for (long x : m[i]) z[i].push_back(BigInt(x));
    return component_group(std::move(z));
}

// ---------------------------------------------------------------------------
// Hirzebruch-Jung chains
// ---------------------------------------------------------------------------

struct HJChain {
    BigRat t1, t2;
    long mu = 1;
    std::vector<BigRat> fractions;     // mu t1 = m0/d0 > ... > m_{n+1}/d_{n+1} = mu t2
    std::vector<long> multiplicities;  // mu d_i for the interior terms
};

/// minimal chain mu t1 = m0/d0 > ... > mu t2 with m_i d_{i+1} - m_{i+1} d_i = 1
inline HJChain hj_chain(const BigRat& t1, const BigRat& t2, long mu) {
    if (!(t1 > t2)) throw std::invalid_argument("hj_chain needs t1 > t2");
    HJChain out;
    out.t1 = t1;
    out.t2 = t2;
    out.mu = mu;
    BigRat cur = rat(mu) * t1, target = rat(mu) * t2;
    out.fractions.push_back(cur);
    auto det1 = [](const BigRat& a, const BigRat& b) {
        return a.get_num() * b.get_den() - b.get_num() * a.get_den() == 1;
    };
    while (!det1(cur, target)) {
        BigInt m = cur.get_num(), d = cur.get_den();
        // smallest d' > 0 with m d' = 1 mod d, then step by d until >= target
        BigInt dp;
        if (d == 1) dp = 1;
        else {
            BigInt g, u, v;
            mpz_gcdext(g.get_mpz_t(), u.get_mpz_t(), v.get_mpz_t(), m.get_mpz_t(),
                       d.get_mpz_t());
            dp = u % d;
            if (dp <= 0) dp += d;
        }
        auto frac = [&](const BigInt& dd) {
            BigRat r(m * dd - 1, d * dd);
            r.canonicalize();
            return r;
        };
        while (frac(dp) < target) dp += d;
        cur = frac(dp);
        out.fractions.push_back(cur);
    }
    out.fractions.push_back(target);
    for (size_t i = 1; i + 1 < out.fractions.size(); ++i)
        out.multiplicities.push_back(mu * (long)out.fractions[i].get_den().get_si());
    return out;
}

// ---------------------------------------------------------------------------
// SNC special fibre (tame case)
// ---------------------------------------------------------------------------

inline FibreGraph snc_special_fibre(const ClusterPicture& p, const GaloisLayer& l,
                                    long prime) {
    if (!attributes(p, p.top).isPrincipal) throw NonPrincipalTop();
    if (!is_tame(p, l, prime)) throw NotTame();

    auto orbs = orbits(p, l, Actor::inertia);
    std::vector<int> orbitOf(p.num_clusters(), -1);
    for (size_t o = 0; o < orbs.size(); ++o)
        for (int s : orbs[o]) orbitOf[s] = (int)o;

    struct OInfo {
        int rep = -1;
        long size = 0;
        ClusterAttributes at;
        BigRat d, lambda, nuRep;
        long e = 1;
        BigInt b = 1, bp = 1;
        long gss = 0, gX = 0;
        int eps = 0;  // only meaningful for even orbits
    };
    std::vector<OInfo> info(orbs.size());
    long g = p.genus();
    for (size_t o = 0; o < orbs.size(); ++o) {
        OInfo& I = info[o];
        I.rep = *std::min_element(orbs[o].begin(), orbs[o].end());
        I.size = (long)orbs[o].size();
        I.at = attributes(p, I.rep);
        I.d = p[I.rep].depth;
        I.lambda = lambda_tilde(p, I.rep);
        I.nuRep = nu(p, I.rep);
        BigRat A = rat(I.size) * I.d, B = rat(I.size) * I.nuRep / 2;
        BigInt lc;
        mpz_lcm(lc.get_mpz_t(), A.get_den().get_mpz_t(), B.get_den().get_mpz_t());
        I.e = lc.get_si();
        I.b = I.d.get_den();
        BigInt gsz;
        mpz_gcd_ui(gsz.get_mpz_t(), I.b.get_mpz_t(), (unsigned long)I.size);
        I.bp = I.b / gsz;
        I.gss = I.at.isUbereven ? 0 : (odd_children(p, I.rep) - 1) / 2;
        if (I.at.isEven) I.eps = epsilon_inertia(p, orbs[o]);
        BigRat Xlam = rat(I.size) * I.lambda;
        long bp = I.bp.get_si();
        if (is_integer(Xlam)) I.gX = I.gss / bp;
        else if (bp % 2 == 0) I.gX = (2 * I.gss + bp) / (2 * bp);
        else I.gX = 0;
    }

    FibreGraph G;
    std::map<int, std::pair<int, int>> comp;  // orbit -> (plus, minus)
    for (size_t o = 0; o < orbs.size(); ++o) {
        OInfo& I = info[o];
        if (!I.at.isPrincipal) continue;
        std::string base = "G" + detail::cluster_label(p[I.rep].roots);
        if (I.at.isUbereven && I.eps == 1) {
            comp[(int)o] = {(int)G.components.size(), (int)G.components.size() + 1};
            G.components.push_back({base + "+", p[I.rep].roots, I.gX, I.size * I.e, true, +1, ""});
            G.components.push_back({base + "-", p[I.rep].roots, I.gX, I.size * I.e, true, -1, ""});
        } else {
            long mult = (I.at.isUbereven && I.eps == -1) ? 2 * I.size * I.e : I.size * I.e;
            comp[(int)o] = {(int)G.components.size(), (int)G.components.size()};
            G.components.push_back({base, p[I.rep].roots, I.gX, mult, false, 0, ""});
        }
    }

    auto add_chain = [&](int from, int to, const BigRat& t1, const BigRat& t2, long mu,
                         const std::string& src, int branch, bool crossed) {
        FibreChain c;
        c.from = from;
        c.to = to;
        c.t1 = t1;
        c.t2 = t2;
        c.mu = mu;
        c.source = src;
        c.branch = branch;
        if (t1 > t2) {
            auto hj = hj_chain(t1, t2, mu);
            c.multiplicities = hj.multiplicities;
            c.interior = (long)hj.multiplicities.size();
        }
        c.crossed = crossed;
        if (crossed) c.crossMultiplicity = mu / 2;
        G.chains.push_back(c);
    };

    // stable child orbits and singleton data per orbit
    auto child_orbits = [&](size_t o) {
        std::set<int> out;
        for (int ch : p[info[o].rep].children) out.insert(orbitOf[ch]);
        return out;
    };
    auto root_orbit_size = [&](int r) {
        long n = 0;
        int j = r;
        do {
            ++n;
            j = l.inertiaGen[j];
        } while (j != r);
        return n;
    };
    auto has_stable_child = [&](size_t o, int mode) {
        // mode 0: any child orbit; 1: odd proper; 2: singleton
        if (mode != 2)
            for (int co : child_orbits(o)) {
                if (mode == 1 && info[co].at.isEven) continue;
                if (info[co].size == info[o].size) return true;
            }
        if (mode != 1)
            for (int r : p[info[o].rep].solo)
                if (root_orbit_size(r) == info[o].size) return true;
        return false;
    };

    for (size_t o = 0; o < orbs.size(); ++o) {
        OInfo& I = info[o];
        if (!I.at.isPrincipal) continue;
        auto pr = comp[(int)o];
        std::string selfSrc = detail::cluster_label(p[I.rep].roots);

        // first table: linking chains to child orbits
        for (int co : child_orbits(o)) {
            OInfo& C = info[co];
            std::string src = detail::cluster_label(p[C.rep].roots);
            BigRat delta = p[C.rep].delta;
            if (C.at.isPrincipal && !C.at.isEven) {
                add_chain(pr.first, comp[co].first, -I.lambda, -I.lambda - delta / 2, C.size,
                          src, 0, false);
            } else if (C.at.isPrincipal && C.eps == 1) {
                add_chain(pr.first, comp[co].first, -I.d, -C.d, C.size, src, +1, false);
                add_chain(pr.second, comp[co].second, -I.d, -C.d, C.size, src, -1, false);
            } else if (C.at.isPrincipal && C.eps == -1) {
                add_chain(pr.first, comp[co].first, -I.d, -C.d, 2 * C.size, src, 0, false);
            } else if (C.at.isTwin && C.eps == 1) {
                add_chain(pr.second, pr.first, -I.d, -I.d - rat(2) * delta, C.size, src, 0,
                          false);
            } else if (C.at.isTwin && C.eps == -1) {
                // crossed tail
                add_chain(pr.first, -1, -I.d + rat(1, 2 * I.size), -C.d, 2 * I.size,
                          src + " crossed", 0, true);
            }
        }

        // second table: tails, only on components with e_X > 1
        if (I.e <= 1) continue;
        auto tail = [&](int from, const BigRat& t1, long mu, const std::string& why) {
            BigRat t2 = floor_rat(rat(mu) * t1 - 1) / rat(mu);
            add_chain(from, -1, t1, t2, mu, selfSrc + " tail " + why, 0, false);
        };
        bool isTop = I.rep == p.top;
        if (isTop && p[p.top].size() == 2 * g + 1) {
            tail(pr.first, rat(g + 1) * I.d - I.lambda, 1, "odd-top");
        }
        if (isTop && p[p.top].size() == 2 * g + 2 && I.eps == 1) {
            tail(pr.first, -I.d, 1, "even-top+");
            tail(pr.second, -I.d, 1, "even-top-");
        }
        if (isTop && p[p.top].size() == 2 * g + 2 && I.e > 2 && I.eps == -1) {
            tail(pr.first, -I.d, 2, "even-top-eps");
        }
        {
            long nsing = (long)p[I.rep].solo.size();
            bool allBig = nsing >= 2;
            // the singleton count is orbit-independent; every cluster in the
            // orbit is a depth-preserving image of the representative
            if (allBig && rat(I.e) > BigRat(I.b) / rat(I.size)) {
                BigRat cnt = rat(I.size) * rat(nsing) / BigRat(I.b);
                long n = detail::require_count(cnt, "tail count");
                for (long i = 0; i < n; ++i)
                    tail(pr.first, -I.lambda, I.b.get_si(), "singletons");
            }
        }
        if (!has_stable_child(o, 0) && (I.at.isUbereven || I.gss > 0)) {
            if (!is_integer(I.lambda) && I.e > 2) {
                tail(pr.first, -I.d, 2 * I.size, "deep+");
            } else if (is_integer(I.lambda)) {
                tail(pr.first, -I.d, I.size, "split+");
                tail(pr.second, -I.d, I.size, "split-");
            }
        }
        if (!I.at.isUbereven && !has_stable_child(o, 1) &&
            (I.gss == 0 || has_stable_child(o, 2))) {
            tail(pr.first, -I.lambda, I.size, "odd-part");
        }
    }
    return G;
}

}  // namespace hyperlocal
