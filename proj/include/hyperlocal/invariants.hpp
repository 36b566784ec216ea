// Numeric invariants: Tamagawa numbers, inertia representations, conductor
// exponents and root numbers.
#pragma once
#include "bytree.hpp"
#include "cluster.hpp"
#include "models.hpp"
#include <algorithm>
#include <array>
#include <climits>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace hyperlocal {

struct UberevenPresent : std::runtime_error {
    UberevenPresent() : std::runtime_error("ubereven cluster present; use tamagawa_general") {}
};

struct OddDegreeUnsupported : std::runtime_error {
    OddDegreeUnsupported() : std::runtime_error("toric multiplicity formula needs even degree") {}
};

namespace detail {

inline std::vector<std::vector<int>> perm_orbits(const std::vector<int>& perm) {
    std::vector<std::vector<int>> out;
    std::vector<char> done(perm.size(), 0);
    for (int i = 0; i < (int)perm.size(); ++i) {
        if (done[i]) continue;
        std::vector<int> orb;
        for (int j = i; !done[j]; j = perm[j]) {
            done[j] = 1;
            orb.push_back(j);
        }
        out.push_back(std::move(orb));
    }
    return out;
}

inline std::vector<int> perm_power(const std::vector<int>& perm, long n) {
    std::vector<int> out(perm.size());
    for (int i = 0; i < (int)perm.size(); ++i) {
        int j = i;
        for (long k = 0; k < n; ++k) j = perm[j];
        out[i] = j;
    }
    return out;
}

/// epsilon_s(Frob^{q_s}) over the Frob-orbit of cluster s, via the cocycle rule
inline int eps_frob_orbit(const ClusterPicture& p, const GaloisLayer& l,
                          const std::vector<int>& orbit) {
    int sign = 1;
    for (int s : orbit) {
        auto it = l.epsFrob.find(p[s].roots);
        if (it == l.epsFrob.end() || it->second == 0) {
            std::string msg;
            for (int r : p[s].roots) msg += std::to_string(r) + " ";
            throw MissingEpsilon(msg);
        }
        sign *= it->second;
    }
    return sign;
}

/// orbit of cluster s under the permutation group generated by the given
/// cluster permutations
inline std::vector<int> joint_orbit(int s, const std::vector<std::vector<int>>& perms) {
    std::vector<int> orb = {s};
    std::set<int> seen = {s};
    for (size_t i = 0; i < orb.size(); ++i)
        for (const auto& perm : perms)
            if (seen.insert(perm[orb[i]]).second) orb.push_back(perm[orb[i]]);
    std::sort(orb.begin(), orb.end());
    return orb;
}

inline long as_long(const BigRat& r, const char* what) {
    if (!is_integer(r)) throw std::invalid_argument(std::string(what) + " is not an integer");
    if (!r.get_num().fits_slong_p()) throw std::overflow_error(what);
    return r.get_num().get_si();
}

}  // namespace detail

/// Tamagawa number for a semistable curve with no ubereven clusters
inline BigInt tamagawa_easy(const ClusterPicture& p, const GaloisLayer& l) {
    for (int i = 0; i < p.num_clusters(); ++i)
        if (attributes(p, i).isUbereven) throw UberevenPresent();
    BigInt prod = 1;
    for (const auto& orbit : orbits(p, l, Actor::frob)) {
        int s = orbit[0];
        if (s == p.top || p[s].size() % 2 != 0) continue;
        long twoDelta = detail::as_long(rat(2) * p[s].delta, "2*delta");
        int sign = detail::eps_frob_orbit(p, l, orbit);
        prod *= sign == 1 ? twoDelta : std::gcd(twoDelta, 2L);
    }
    return prod;
}

/// Tamagawa number of a semistable curve from its BY tree and the Frobenius
/// action (F, epsilon)
inline BigInt tamagawa_general(const BYTree& t, const BYAutomorphism& F) {
    int nv = (int)t.verts.size(), ne = (int)t.edges.size();
    auto adj = t.adjacency();

    // induced edge map: trees have at most one edge per vertex pair
    std::map<std::pair<int, int>, int> edgeAt;
    for (int e = 0; e < ne; ++e)
        edgeAt[{std::min(t.edges[e].a, t.edges[e].b), std::max(t.edges[e].a, t.edges[e].b)}] = e;
    std::vector<int> eMap(ne);
    for (int e = 0; e < ne; ++e) {
        int a = F.vertexMap[t.edges[e].a], b = F.vertexMap[t.edges[e].b];
        auto it = edgeAt.find({std::min(a, b), std::max(a, b)});
        if (it == edgeAt.end()) throw std::invalid_argument("vertex map is not an automorphism");
        eMap[e] = it->second;
    }

    // yellow components and the sign products over F-orbits
    auto comp = t.yellow_components();
    auto compOfVert = [&](int v) {
        for (auto [w, e] : adj[v])
            if (t.edges[e].yellow) return comp[e];
        throw std::logic_error("yellow vertex with no yellow edge");
    };
    auto vOrbits = detail::perm_orbits(F.vertexMap);
    auto eOrbits = detail::perm_orbits(eMap);
    std::vector<int> vOrbitId(nv), eOrbitId(ne);
    for (int i = 0; i < (int)vOrbits.size(); ++i)
        for (int v : vOrbits[i]) vOrbitId[v] = i;
    for (int i = 0; i < (int)eOrbits.size(); ++i)
        for (int e : eOrbits[i]) eOrbitId[e] = i;
    std::vector<char> inBhatV(nv), inBhatE(ne);
    for (int v = 0; v < nv; ++v) {
        if (!t.verts[v].yellow) {
            inBhatV[v] = 1;
            continue;
        }
        int sign = 1;
        for (int u : vOrbits[vOrbitId[v]]) sign *= F.componentSign.at(compOfVert(u));
        inBhatV[v] = sign == -1;
    }
    for (int e = 0; e < ne; ++e) {
        if (!t.edges[e].yellow) {
            inBhatE[e] = 1;
            continue;
        }
        int sign = 1;
        for (int f : eOrbits[eOrbitId[e]]) sign *= F.componentSign.at(comp[f]);
        inBhatE[e] = sign == -1;
    }

    // connected components of B-hat in T (edges carry their endpoints)
    std::vector<int> uf(nv);
    std::iota(uf.begin(), uf.end(), 0);
    std::function<int(int)> find = [&](int x) { return uf[x] == x ? x : uf[x] = find(uf[x]); };
    for (int e = 0; e < ne; ++e)
        if (inBhatE[e]) uf[find(t.edges[e].a)] = find(t.edges[e].b);
    std::vector<char> inBhatClosure(nv);
    for (int v = 0; v < nv; ++v) inBhatClosure[v] = inBhatV[v];
    for (int e = 0; e < ne; ++e)
        if (inBhatE[e]) inBhatClosure[t.edges[e].a] = inBhatClosure[t.edges[e].b] = 1;
    std::map<int, std::vector<int>> bhatComp;  // root -> member vertices
    for (int v = 0; v < nv; ++v)
        if (inBhatClosure[v]) bhatComp[find(v)].push_back(v);

    // Q: product of the sizes of the F-orbits of these components
    BigInt Q = 1;
    std::set<int> seenComp;
    for (auto& [root, members] : bhatComp) {
        if (seenComp.count(root)) continue;
        long orbitSize = 0;
        int v = members[0], r = root;
        do {
            seenComp.insert(r);
            ++orbitSize;
            v = F.vertexMap[v];
            r = find(v);
        } while (r != root);
        Q *= orbitSize;
    }

    // quotient graph T'
    int nV = (int)vOrbits.size();
    struct QEdge {
        int a, b;
        bool yellow, inBhat;
        long length, q;
    };
    std::vector<QEdge> qEdges;
    for (const auto& orb : eOrbits) {
        const auto& e = t.edges[orb[0]];
        QEdge qe;
        qe.a = vOrbitId[e.a];
        qe.b = vOrbitId[e.b];
        qe.yellow = e.yellow;
        qe.inBhat = inBhatE[orb[0]];
        qe.length = detail::as_long(e.length, "edge length");
        qe.q = (long)orb.size();
        qEdges.push_back(qe);
    }
    std::vector<char> qVertYellow(nV), qVertInBhat(nV);
    for (int i = 0; i < nV; ++i) {
        qVertYellow[i] = t.verts[vOrbits[i][0]].yellow;
        qVertInBhat[i] = inBhatV[vOrbits[i][0]];
    }

    // components of B-hat' (closure) in T'
    std::vector<int> uf2(nV);
    std::iota(uf2.begin(), uf2.end(), 0);
    std::function<int(int)> find2 = [&](int x) { return uf2[x] == x ? x : uf2[x] = find2(uf2[x]); };
    for (const auto& e : qEdges)
        if (e.inBhat) uf2[find2(e.a)] = find2(e.b);
    std::vector<char> inBhatClosure2(nV);
    for (int v = 0; v < nV; ++v) inBhatClosure2[v] = qVertInBhat[v];
    for (const auto& e : qEdges)
        if (e.inBhat) inBhatClosure2[e.a] = inBhatClosure2[e.b] = 1;
    std::vector<int> bhatReps;
    {
        std::set<int> roots;
        for (int v = 0; v < nV; ++v)
            if (inBhatClosure2[v] && roots.insert(find2(v)).second) bhatReps.push_back(v);
    }
    long r = (long)bhatReps.size() - 1;
    if (r < 0) throw std::invalid_argument("empty tree");

    // c~: components of B-hat' minus B' are the yellow parts; elements join at
    // yellow vertices
    BigInt ctilde = 1;
    {
        std::vector<int> deg(nV, 0);  // degree within B-hat'
        for (const auto& e : qEdges)
            if (e.inBhat) {
                ++deg[e.a];
                ++deg[e.b];
            }
        // union-find over nodes: vertex v -> v, edge i -> nV + i
        int nNodes = nV + (int)qEdges.size();
        std::vector<int> uf3(nNodes);
        std::iota(uf3.begin(), uf3.end(), 0);
        std::function<int(int)> find3 = [&](int x) {
            return uf3[x] == x ? x : uf3[x] = find3(uf3[x]);
        };
        for (int i = 0; i < (int)qEdges.size(); ++i) {
            if (!(qEdges[i].inBhat && qEdges[i].yellow)) continue;
            for (int v : {qEdges[i].a, qEdges[i].b})
                if (qVertYellow[v]) uf3[find3(nV + i)] = find3(v);
        }
        std::map<int, std::vector<int>> yellowComp;  // root -> edge indices
        for (int i = 0; i < (int)qEdges.size(); ++i)
            if (qEdges[i].inBhat && qEdges[i].yellow) yellowComp[find3(nV + i)].push_back(i);
        for (int v = 0; v < nV; ++v)  // isolated -1 yellow vertices
            if (qVertYellow[v] && qVertInBhat[v]) yellowComp[find3(v)];

        for (auto& [root, edgesX] : yellowComp) {
            std::set<int> boundary;  // blue vertices in the closure of X
            std::set<int> inner;     // all vertices touched by X
            for (int i : edgesX)
                for (int v : {qEdges[i].a, qEdges[i].b}) {
                    inner.insert(v);
                    if (!qVertYellow[v]) boundary.insert(v);
                }
            for (int v = 0; v < nV; ++v)
                if (qVertYellow[v] && qVertInBhat[v] && find3(v) == root) inner.insert(v);

            // (a): boundary points an even distance from a branch vertex of B-hat'
            long alpha = 0;
            for (int p0 : boundary) {
                // parity-BFS over B-hat' from p0
                std::vector<std::array<char, 2>> seen(nV, {0, 0});
                std::vector<std::pair<int, int>> stack = {{p0, 0}};
                seen[p0][0] = 1;
                bool hit = false;
                while (!stack.empty() && !hit) {
                    auto [v, par] = stack.back();
                    stack.pop_back();
                    if (deg[v] >= 3 && par == 0) hit = true;
                    for (const auto& e : qEdges) {
                        if (!e.inBhat) continue;
                        for (auto [x, y] : {std::pair{e.a, e.b}, std::pair{e.b, e.a}}) {
                            if (x != v) continue;
                            int np = (par + e.length) % 2;
                            if (!seen[y][np]) {
                                seen[y][np] = 1;
                                stack.push_back({y, np});
                            }
                        }
                    }
                }
                if (hit) ++alpha;
            }
            if (alpha > 0) {
                for (long i = 1; i < alpha; ++i) ctilde *= 2;
            } else if (boundary.size() == 2) {
                // distance between the two boundary points within the closure of X
                const long INF = LONG_MAX / 4;
                std::map<int, long> dist;
                for (int v : inner) dist[v] = INF;
                int src = *boundary.begin(), dst = *boundary.rbegin();
                dist[src] = 0;
                for (size_t it = 0; it < inner.size(); ++it)
                    for (int i : edgesX) {
                        auto& da = dist[qEdges[i].a];
                        auto& db = dist[qEdges[i].b];
                        da = std::min(da, db + qEdges[i].length);
                        db = std::min(db, da + qEdges[i].length);
                    }
                if (dist[dst] >= INF) throw std::logic_error("disconnected closure");
                ctilde *= std::gcd(dist[dst], 2L);
            } else {
                ctilde *= std::gcd((long)boundary.size(), 2L);
            }
        }
    }

    // sum over r-tuples of edges outside B-hat' separating its components
    std::vector<int> cands;
    for (int i = 0; i < (int)qEdges.size(); ++i)
        if (!qEdges[i].inBhat) cands.push_back(i);
    BigRat sum = 0;
    std::vector<int> pick;
    std::function<void(int)> rec = [&](int from) {
        if ((long)pick.size() == r) {
            std::vector<int> uf4(nV);
            std::iota(uf4.begin(), uf4.end(), 0);
            std::function<int(int)> find4 = [&](int x) {
                return uf4[x] == x ? x : uf4[x] = find4(uf4[x]);
            };
            for (int i = 0; i < (int)qEdges.size(); ++i) {
                if (std::find(pick.begin(), pick.end(), i) != pick.end()) continue;
                uf4[find4(qEdges[i].a)] = find4(qEdges[i].b);
            }
            std::set<int> roots;
            for (int v : bhatReps)
                if (!roots.insert(find4(v)).second) return;  // two components still joined
            BigRat term = 1;
            for (int i : pick) term *= rat(qEdges[i].length, qEdges[i].q);
            sum += term;
            return;
        }
        for (int i = from; i < (int)cands.size(); ++i) {
            pick.push_back(cands[i]);
            rec(i + 1);
            pick.pop_back();
        }
    };
    rec(0);

    BigRat total = BigRat(Q) * BigRat(ctilde) * sum;
    if (!is_integer(total) || total <= 0)
        throw std::logic_error("tamagawa number came out non-integral");
    return total.get_num();
}

/// conductor exponent of a semistable curve: #A, less one for an ubereven top
inline long conductor_semistable(const ClusterPicture& p) {
    long n = 0;
    for (int i = 0; i < p.num_clusters(); ++i) {
        if (i == p.top) continue;
        auto a = attributes(p, i);
        if (a.isEven && !a.isUbereven) ++n;
    }
    if (attributes(p, p.top).isUbereven) --n;
    return n;
}

namespace detail {

/// xi_s(a): 2-adic valuation of the denominator of n_s * a
inline long xi(long ns, const BigRat& a) {
    if (a == 0) return 0;
    return std::max(-ord2(rat(ns) * a), 0L);
}

inline bool tame_or_throw(const ClusterPicture& p, const GaloisLayer& l, long prime) {
    if (prime > 2 * p.genus() + 1) return true;
    if (l.tameKnown && l.tame) return true;
    throw NotTame();
}

}  // namespace detail

/// tame part of the conductor exponent (defined for wild curves as well)
inline long conductor_tame(const ClusterPicture& p, const GaloisLayer& l) {
    auto cp = induced_cluster_perm(p, l.inertiaGen);
    if (cp.empty()) throw std::runtime_error("inertia does not act on clusters");
    auto clusterOrbits = detail::perm_orbits(cp);
    std::vector<long> ns(p.num_clusters());
    for (const auto& orb : clusterOrbits)
        for (int s : orb) ns[s] = (long)orb.size();

    auto inU_parent = [&](int par) {
        return detail::xi(ns[par], lambda_tilde(p, par)) <= detail::xi(ns[par], p[par].depth);
    };
    // odd clusters != R: proper ones, and the singletons sitting solo in each
    long countU = 0;
    for (const auto& orb : clusterOrbits) {
        int s = orb[0];
        if (s == p.top || p[s].size() % 2 == 0 || p[s].parent == -1) continue;
        if (inU_parent(p[s].parent)) ++countU;
    }
    for (const auto& orb : detail::perm_orbits(l.inertiaGen)) {
        int home = p.home_of(orb[0]);  // smallest proper cluster containing the root
        if (inU_parent(home)) ++countU;
    }
    long countV = 0;
    for (const auto& orb : clusterOrbits) {
        int s = orb[0];
        if (attributes(p, s).isUbereven) continue;
        if (detail::xi(ns[s], lambda_tilde(p, s)) == 0) ++countV;
    }
    long bonus = (p.n % 2 == 0 && p.vc % 2 == 0) ? 1 : 0;
    return 2 * p.genus() - countU + countV + bonus;
}

/// annotated field data per Frobenius orbit of roots
struct FieldExtData {
    struct Orbit {
        long vDisc = 0;          // v(Delta_{K(r)/K})
        long degree = 1;         // [K(r):K]
        long residueDegree = 1;  // f_{K(r)/K}
    };
    std::vector<Orbit> orbits;
};

/// wild part of the conductor exponent
inline long conductor_wild(const FieldExtData& data) {
    long n = 0;
    for (const auto& o : data.orbits) {
        if (o.degree < o.residueDegree || o.residueDegree < 1)
            throw std::invalid_argument("invalid field extension data");
        n += o.vDisc - o.degree + o.residueDegree;
    }
    return n;
}

/// the inertia representation on H^1, as eigenvalue exponents (abelian part)
/// plus order-at-most-2 characters (toric part)
struct InertiaRep {
    std::vector<BigRat> abelianExponents;  // multiset, sorted, values in [0,1)
    struct ToricChar {
        int order = 1;  // 1 or 2
        bool ramified = false;
        auto operator<=>(const ToricChar&) const = default;
    };
    std::vector<ToricChar> toricCharacters;  // multiset, sorted
};

namespace detail {

inline BigRat frac1(const BigRat& x) {
    BigRat f = x - BigRat(floor_rat(x));
    return f;
}

/// descriptor of epsilon_s restricted to G_s, for s even or a cotwin
inline InertiaRep::ToricChar eps_descriptor(const ClusterPicture& p, const GaloisLayer& l,
                                            int s, const std::vector<int>& cpInertia) {
    auto inertiaOrbit = joint_orbit(s, {cpInertia});
    bool ram = epsilon_inertia(p, inertiaOrbit) == -1;
    auto cpF = induced_cluster_perm(p, l.frob);
    int signF = eps_frob_orbit(p, l, joint_orbit(s, {cpF}));
    InertiaRep::ToricChar c;
    c.ramified = ram;
    c.order = (ram || signF == -1) ? 2 : 1;
    return c;
}

}  // namespace detail

inline InertiaRep inertia_representation(const ClusterPicture& p, const GaloisLayer& l,
                                         long prime = 0) {
    detail::tame_or_throw(p, l, prime);
    InertiaRep rep;
    auto cpI = induced_cluster_perm(p, l.inertiaGen);
    auto cpF = induced_cluster_perm(p, l.frob);
    if (cpI.empty() || cpF.empty()) throw std::runtime_error("layer does not act on clusters");

    // abelian part: V_s per inertia orbit of principal non-ubereven clusters
    for (const auto& orbit : detail::perm_orbits(cpI)) {
        int s = orbit[0];
        auto a = attributes(p, s);
        if (!a.isPrincipal || a.isUbereven) continue;
        long n = (long)orbit.size();
        auto tau = detail::perm_power(l.inertiaGen, n);  // generator of I_s on roots
        auto cpTau = induced_cluster_perm(p, tau);

        // cycle type of I_s on the odd children of s
        std::vector<BigRat> exps;
        std::set<int> seenC;
        for (int ch : p[s].children) {
            if (p[ch].size() % 2 == 0 || seenC.count(ch)) continue;
            long c = 0;
            for (int j = ch; !seenC.count(j); j = cpTau[j]) {
                seenC.insert(j);
                ++c;
            }
            for (long j = 0; j < c; ++j) exps.push_back(rat(j, c));
        }
        std::set<int> seenR;
        for (int r : p[s].solo) {
            if (seenR.count(r)) continue;
            long c = 0;
            for (int j = r; !seenR.count(j); j = tau[j]) {
                seenR.insert(j);
                ++c;
            }
            for (long j = 0; j < c; ++j) exps.push_back(rat(j, c));
        }
        // minus the trivial representation
        auto z = std::find(exps.begin(), exps.end(), rat(0));
        if (z == exps.end()) throw std::logic_error("no trivial constituent in Q_l[s~]");
        exps.erase(z);
        // twist by gamma_s
        BigRat gamma = detail::frac1(rat(n) * lambda_tilde(p, s));
        for (auto& e : exps) e = detail::frac1(e + gamma);
        // minus the epsilon character for even clusters
        if (a.isEven) {
            BigRat epsExp = epsilon_inertia(p, orbit) == -1 ? rat(1, 2) : rat(0);
            auto it = std::find(exps.begin(), exps.end(), epsExp);
            if (it == exps.end()) throw std::logic_error("epsilon not a constituent of V_s");
            exps.erase(it);
        }
        // induce from I_s to I_K
        for (const auto& e : exps)
            for (long k = 0; k < n; ++k)
                rep.abelianExponents.push_back(detail::frac1((e + rat(k)) / rat(n)));
    }
    std::sort(rep.abelianExponents.begin(), rep.abelianExponents.end());

    // toric part: induced epsilon characters over Galois orbits of even
    // non-ubereven clusters and cotwins, minus epsilon_R
    std::set<int> seen;
    for (int s = 0; s < p.num_clusters(); ++s) {
        if (seen.count(s)) continue;
        auto a = attributes(p, s);
        // a cotwin below the top has the same epsilon character as its size-2g
        // child (both are defined through the same theta), so counting both
        // would overshoot the toric rank; only the top cluster can contribute
        // as a cotwin
        bool inX = (a.isEven && !a.isUbereven) || (a.isCotwin && s == p.top);
        auto orbit = detail::joint_orbit(s, {cpI, cpF});
        for (int x : orbit) seen.insert(x);
        if (!inX) continue;
        auto desc = detail::eps_descriptor(p, l, s, cpI);
        for (size_t j = 0; j < orbit.size(); ++j) rep.toricCharacters.push_back(desc);
    }
    auto aR = attributes(p, p.top);
    if (aR.isEven || aR.isCotwin) {
        auto desc = detail::eps_descriptor(p, l, p.top, cpI);
        auto it = std::find(rep.toricCharacters.begin(), rep.toricCharacters.end(), desc);
        if (it == rep.toricCharacters.end())
            throw std::logic_error("epsilon_R not a constituent of the toric part");
        rep.toricCharacters.erase(it);
    }
    std::sort(rep.toricCharacters.begin(), rep.toricCharacters.end());
    return rep;
}

namespace detail {

struct SquareClassUnknown : std::runtime_error {
    SquareClassUnknown()
        : std::runtime_error("square class of the leading coefficient is unknown") {}
};

/// <triv, rho_t>: Galois-fixed toric characters, with the ubereven-top correction
inline long one_rho_t(const ClusterPicture& p, const GaloisLayer& l) {
    auto cpI = induced_cluster_perm(p, l.inertiaGen);
    auto cpF = induced_cluster_perm(p, l.frob);
    if (cpI.empty() || cpF.empty()) throw std::runtime_error("layer does not act on clusters");
    long count = 0;
    std::set<int> seen;
    for (int s = 0; s < p.num_clusters(); ++s) {
        if (seen.count(s)) continue;
        auto orbit = joint_orbit(s, {cpI, cpF});
        for (int x : orbit) seen.insert(x);
        if (s == p.top || std::find(orbit.begin(), orbit.end(), p.top) != orbit.end()) continue;
        auto a = attributes(p, s);
        if (!((a.isEven && !a.isUbereven) || a.isCotwin)) continue;
        auto desc = eps_descriptor(p, l, s, cpI);
        if (desc.order == 1 && !desc.ramified) ++count;
    }
    if (attributes(p, p.top).isUbereven) {
        if (l.cSquare == 0) throw SquareClassUnknown();
        if (l.cSquare == 1) --count;
    }
    return count;
}

}  // namespace detail

/// local root number of the Jacobian, semistable case
inline int root_number_semistable(const ClusterPicture& p, const GaloisLayer& l) {
    return detail::one_rho_t(p, l) % 2 == 0 ? 1 : -1;
}

namespace detail {

inline int legendre(long a, long m) {  // (a/m) for odd prime m
    BigInt A = a, M = m;
    return mpz_legendre(A.get_mpz_t(), M.get_mpz_t());
}

inline bool is_prime_power(long e, long& base) {
    for (long l = 2; l * l <= e; ++l)
        if (e % l == 0) {
            while (e % l == 0) e /= l;
            base = l;
            return e == 1;
        }
    base = e;
    return e > 1;
}

inline int W_table(long q, long e) {
    long base = 0;
    if (e == 2) return q % 4 == 1 ? 1 : -1;                          // (-1/q)
    if (e == 4) return legendre(-2, q);                              // (-2/q)
    if (e % 2 == 1) return is_prime_power(e, base) ? legendre(q, base) : 1;
    if (e % 4 == 2) {
        long half = e / 2;
        if (is_prime_power(half, base) && base % 4 == 3) return q % 4 == 1 ? 1 : -1;
        return 1;
    }
    if (is_prime_power(e, base) && base == 2) return legendre(2, q);  // e = 2^k, k >= 3
    return 1;
}

}  // namespace detail

/// local root number of the Jacobian, tame case; q is the residue field size
inline int root_number_tame(const ClusterPicture& p, const GaloisLayer& l, long q,
                            long prime = 0) {
    if (p.n % 2 != 0) throw OddDegreeUnsupported();
    auto rep = inertia_representation(p, l, prime);

    // m_e = multiplicity of the exponent 1/e
    std::map<long, long> m;
    for (const auto& x : rep.abelianExponents) {
        if (x == 0) continue;
        if (x.get_num() == 1) m[x.get_den().get_si()]++;
    }
    long m2 = m.count(2) ? m[2] : 0;

    // m_t = multiplicity of the order-2 inertia character in the toric part;
    // the tame inertia quotient is procyclic, so this is the number of
    // ramified toric characters
    long mt = 0;
    for (const auto& tc : rep.toricCharacters)
        if (tc.ramified) ++mt;

    if (m2 % 2 != 0) throw std::logic_error("odd multiplicity at the order-2 character");
    int w = detail::one_rho_t(p, l) % 2 == 0 ? 1 : -1;
    long exp2 = mt + m2 / 2;
    if (exp2 % 2 != 0) w *= detail::W_table(q, 2);
    for (const auto& [e, me] : m)
        if (e >= 3 && me % 2 != 0) w *= detail::W_table(q, e);
    return w;
}

}  // namespace hyperlocal
