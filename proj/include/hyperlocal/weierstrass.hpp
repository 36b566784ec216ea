// Differentials, discriminants, minimal Weierstrass criteria, equivalence
// moves and canonical cluster pictures.
#pragma once
#include "bytree.hpp"
#include "cluster.hpp"
#include "models.hpp"     // NotTame
#include "reduction.hpp"  // semistability
#include <algorithm>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace hyperlocal {

struct ResidueFieldTooSmall : std::runtime_error {
    ResidueFieldTooSmall(long q, long bound)
        : std::runtime_error("residue field size " + std::to_string(q) +
                             (q == 0 ? " (unknown)" : "") + " not > " + std::to_string(bound)) {}
};

struct MovePreconditionFailed : std::runtime_error {
    explicit MovePreconditionFailed(const std::string& clause)
        : std::runtime_error("move precondition failed: " + clause) {}
};

/// Greedy choice of clusters s_0, ..., s_{g-1} maximising
/// e_{t,i} = nu_t/2 - d_t - sum_{j<i} d_{s_j ^ t}, with e_i the maxima.
struct DifferentialBasis {
    std::vector<BigRat> e;
    std::vector<std::vector<int>> chosen;  // canonical ids of s_0..s_{g-1}
};

inline DifferentialBasis differential_exponents(const ClusterPicture& p) {
    DifferentialBasis out;
    std::vector<int> picked;
    for (long i = 0; i < p.genus(); ++i) {
        std::vector<BigRat> e(p.num_clusters());
        std::vector<int> best;
        for (int t = 0; t < (int)p.num_clusters(); ++t) {
            e[t] = nu(p, t) / 2 - p[t].depth;
            for (int s : picked) e[t] -= p[wedge(p, s, t)].depth;
            if (best.empty() || e[t] > e[best[0]])
                best = {t};
            else if (e[t] == e[best[0]])
                best.push_back(t);
        }
        // ties: a cluster contained in another candidate loses; among the
        // survivors (pairwise incomparable) take the smallest canonical id
        std::vector<int> maximal;
        for (int t : best) {
            bool covered = false;
            for (int u : best)
                if (u != t && p.is_ancestor(u, t)) covered = true;
            if (!covered) maximal.push_back(t);
        }
        int s = *std::min_element(maximal.begin(), maximal.end(),
                                  [&](int a, int b) { return p[a].roots < p[b].roots; });
        out.e.push_back(e[s]);
        out.chosen.push_back(p[s].roots);
        picked.push_back(s);
    }
    return out;
}

/// v(omega_circ / omega) = (4g v(c) + sum_even d_s(|s|-2)|s| + sum_odd d_s(|s|-1)^2)/8,
/// delta_R = d_R (the top cluster's relative depth already is its depth)
inline BigRat omega_valuation(const ClusterPicture& p) {
    BigRat sum = rat(4 * p.genus() * p.vc);
    for (int i = 0; i < (int)p.num_clusters(); ++i) {
        long sz = p[i].size();
        sum += p[i].delta * (sz % 2 == 0 ? rat((sz - 2) * sz) : rat((sz - 1) * (sz - 1)));
    }
    return sum / 8;
}

/// g v(Delta) - (8g+4) v(omega_circ/omega): equation-independent; sums over
/// intermediate clusters 1 < |s| < 2g+1 only
inline BigRat disc_omega_invariant(const ClusterPicture& p) {
    long g = p.genus();
    BigRat sum = 0;
    for (int i = 0; i < (int)p.num_clusters(); ++i) {
        long sz = p[i].size();
        if (sz <= 1 || sz >= 2 * g + 1) continue;
        sum += p[i].delta / 2 *
               (sz % 2 == 0 ? rat(sz * (2 * g + 2 - sz)) : rat((sz - 1) * (2 * g + 1 - sz)));
    }
    return sum;
}

/// v(Delta_C) = v(c)(4g+2) + sum_s d_s |s|(|s|-1), delta_R = d_R
inline BigRat disc_valuation(const ClusterPicture& p) {
    BigRat sum = rat(p.vc * (4 * p.genus() + 2));
    for (int i = 0; i < (int)p.num_clusters(); ++i)
        sum += p[i].delta * rat(p[i].size() * (p[i].size() - 1));
    return sum;
}

namespace detail {

/// E = 1 iff two clusters of size g+1 are permuted by Frobenius and v(c) is
/// odd; shared by the minimal-discriminant paths and the canonical picture
inline int minimal_disc_E(const ClusterPicture& p, const GaloisLayer& l) {
    if (p.vc % 2 == 0) return 0;
    auto cp = induced_cluster_perm(p, l.frob);
    if (cp.empty()) throw std::runtime_error("frobenius does not act on clusters");
    for (int i = 0; i < (int)p.num_clusters(); ++i)
        if (p[i].size() == p.genus() + 1 && cp[i] != i) return 1;
    return 0;
}

}  // namespace detail

/// correction route: v(Delta) - (4g+2)(v(c) - E + sum_{|s|>g+1} d_s(|s|-g-1))
inline BigRat minimal_disc_valuation_via_picture(const ClusterPicture& p, const GaloisLayer& l) {
    long g = p.genus();
    BigRat corr = rat(p.vc - detail::minimal_disc_E(p, l));
    for (int i = 0; i < (int)p.num_clusters(); ++i)
        if (p[i].size() > g + 1) corr += p[i].delta * rat(p[i].size() - g - 1);
    return disc_valuation(p) - rat(4 * g + 2) * corr;
}

/// centred-tree route: E(4g+2) + sum_{v != centre} delta_v S(v)(S(v)-1)
inline BigRat minimal_disc_valuation_via_tree(const ClusterPicture& p, const GaloisLayer& l) {
    auto c = centred(bytree_of(p));
    BigRat sum = rat(detail::minimal_disc_E(p, l) * (4 * p.genus() + 2));
    for (int v = 0; v < (int)c.tree.verts.size(); ++v)
        if (v != c.centre) sum += c.deltav[v] * rat(c.S[v] * (c.S[v] - 1));
    return sum;
}

namespace detail {
inline long residue_size_or_throw(const ClusterPicture& p, const GaloisLayer& l, long prime) {
    long q = l.residueSize != 0 ? l.residueSize : prime;
    if (q <= 2 * p.genus() + 1) throw ResidueFieldTooSmall(q, 2 * p.genus() + 1);
    return q;
}
}  // namespace detail

inline BigRat minimal_disc_valuation(const ClusterPicture& p, const GaloisLayer& l,
                                     long prime = 0) {
    detail::residue_size_or_throw(p, l, prime);
    BigRat a = minimal_disc_valuation_via_picture(p, l);
    BigRat b = minimal_disc_valuation_via_tree(p, l);
    if (a != b) throw std::logic_error("minimal discriminant routes disagree");
    return a;
}

/// is there z with f(x - z) integral? (tame action on the roots assumed)
inline bool is_integral_shiftable(const ClusterPicture& p, const GaloisLayer& l) {
    if (l.tameKnown && !l.tame) throw NotTame();
    if (p.vc >= 0 && p[p.top].depth >= 0) return true;
    auto cpF = induced_cluster_perm(p, l.frob);
    auto cpI = induced_cluster_perm(p, l.inertiaGen);
    if (cpF.empty() || cpI.empty()) throw std::runtime_error("layer does not act on clusters");
    auto stable = [&](int i) { return cpF[i] == i && cpI[i] == i; };
    for (int c = 0; c < (int)p.num_clusters(); ++c) {
        if (!stable(c) || p[c].depth > 0) continue;  // need d_c <= 0
        BigRat base = rat(p.vc) + outside_depth_sum(p, c);
        auto ok = [&](long childSize) {
            return base + rat(p[c].size() - childSize) * p[c].depth >= 0;
        };
        if (ok(0)) return true;  // empty c'
        for (int r : p[c].solo)
            if (l.frob[r] == r && l.inertiaGen[r] == r && ok(1)) return true;
        for (int ch : p[c].children)
            if (stable(ch) && p[ch].depth >= 0 && ok(p[ch].size())) return true;
    }
    return false;
}

enum class MinimalityRule { quick, semistableIff };

struct MinimalityResult {
    bool minimal = false;
    MinimalityRule rule = MinimalityRule::quick;
    std::vector<int> witness;  // canonical id of the certifying cluster, if any
};

/// minimality of an integral equation: the unconditional quick criterion, then
/// the semistable characterisation (needs |k| > 2g+1)
inline MinimalityResult is_minimal_weierstrass(const ClusterPicture& p, const GaloisLayer& l,
                                               long prime = 0) {
    long g = p.genus();
    if (p.vc == 0 && p[p.top].depth == 0) {
        bool quick = true;
        for (int i = 0; i < (int)p.num_clusters(); ++i)
            if (i != p.top && p[i].size() > g + 1) quick = false;
        if (quick) return {true, MinimalityRule::quick, {}};
    }
    if (!semistability(p, l).semistable) throw NotSemistable();
    detail::residue_size_or_throw(p, l, prime);
    auto cpF = induced_cluster_perm(p, l.frob);
    auto cpI = induced_cluster_perm(p, l.inertiaGen);
    // (1) two size-(g+1) clusters swapped by Frobenius, d_R = 0, v(c) in {0,1}
    if (p[p.top].depth == 0 && (p.vc == 0 || p.vc == 1))
        for (int i = 0; i < (int)p.num_clusters(); ++i)
            if (p[i].size() == g + 1 && cpF[i] != i)
                return {true, MinimalityRule::semistableIff, p[i].roots};
    // (2) no deep big cluster, and a stable c with |c| >= g+1, d_c >= 0 and
    //     v(c) = -sum_{r not in c} d_{{r} ^ c}
    bool noDeep = true;
    for (int i = 0; i < (int)p.num_clusters(); ++i)
        if (p[i].size() > g + 1 && p[i].depth > 0) noDeep = false;
    if (noDeep)
        for (int i = 0; i < (int)p.num_clusters(); ++i)
            if (cpF[i] == i && cpI[i] == i && p[i].size() >= g + 1 && p[i].depth >= 0 &&
                rat(p.vc) == -outside_depth_sum(p, i))
                return {true, MinimalityRule::semistableIff, p[i].roots};
    return {false, MinimalityRule::semistableIff, {}};
}

// ---- equivalence moves ------------------------------------------------------

struct ShiftDepths { BigRat m; };
struct AddRoot {};
struct RemoveRoot { int r; };
struct Redistribute {
    std::vector<int> s;  // a child of the top cluster: proper id or a singleton
    BigRat m;
};
using Move = std::variant<ShiftDepths, AddRoot, RemoveRoot, Redistribute>;

inline ClusterPicture apply_move(const ClusterPicture& p, const Move& mv) {
    auto M = depth_matrix(p);
    auto rebuild = [&](const std::vector<std::vector<ValOrInf>>& M2) {
        return from_depth_matrix(M2, p.vc, p.leadingUnitSquareClass);
    };
    if (auto* sh = std::get_if<ShiftDepths>(&mv)) {
        for (auto& row : M)
            for (auto& v : row)
                if (!v.is_inf()) v.value += sh->m;
        return rebuild(M);
    }
    if (std::get_if<AddRoot>(&mv)) {
        if (p.n % 2 == 0) throw MovePreconditionFailed("add root: root count must be odd");
        const BigRat& dR = p[p.top].depth;
        for (auto& row : M) row.push_back(ValOrInf::of(dR));
        M.push_back(std::vector<ValOrInf>(p.n + 1, ValOrInf::of(dR)));
        M.back().back() = ValOrInf::infinity();
        return rebuild(M);
    }
    if (auto* rm = std::get_if<RemoveRoot>(&mv)) {
        if (p.n % 2 != 0) throw MovePreconditionFailed("remove root: root count must be even");
        int r = rm->r;
        if (r < 0 || r >= p.n || p.home_of(r) != p.top)
            throw MovePreconditionFailed("remove root: r is not a singleton child of the top cluster");
        std::vector<int> rest;
        for (int i : p[p.top].roots)
            if (i != r) rest.push_back(i);
        if (p.find(rest) != -1)
            throw MovePreconditionFailed("remove root: the top cluster minus r is already a cluster");
        M.erase(M.begin() + r);
        for (auto& row : M) row.erase(row.begin() + r);
        return rebuild(M);
    }
    const auto& rd = std::get<Redistribute>(mv);
    if (p.n % 2 != 0) throw MovePreconditionFailed("redistribute: root count must be even");
    std::vector<int> sId = rd.s;
    std::sort(sId.begin(), sId.end());
    bool isChild = false;
    if (sId.size() == 1) {
        isChild = sId[0] >= 0 && sId[0] < p.n && p.home_of(sId[0]) == p.top;
    } else {
        int idx = p.find(sId);
        isChild = idx != -1 && p[idx].parent == p.top;
    }
    if (!isChild)
        throw MovePreconditionFailed("redistribute: s is not a child of the top cluster");
    std::vector<char> inS(p.n, 0);
    for (int r : sId) inS[r] = 1;
    std::vector<int> scId;
    for (int r : p[p.top].roots)
        if (!inS[r]) scId.push_back(r);
    if (sId.size() > 1 && rd.m < -p[p.find(sId)].delta)
        throw MovePreconditionFailed("redistribute: m below -delta_s");
    if (scId.size() > 1) {
        int j = p.find(scId);
        BigRat deltaSc = j == -1 ? rat(0) : p[j].delta;
        if (rd.m > deltaSc) throw MovePreconditionFailed("redistribute: m above delta_{s^c}");
    }
    for (int i = 0; i < p.n; ++i)
        for (int j = 0; j < p.n; ++j) {
            if (i == j) continue;
            if (inS[i] && inS[j]) M[i][j].value += rd.m;
            if (!inS[i] && !inS[j]) M[i][j].value -= rd.m;
        }
    return rebuild(M);
}

/// equivalence of (semistable) pictures = isomorphism of their BY trees
inline bool equivalent(const ClusterPicture& p1, const ClusterPicture& p2) {
    return isomorphic(bytree_of(p1), bytree_of(p2)).has_value();
}

/// canonical representative of the equivalence class: clusters s_v of size
/// S(v) and relative depth delta_v from the centred BY tree, d_R = 0, v(c) = E
inline ClusterPicture canonical_representative(const ClusterPicture& p, const GaloisLayer& l,
                                               long prime = 0) {
    if (!semistability(p, l).semistable) throw NotSemistable();
    detail::residue_size_or_throw(p, l, prime);
    auto c = centred(bytree_of(p));
    int n = (int)c.tree.verts.size();
    // top-down vertex order from the centre
    std::vector<int> order = {c.centre};
    for (size_t i = 0; i < order.size(); ++i)
        for (int v = 0; v < n; ++v)
            if (c.parent[v] == order[i]) order.push_back(v);
    ClusterPicture out;
    out.n = (int)c.S[c.centre];
    out.vc = detail::minimal_disc_E(p, l);
    std::vector<int> clOf(n, -1);
    for (int v : order) {
        int idx = (int)out.cl.size();
        out.cl.emplace_back();
        clOf[v] = idx;
        out.cl[idx].delta = v == c.centre ? rat(0) : c.deltav[v];
        out.cl[idx].parent = v == c.centre ? -1 : clOf[c.parent[v]];
        if (v != c.centre) out.cl[clOf[c.parent[v]]].children.push_back(idx);
        else out.top = idx;
    }
    // roots: own s(v) fresh singletons per vertex, bottom-up union
    int nextRoot = 0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        auto& cl = out.cl[clOf[*it]];
        for (long k = 0; k < c.s[*it]; ++k) cl.roots.push_back(nextRoot++);
        for (int ch : cl.children)
            cl.roots.insert(cl.roots.end(), out.cl[ch].roots.begin(), out.cl[ch].roots.end());
    }
    detail::finish_picture(out);
    return out;
}

}  // namespace hyperlocal
