// Cluster pictures: the rooted depth-labelled ultrametric tree over the roots
// of f, together with per-cluster combinatorial quantities.
#pragma once
#include "rational.hpp"
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>
#include <algorithm>
#include <stdexcept>

namespace hyperlocal {

/// A cluster picture. Only proper clusters (size >= 2) are stored as nodes;
/// singletons are referenced by root index.
struct ClusterPicture {
    struct Cluster {
        std::vector<int> roots;    // sorted root indices — the canonical id
        int parent = -1;           // cluster index; -1 for the top cluster
        std::vector<int> children; // proper-cluster children (indices)
        std::vector<int> solo;     // root indices that are singleton children
        BigRat delta;              // relative depth (absolute depth for the top)
        BigRat depth;              // absolute depth

        long size() const { return (long)roots.size(); }
    };

    int n = 0;                     // number of roots
    std::vector<Cluster> cl;
    int top = -1;
    long vc = 0;                                  // v(c)
    std::optional<int> leadingUnitSquareClass;    // square class of c * pi^{-v(c)}

    long genus() const { return (n - 1) / 2; }
    const Cluster& operator[](int i) const { return cl[i]; }
    long num_clusters() const { return (long)cl.size(); }

    /// smallest proper cluster containing root r
    int home_of(int r) const { return home_[r]; }

    /// index of the cluster with the given canonical id, or -1
    int find(const std::vector<int>& id) const {
        auto it = byId_.find(id);
        return it == byId_.end() ? -1 : it->second;
    }

    bool is_ancestor(int anc, int i) const {
        while (i != -1) {
            if (i == anc) return true;
            i = cl[i].parent;
        }
        return false;
    }

    /// Recompute absolute depths, home table and id index; call after structural edits.
    void refresh() {
        byId_.clear();
        home_.assign(n, -1);
        for (int i = 0; i < (int)cl.size(); ++i) {
            std::sort(cl[i].roots.begin(), cl[i].roots.end());
            byId_[cl[i].roots] = i;
        }
        // depths, top-down
        std::vector<int> order = topdown_order();
        for (int i : order)
            cl[i].depth = cl[i].parent == -1 ? cl[i].delta : cl[cl[i].parent].depth + cl[i].delta;
        for (int i = 0; i < (int)cl.size(); ++i)
            for (int r : cl[i].solo) home_[r] = i;
    }

    std::vector<int> topdown_order() const {
        std::vector<int> order, stack = {top};
        while (!stack.empty()) {
            int i = stack.back();
            stack.pop_back();
            order.push_back(i);
            for (int c : cl[i].children) stack.push_back(c);
        }
        return order;
    }

private:
    std::map<std::vector<int>, int> byId_;
    std::vector<int> home_;
};

/// Frobenius / tame-inertia data attached to a picture.
struct GaloisLayer {
    std::vector<int> frob;       // permutation of root indices
    std::vector<int> inertiaGen; // permutation of root indices
    // per-cluster epsilon(Frob) in {+1,-1}; 0 for clusters that are neither even
    // nor cotwins; keyed by canonical id. Missing entries are "unknown".
    std::map<std::vector<int>, int> epsFrob;
    long eKR = 1;                // ramification degree of K(R)/K
    bool tameKnown = true;
    bool tame = true;            // K(R)/K tame?
    long residueSize = 0;        // |k| if annotated (0 = unknown)
    int cSquare = 0;             // leading coefficient: +1 square in K, -1 not, 0 unknown
    bool annotated = true;       // provenance: annotated vs computed

    static GaloisLayer trivial(int n) {
        GaloisLayer l;
        l.frob.resize(n);
        l.inertiaGen.resize(n);
        for (int i = 0; i < n; ++i) l.frob[i] = l.inertiaGen[i] = i;
        return l;
    }
};

struct ClusterAttributes {
    long size = 0;
    bool isProper = false, isEven = false, isTwin = false, isCotwin = false,
         isUbereven = false, isPrincipal = false;
};

namespace detail {
/// build a picture from parent/child structure already filled in cl; fills solo sets
inline void finish_picture(ClusterPicture& p) {
    for (auto& c : p.cl) c.solo.clear();
    for (int i = 0; i < (int)p.cl.size(); ++i) {
        std::set<int> covered;
        for (int ch : p.cl[i].children)
            covered.insert(p.cl[ch].roots.begin(), p.cl[ch].roots.end());
        for (int r : p.cl[i].roots)
            if (!covered.count(r)) p.cl[i].solo.push_back(r);
    }
    p.refresh();
}
}  // namespace detail

/// number of odd children |s~| (odd proper children plus singletons)
inline long odd_children(const ClusterPicture& p, int s) {
    long c = (long)p[s].solo.size();
    for (int ch : p[s].children)
        if (p[ch].size() % 2 == 1) ++c;
    return c;
}

inline ClusterAttributes attributes(const ClusterPicture& p, int s) {
    ClusterAttributes a;
    const auto& c = p[s];
    a.size = c.size();
    a.isProper = a.size > 1;
    a.isEven = a.size % 2 == 0;
    a.isTwin = a.size == 2;
    long g = p.genus();
    a.isUbereven = a.isEven && c.solo.empty() &&
                   std::all_of(c.children.begin(), c.children.end(),
                               [&](int ch) { return p[ch].size() % 2 == 0; });
    a.isCotwin = !a.isUbereven && std::any_of(c.children.begin(), c.children.end(),
                                              [&](int ch) { return p[ch].size() == 2 * g; });
    a.isPrincipal = a.isProper && !a.isTwin && !a.isCotwin;
    if (a.size == 2 * g + 2 && (long)(c.children.size() + c.solo.size()) < 3)
        a.isPrincipal = false;
    return a;
}

/// s*: smallest superset without an ubereven parent; for cotwins, the child of size 2g.
inline int star(const ClusterPicture& p, int s) {
    auto a = attributes(p, s);
    if (a.isCotwin) {
        for (int ch : p[s].children)
            if (p[ch].size() == 2 * p.genus()) return ch;
        throw std::logic_error("cotwin without size-2g child");
    }
    int t = s;
    while (p[t].parent != -1 && attributes(p, p[t].parent).isUbereven) t = p[t].parent;
    return t;
}

/// least common ancestor of two proper clusters
inline int wedge(const ClusterPicture& p, int s1, int s2) {
    std::set<int> anc;
    for (int i = s1; i != -1; i = p[i].parent) anc.insert(i);
    for (int i = s2; i != -1; i = p[i].parent)
        if (anc.count(i)) return i;
    throw std::logic_error("disconnected picture");
}

/// smallest proper cluster containing root r and cluster s
inline int wedge_root(const ClusterPicture& p, int r, int s) {
    int h = p.home_of(r);
    // walk up from h until it is an ancestor of s
    for (int i = h; i != -1; i = p[i].parent)
        if (p.is_ancestor(i, s)) return i;
    throw std::logic_error("disconnected picture");
}

/// sum over roots r outside s of d_{ {r} wedge s }
inline BigRat outside_depth_sum(const ClusterPicture& p, int s) {
    BigRat sum = 0;
    // walk ancestors: roots in ancestor a but not in the child on the path to s
    int child = s;
    for (int a = p[s].parent; a != -1; child = a, a = p[a].parent) {
        long extra = p[a].size() - p[child].size();
        sum += rat(extra) * p[a].depth;
    }
    return sum;
}

/// nu_s = v(c) + |s| d_s + sum_{r not in s} d_{{r} wedge s}
inline BigRat nu(const ClusterPicture& p, int s) {
    return rat(p.vc) + rat(p[s].size()) * p[s].depth + outside_depth_sum(p, s);
}

/// lambda~_s = (v(c) + |s~| d_s + sum_{r not in s} d_{{r} wedge s}) / 2
inline BigRat lambda_tilde(const ClusterPicture& p, int s) {
    return (rat(p.vc) + rat(odd_children(p, s)) * p[s].depth + outside_depth_sum(p, s)) / 2;
}

/// induced permutation on proper clusters from a root permutation; empty on failure
inline std::vector<int> induced_cluster_perm(const ClusterPicture& p, const std::vector<int>& sigma) {
    std::vector<int> out(p.num_clusters(), -1);
    for (int i = 0; i < (int)p.num_clusters(); ++i) {
        std::vector<int> img;
        img.reserve(p[i].roots.size());
        for (int r : p[i].roots) img.push_back(sigma[r]);
        std::sort(img.begin(), img.end());
        int j = p.find(img);
        if (j == -1) return {};
        out[i] = j;
    }
    return out;
}

/// validation: type invariants, and (optionally) layer compatibility
inline std::vector<std::string> validate(const ClusterPicture& p,
                                         const GaloisLayer* l = nullptr) {
    std::vector<std::string> errs;
    auto id_str = [&](int i) {
        std::string s = "{";
        for (int r : p[i].roots) s += std::to_string(r) + ",";
        s.back() = '}';
        return s;
    };
    if (p.n < 3) errs.push_back("root count < 3");
    std::vector<int> seen(p.n, 0);
    if (p.top < 0 || p.top >= (int)p.num_clusters()) {
        errs.push_back("missing top cluster");
        return errs;
    }
    if ((long)p[p.top].roots.size() != p.n) errs.push_back("top cluster must contain all roots");
    for (int i = 0; i < (int)p.num_clusters(); ++i) {
        if (p[i].size() < 2) errs.push_back("cluster " + id_str(i) + " not proper");
        if (i != p.top && !(p[i].delta > 0))
            errs.push_back("cluster " + id_str(i) + " has non-positive relative depth");
        for (int ch : p[i].children) {
            if (p[ch].parent != i) errs.push_back("broken parent link at " + id_str(ch));
            if (!std::includes(p[i].roots.begin(), p[i].roots.end(), p[ch].roots.begin(),
                               p[ch].roots.end()))
                errs.push_back("child " + id_str(ch) + " not contained in parent");
        }
        for (int r : p[i].roots) {
            if (r < 0 || r >= p.n)
                errs.push_back("root index out of range in " + id_str(i));
        }
    }
    for (int r = 0; r < p.n; ++r)
        if (p.home_of(r) == -1) errs.push_back("root " + std::to_string(r) + " not placed");
    long g = p.genus();
    if (!(p.n == 2 * g + 1 || p.n == 2 * g + 2)) errs.push_back("genus/root-count mismatch");
    if (l) {
        for (const std::vector<int>* perm : {&l->frob, &l->inertiaGen}) {
            if ((int)perm->size() != p.n) {
                errs.push_back("layer permutation has wrong size");
                continue;
            }
            auto cp = induced_cluster_perm(p, *perm);
            if (cp.empty()) {
                errs.push_back("layer permutation does not preserve clusters");
                continue;
            }
            for (int i = 0; i < (int)p.num_clusters(); ++i)
                if (p[i].depth != p[cp[i]].depth)
                    errs.push_back("layer permutation does not preserve depth of " + id_str(i));
        }
        for (auto& [id, e] : l->epsFrob) {
            int i = p.find(id);
            if (i == -1) continue;
            auto a = attributes(p, i);
            bool signed_cluster = a.isEven || a.isCotwin;
            if (signed_cluster && e == 0)
                errs.push_back("eps must be nonzero on even/cotwin cluster " + id_str(i));
            if (!signed_cluster && e != 0)
                errs.push_back("eps must be zero on cluster " + id_str(i));
        }
    }
    return errs;
}

/// orbits of proper clusters under frob or inertia
enum class Actor { frob, inertia };

inline std::vector<std::vector<int>> orbits(const ClusterPicture& p, const GaloisLayer& l,
                                            Actor a) {
    const auto& sigma = a == Actor::frob ? l.frob : l.inertiaGen;
    auto cp = induced_cluster_perm(p, sigma);
    if (cp.empty()) throw std::runtime_error("permutation does not act on clusters");
    std::vector<std::vector<int>> out;
    std::vector<char> done(p.num_clusters(), 0);
    for (int i = 0; i < (int)p.num_clusters(); ++i) {
        if (done[i]) continue;
        std::vector<int> orb;
        int j = i;
        do {
            orb.push_back(j);
            done[j] = 1;
            j = cp[j];
        } while (j != i);
        out.push_back(std::move(orb));
    }
    return out;
}

/// eps_X = (-1)^{(|X|/2)(nu_{s*} - |s*| d_{s*})} for an inertia orbit X of even clusters
inline int epsilon_inertia(const ClusterPicture& p, const std::vector<int>& X) {
    int s = X[0];
    int st = star(p, s);
    // the sign is -1 exactly when the square root of the normalising constant
    // picks up a half-integral power of the uniformiser under the stabiliser of
    // X, i.e. when |X| (nu_{s*} - |s*| d_{s*}) is an odd integer; this reading
    // is invariant under rescaling y (which shifts nu by even amounts)
    BigRat expo2 = rat((long)X.size()) * (nu(p, st) - rat(p[st].size()) * p[st].depth);
    return (is_integer(expo2) && mpz_even_p(expo2.get_num().get_mpz_t())) ? 1 : -1;
}

/// xi_s(a) = max{-ord2([I_K:I_s] a), 0}; xi_s(0) = 0. orbitSize = [I_K:I_s].
inline long xi(long orbitSize, const BigRat& a) {
    if (a == 0) return 0;
    long o = ord2(rat(orbitSize) * a);
    return o < 0 ? -o : 0;
}

/// the unique picture whose pairwise root-distance matrix is M (ultrametric)
struct UltrametricViolation : std::runtime_error {
    int i, j, k;
    UltrametricViolation(int i_, int j_, int k_)
        : std::runtime_error("ultrametric violation at triple (" + std::to_string(i_) + "," +
                             std::to_string(j_) + "," + std::to_string(k_) + ")"),
          i(i_), j(j_), k(k_) {}
};

inline ClusterPicture from_depth_matrix(const std::vector<std::vector<ValOrInf>>& M, long vc = 0,
                                        std::optional<int> sq = std::nullopt) {
    int n = (int)M.size();
    for (int i = 0; i < n; ++i) {
        if (!M[i][i].is_inf()) throw std::invalid_argument("diagonal must be +inf");
        for (int j = 0; j < n; ++j) {
            if (!(M[i][j] == M[j][i])) throw std::invalid_argument("matrix not symmetric");
            for (int k = 0; k < n; ++k)
                if (M[i][k] < min(M[i][j], M[j][k])) throw UltrametricViolation(i, j, k);
        }
    }
    ClusterPicture p;
    p.n = n;
    p.vc = vc;
    p.leadingUnitSquareClass = sq;
    // recursive split: cluster = all roots; depth = min pairwise distance
    struct Rec {
        const std::vector<std::vector<ValOrInf>>& M;
        ClusterPicture& p;
        // returns cluster index for the set (size >= 2)
        int build(std::vector<int> roots) {
            BigRat d;
            bool first = true;
            for (size_t a = 0; a < roots.size(); ++a)
                for (size_t b = a + 1; b < roots.size(); ++b) {
                    const auto& v = M[roots[a]][roots[b]];
                    if (v.is_inf()) throw std::invalid_argument("coincident roots");
                    if (first || v.value < d) d = v.value, first = false;
                }
            int idx = (int)p.cl.size();
            p.cl.emplace_back();
            p.cl[idx].roots = roots;
            p.cl[idx].depth = d;
            // children: group by distance > d
            std::vector<char> used(roots.size(), 0);
            for (size_t a = 0; a < roots.size(); ++a) {
                if (used[a]) continue;
                std::vector<int> grp = {roots[a]};
                used[a] = 1;
                for (size_t b = a + 1; b < roots.size(); ++b)
                    if (!used[b] && M[roots[a]][roots[b]] > ValOrInf::of(d)) {
                        grp.push_back(roots[b]);
                        used[b] = 1;
                    }
                if (grp.size() >= 2) {
                    int ch = build(std::move(grp));
                    p.cl[ch].parent = idx;
                    p.cl[idx].children.push_back(ch);
                }
            }
            return idx;
        }
    } rec{M, p};
    std::vector<int> all(n);
    for (int i = 0; i < n; ++i) all[i] = i;
    p.top = rec.build(std::move(all));
    // relative depths
    for (auto& c : p.cl) c.delta = c.depth;  // placeholder
    for (int i = 0; i < (int)p.cl.size(); ++i)
        p.cl[i].delta = p.cl[i].parent == -1 ? p.cl[i].depth
                                             : p.cl[i].depth - p.cl[p.cl[i].parent].depth;
    detail::finish_picture(p);
    return p;
}

/// pairwise distance matrix realising the picture (for round-trip checks)
inline std::vector<std::vector<ValOrInf>> depth_matrix(const ClusterPicture& p) {
    std::vector<std::vector<ValOrInf>> M(p.n, std::vector<ValOrInf>(p.n, ValOrInf::infinity()));
    for (int i = 0; i < p.n; ++i)
        for (int j = 0; j < p.n; ++j) {
            if (i == j) continue;
            // wedge of the two singletons
            int a = p.home_of(i);
            while (!std::binary_search(p[a].roots.begin(), p[a].roots.end(), j)) a = p[a].parent;
            M[i][j] = ValOrInf::of(p[a].depth);
        }
    return M;
}

}  // namespace hyperlocal
