// Reduction-type criteria: semistability, good/potentially good reduction,
// potential toric rank, tameness.
#pragma once
#include "cluster.hpp"
#include <string>
#include <vector>

namespace hyperlocal {

struct SemistabilityResult {
    bool semistable = true;
    struct Failure {
        int condition;  // 1, 2 or 3
        std::string detail;
    };
    std::vector<Failure> failures;
};

struct MissingLayer : std::runtime_error {
    MissingLayer() : std::runtime_error("field data (eKR) required but unknown") {}
};

inline SemistabilityResult semistability(const ClusterPicture& p, const GaloisLayer& l) {
    SemistabilityResult r;
    auto fail = [&](int c, std::string d) {
        r.semistable = false;
        r.failures.push_back({c, std::move(d)});
    };
    if (l.eKR > 2) fail(1, "e(K(R)/K) = " + std::to_string(l.eKR) + " > 2");
    auto cp = induced_cluster_perm(p, l.inertiaGen);
    if (cp.empty()) {
        fail(2, "inertia does not act on clusters");
    } else {
        for (int i = 0; i < p.num_clusters(); ++i)
            if (cp[i] != i) fail(2, "proper cluster moved by inertia");
    }
    for (int i = 0; i < p.num_clusters(); ++i) {
        if (!attributes(p, i).isPrincipal) continue;
        if (!is_integer(p[i].depth)) fail(3, "principal cluster with non-integral depth");
        BigRat v = nu(p, i);
        if (!is_integer(v) || mpz_odd_p(v.get_num().get_mpz_t()))
            fail(3, "principal cluster with odd nu");
    }
    return r;
}

inline bool good_reduction_curve(const ClusterPicture& p, const GaloisLayer& l) {
    if (l.eKR != 1) return false;
    for (int i = 0; i < p.num_clusters(); ++i) {
        if (p[i].size() < 2 * p.genus() + 1) return false;
        if (attributes(p, i).isPrincipal) {
            BigRat v = nu(p, i);
            if (!is_integer(v) || mpz_odd_p(v.get_num().get_mpz_t())) return false;
        }
    }
    return true;
}

inline bool good_reduction_jac(const ClusterPicture& p, const GaloisLayer& l) {
    if (l.eKR != 1) return false;
    for (int i = 0; i < p.num_clusters(); ++i) {
        if (i != p.top && p[i].size() % 2 == 0) return false;
        if (attributes(p, i).isPrincipal) {
            BigRat v = nu(p, i);
            if (!is_integer(v) || mpz_odd_p(v.get_num().get_mpz_t())) return false;
        }
    }
    return true;
}

inline bool potentially_good_curve(const ClusterPicture& p) {
    for (int i = 0; i < p.num_clusters(); ++i)
        if (p[i].size() < 2 * p.genus() + 1) return false;
    return true;
}

inline bool potentially_good_jac(const ClusterPicture& p) {
    for (int i = 0; i < p.num_clusters(); ++i)
        if (i != p.top && p[i].size() % 2 == 0) return false;
    return true;
}

/// number of even non-ubereven clusters != R, less 1 if R is ubereven
inline long potential_toric_rank(const ClusterPicture& p) {
    long rank = 0;
    for (int i = 0; i < p.num_clusters(); ++i) {
        if (i == p.top) continue;
        auto a = attributes(p, i);
        if (a.isEven && !a.isUbereven) ++rank;
    }
    if (attributes(p, p.top).isUbereven) --rank;
    return rank;
}

inline bool potentially_totally_toric(const ClusterPicture& p) {
    for (int i = 0; i < p.num_clusters(); ++i)
        if (odd_children(p, i) > 2) return false;
    return true;
}

inline bool is_tame(const ClusterPicture& p, const GaloisLayer& l, long prime) {
    if (prime > 2 * p.genus() + 1) return true;
    if (!l.tameKnown) throw MissingLayer();
    return l.tame;
}

}  // namespace hyperlocal
