// BY trees: two-coloured metric trees with vertex genera, built from cluster
// pictures; isomorphism via canonical forms; centred trees with weights.
#pragma once
#include "cluster.hpp"
#include <map>
#include <optional>
#include <string>
#include <vector>
#include <algorithm>
#include <stdexcept>

namespace hyperlocal {

struct BYTree {
    struct Vertex {
        bool yellow = false;
        long genus = 0;
        std::vector<int> cluster;  // canonical id of the source cluster, if any
    };
    struct Edge {
        int a = -1, b = -1;
        bool yellow = false;
        BigRat length;
    };
    std::vector<Vertex> verts;
    std::vector<Edge> edges;

    std::vector<std::vector<std::pair<int, int>>> adjacency() const {  // (neighbour, edge)
        std::vector<std::vector<std::pair<int, int>>> adj(verts.size());
        for (int e = 0; e < (int)edges.size(); ++e) {
            adj[edges[e].a].push_back({edges[e].b, e});
            adj[edges[e].b].push_back({edges[e].a, e});
        }
        return adj;
    }

    /// connected components of the blue part (blue vertices joined by blue edges)
    long blue_components() const {
        std::vector<int> id(verts.size(), -1);
        long comps = 0;
        auto adj = adjacency();
        for (int v = 0; v < (int)verts.size(); ++v) {
            if (verts[v].yellow || id[v] != -1) continue;
            std::vector<int> stack = {v};
            id[v] = (int)comps;
            while (!stack.empty()) {
                int u = stack.back();
                stack.pop_back();
                for (auto [w, e] : adj[u])
                    if (!edges[e].yellow && !verts[w].yellow && id[w] == -1) {
                        id[w] = (int)comps;
                        stack.push_back(w);
                    }
            }
            ++comps;
        }
        return comps;
    }

    /// component label per yellow edge (yellow components: yellow edges joined
    /// at yellow vertices); -1 for blue edges
    std::vector<int> yellow_components() const {
        std::vector<int> comp(edges.size(), -1);
        int next = 0;
        auto adj = adjacency();
        for (int e0 = 0; e0 < (int)edges.size(); ++e0) {
            if (!edges[e0].yellow || comp[e0] != -1) continue;
            std::vector<int> stack = {e0};
            comp[e0] = next;
            while (!stack.empty()) {
                int e = stack.back();
                stack.pop_back();
                for (int v : {edges[e].a, edges[e].b}) {
                    if (!verts[v].yellow) continue;  // components join only at yellow vertices
                    for (auto [w, e2] : adj[v])
                        if (edges[e2].yellow && comp[e2] == -1) {
                            comp[e2] = next;
                            stack.push_back(e2);
                        }
                }
            }
            ++next;
        }
        return comp;
    }

    std::vector<std::string> check_invariants() const {
        std::vector<std::string> errs;
        auto adj = adjacency();
        for (int v = 0; v < (int)verts.size(); ++v) {
            long blueInc = 0, yellowInc = 0;
            for (auto [w, e] : adj[v]) (edges[e].yellow ? yellowInc : blueInc)++;
            if (verts[v].yellow) {
                if (verts[v].genus != 0) errs.push_back("yellow vertex with genus != 0");
                if (adj[v].size() < 3) errs.push_back("yellow vertex of degree < 3");
                if (blueInc > 0) errs.push_back("yellow vertex with blue edge");
            } else {
                if (verts[v].genus == 0 && yellowInc < 1)
                    errs.push_back("blue genus-0 vertex with no yellow edge");
                if (2 * verts[v].genus + 2 < blueInc) errs.push_back("too many blue edges at vertex");
            }
            if (adj[v].size() == 1 && verts[v].yellow) errs.push_back("yellow leaf");
        }
        return errs;
    }
};

/// the BY tree of a cluster picture
inline BYTree bytree_of(const ClusterPicture& p) {
    BYTree t;
    std::map<int, int> vert;  // cluster index -> vertex index
    for (int i = 0; i < p.num_clusters(); ++i) {
        auto a = attributes(p, i);
        BYTree::Vertex v;
        v.yellow = a.isUbereven;
        v.cluster = p[i].roots;
        if (!v.yellow) {
            long odd = odd_children(p, i);
            v.genus = (odd - 1) / 2;  // |s~| in {2g+2, 2g+1}
        }
        vert[i] = (int)t.verts.size();
        t.verts.push_back(std::move(v));
    }
    for (int i = 0; i < p.num_clusters(); ++i) {
        if (p[i].parent == -1) continue;
        BYTree::Edge e;
        e.a = vert[i];
        e.b = vert[p[i].parent];
        if (p[i].size() % 2 == 0) {
            e.yellow = true;
            e.length = rat(2) * p[i].delta;
        } else {
            e.yellow = false;
            e.length = p[i].delta;
        }
        t.edges.push_back(std::move(e));
    }
    // removal rules at |R| = 2g+2
    long g = p.genus();
    const auto& R = p[p.top];
    int vR = vert[p.top];
    auto drop_vertex = [&](int v) {
        // remove vertex v (no incident edges left) by swapping with the last
        int last = (int)t.verts.size() - 1;
        if (v != last) {
            std::swap(t.verts[v], t.verts[last]);
            for (auto& e : t.edges) {
                if (e.a == last) e.a = v;
                if (e.b == last) e.b = v;
            }
        }
        t.verts.pop_back();
    };
    if (p.n == 2 * g + 2 && R.solo.empty() && R.children.size() == 2) {
        // union of two proper children: merge the two edges through v_R
        int e1 = -1, e2 = -1;
        for (int e = 0; e < (int)t.edges.size(); ++e)
            if (t.edges[e].a == vR || t.edges[e].b == vR) (e1 == -1 ? e1 : e2) = e;
        int c1 = t.edges[e1].a == vR ? t.edges[e1].b : t.edges[e1].a;
        int c2 = t.edges[e2].a == vR ? t.edges[e2].b : t.edges[e2].a;
        BYTree::Edge merged;
        merged.a = c1;
        merged.b = c2;
        merged.yellow = t.edges[e1].yellow;
        merged.length = t.edges[e1].length + t.edges[e2].length;
        if (e2 < e1) std::swap(e1, e2);
        t.edges.erase(t.edges.begin() + e2);
        t.edges.erase(t.edges.begin() + e1);
        t.edges.push_back(std::move(merged));
        drop_vertex(vR);
    } else if (p.n == 2 * g + 2) {
        for (int ch : R.children)
            if (p[ch].size() == 2 * g + 1) {
                // drop v_R and its edge to the big child
                for (int e = 0; e < (int)t.edges.size(); ++e)
                    if (t.edges[e].a == vR || t.edges[e].b == vR) {
                        t.edges.erase(t.edges.begin() + e);
                        break;
                    }
                drop_vertex(vR);
                break;
            }
    }
    return t;
}

inline long genus(const BYTree& t) {
    long g = t.blue_components() - 1;
    for (const auto& v : t.verts) g += v.genus;
    return g;
}

namespace detail {

// canonical encoding of the tree rooted at r (parent edge data included)
inline std::string by_encode(const BYTree& t,
                             const std::vector<std::vector<std::pair<int, int>>>& adj, int v,
                             int parent, int parentEdge,
                             std::vector<std::pair<std::string, int>>* childOrder = nullptr) {
    std::string s = "(";
    s += t.verts[v].yellow ? 'Y' : 'B';
    s += std::to_string(t.verts[v].genus);
    if (parentEdge != -1) {
        s += t.edges[parentEdge].yellow ? 'y' : 'b';
        s += t.edges[parentEdge].length.get_str();
    }
    std::vector<std::pair<std::string, int>> kids;
    for (auto [w, e] : adj[v])
        if (w != parent) kids.push_back({by_encode(t, adj, w, v, e), w});
    std::sort(kids.begin(), kids.end());
    for (auto& [enc, w] : kids) s += enc;
    s += ")";
    if (childOrder) *childOrder = std::move(kids);
    return s;
}

inline std::vector<int> by_centroids(const BYTree& t) {
    int n = (int)t.verts.size();
    if (n == 1) return {0};
    auto adj = t.adjacency();
    std::vector<int> size(n, 1), order;
    std::vector<int> parent(n, -2);
    order.reserve(n);
    order.push_back(0);
    parent[0] = -1;
    for (size_t i = 0; i < order.size(); ++i)
        for (auto [w, e] : adj[order[i]])
            if (parent[w] == -2) {
                parent[w] = order[i];
                order.push_back(w);
            }
    for (int i = n - 1; i > 0; --i) size[parent[order[i]]] += size[order[i]];
    std::vector<int> cents;
    int best = n + 1;
    for (int v = 0; v < n; ++v) {
        int mx = n - size[v];
        for (auto [w, e] : adj[v])
            if (parent[w] == v) mx = std::max(mx, size[w]);
        if (mx < best) {
            best = mx;
            cents = {v};
        } else if (mx == best)
            cents.push_back(v);
    }
    return cents;
}

// map the rooted tree at (v1, parent1) of t1 onto (v2, parent2) of t2, assuming
// equal encodings; fills vmap
inline void by_match(const BYTree& t1, const std::vector<std::vector<std::pair<int, int>>>& a1,
                     const BYTree& t2, const std::vector<std::vector<std::pair<int, int>>>& a2,
                     int v1, int p1, int v2, int p2, std::vector<int>& vmap) {
    vmap[v1] = v2;
    std::vector<std::pair<std::string, int>> k1, k2;
    by_encode(t1, a1, v1, p1, -1, &k1);
    by_encode(t2, a2, v2, p2, -1, &k2);
    // note: parent edge omitted in both, children sorted by encoding
    for (size_t i = 0; i < k1.size(); ++i)
        by_match(t1, a1, t2, a2, k1[i].second, v1, k2[i].second, v2, vmap);
}

}  // namespace detail

/// canonical form: minimal rooted encoding over the (at most two) centroids
inline std::string canonical_form(const BYTree& t) {
    if (t.verts.empty()) return "";
    auto adj = t.adjacency();
    std::string best;
    for (int c : detail::by_centroids(t)) {
        std::string enc = detail::by_encode(t, adj, c, -1, -1);
        if (best.empty() || enc < best) best = enc;
    }
    return best;
}

/// colour/length/genus-preserving isomorphism, as a vertex map t1 -> t2
inline std::optional<std::vector<int>> isomorphic(const BYTree& t1, const BYTree& t2) {
    if (t1.verts.size() != t2.verts.size() || t1.edges.size() != t2.edges.size())
        return std::nullopt;
    if (canonical_form(t1) != canonical_form(t2)) return std::nullopt;
    auto a1 = t1.adjacency(), a2 = t2.adjacency();
    // align: pick centroid roots realising the common canonical encoding
    auto c1s = detail::by_centroids(t1);
    auto c2s = detail::by_centroids(t2);
    std::string target = canonical_form(t1);
    int r1 = -1, r2 = -1;
    for (int c : c1s)
        if (detail::by_encode(t1, a1, c, -1, -1) == target) r1 = c;
    for (int c : c2s)
        if (detail::by_encode(t2, a2, c, -1, -1) == target) r2 = c;
    std::vector<int> vmap(t1.verts.size(), -1);
    detail::by_match(t1, a1, t2, a2, r1, -1, r2, -1, vmap);
    return vmap;
}

/// automorphism data: vertex map plus a sign per yellow component
struct BYAutomorphism {
    std::vector<int> vertexMap;
    std::vector<int> componentSign;  // indexed by yellow component id
};

struct MissingEpsilon : std::runtime_error {
    explicit MissingEpsilon(const std::string& c)
        : std::runtime_error("missing epsilon for cluster " + c) {}
};

/// the Frobenius-induced automorphism of bytree_of(p), with component signs from eps
inline BYAutomorphism frobenius_automorphism(const ClusterPicture& p, const GaloisLayer& l,
                                             const BYTree& t) {
    BYAutomorphism a;
    auto cp = induced_cluster_perm(p, l.frob);
    if (cp.empty()) throw std::runtime_error("frobenius does not act on clusters");
    // vertex map via cluster ids
    std::map<std::vector<int>, int> vOf;
    for (int v = 0; v < (int)t.verts.size(); ++v) vOf[t.verts[v].cluster] = v;
    a.vertexMap.assign(t.verts.size(), -1);
    for (int v = 0; v < (int)t.verts.size(); ++v) {
        int ci = p.find(t.verts[v].cluster);
        int img = cp[ci];
        a.vertexMap[v] = vOf.at(p[img].roots);
    }
    // signs per yellow component: eps of any non-maximal cluster in the closure
    auto comp = t.yellow_components();
    int ncomp = 0;
    for (int c : comp) ncomp = std::max(ncomp, c + 1);
    a.componentSign.assign(ncomp, 0);
    for (int e = 0; e < (int)t.edges.size(); ++e) {
        if (comp[e] == -1 || a.componentSign[comp[e]] != 0) continue;
        // the two endpoint clusters; the non-maximal one is the smaller set
        const auto& ca = t.verts[t.edges[e].a].cluster;
        const auto& cb = t.verts[t.edges[e].b].cluster;
        const auto& lower = ca.size() <= cb.size() ? ca : cb;
        auto it = l.epsFrob.find(lower);
        if (it == l.epsFrob.end() || it->second == 0) {
            std::string s;
            for (int r : lower) s += std::to_string(r) + " ";
            throw MissingEpsilon(s);
        }
        a.componentSign[comp[e]] = it->second;
    }
    return a;
}

/// centred BY tree with weights
struct CentredBYTree {
    BYTree tree;          // possibly with an inserted midpoint centre
    int centre = -1;
    std::vector<int> parent;      // vertex -> parent vertex (-1 at centre)
    std::vector<int> parentEdge;  // vertex -> edge to parent (-1 at centre)
    std::vector<long> s;          // weight s(v)
    std::vector<long> S;          // subtree weight S(v)
    std::vector<BigRat> deltav;   // per non-centre vertex
};

inline std::vector<long> s_weights(const BYTree& t) {
    std::vector<long> s(t.verts.size(), 0);
    auto adj = t.adjacency();
    for (int v = 0; v < (int)t.verts.size(); ++v) {
        if (t.verts[v].yellow) continue;
        long blueInc = 0;
        for (auto [w, e] : adj[v])
            if (!t.edges[e].yellow) ++blueInc;
        s[v] = 2 * t.verts[v].genus + 2 - blueInc;
    }
    return s;
}

inline CentredBYTree centred(const BYTree& t0) {
    CentredBYTree c;
    c.tree = t0;
    auto& t = c.tree;
    long g = genus(t);
    auto s = s_weights(t);
    auto adj = t.adjacency();
    int n = (int)t.verts.size();

    // subtree weights in every direction: w(v away from u)
    // simple O(n^2) walk is fine at our sizes
    auto side_weight = [&](int v, int bannedEdge) {
        long total = 0;
        std::vector<int> stack = {v};
        std::vector<char> seen(n, 0);
        seen[v] = 1;
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            total += s[u];
            for (auto [w, e] : adj[u])
                if (e != bannedEdge && !seen[w]) {
                    seen[w] = 1;
                    stack.push_back(w);
                }
        }
        return total;
    };

    // vertex case: all components of T - v have s-weight < g+1
    std::vector<int> vertexCands;
    for (int v = 0; v < n; ++v) {
        bool ok = true;
        for (auto [w, e] : adj[v])
            if (side_weight(w, e) >= g + 1) ok = false;
        if (ok) vertexCands.push_back(v);
    }
    // edge case: both sides weigh exactly g+1
    std::vector<int> edgeCands;
    for (int e = 0; e < (int)t.edges.size(); ++e)
        if (side_weight(t.edges[e].a, e) == g + 1 && side_weight(t.edges[e].b, e) == g + 1)
            edgeCands.push_back(e);

    if (vertexCands.size() + edgeCands.size() != 1)
        throw std::logic_error("centre not unique");

    if (!vertexCands.empty()) {
        c.centre = vertexCands[0];
    } else {
        // insert a genus-0 midpoint vertex on the edge
        int e = edgeCands[0];
        BYTree::Vertex z;
        z.yellow = t.edges[e].yellow;
        z.genus = 0;
        int zi = (int)t.verts.size();
        t.verts.push_back(z);
        BYTree::Edge e1, e2;
        e1.a = t.edges[e].a;
        e1.b = zi;
        e1.yellow = t.edges[e].yellow;
        e1.length = t.edges[e].length / 2;
        e2.a = zi;
        e2.b = t.edges[e].b;
        e2.yellow = t.edges[e].yellow;
        e2.length = t.edges[e].length / 2;
        t.edges.erase(t.edges.begin() + e);
        t.edges.push_back(e1);
        t.edges.push_back(e2);
        c.centre = zi;
        s.push_back(0);
        adj = t.adjacency();
        n = (int)t.verts.size();
    }

    // orient toward centre
    c.parent.assign(n, -2);
    c.parentEdge.assign(n, -1);
    c.parent[c.centre] = -1;
    std::vector<int> order = {c.centre};
    for (size_t i = 0; i < order.size(); ++i)
        for (auto [w, e] : adj[order[i]])
            if (c.parent[w] == -2) {
                c.parent[w] = order[i];
                c.parentEdge[w] = e;
                order.push_back(w);
            }
    c.s = s;
    c.S.assign(n, 0);
    for (int i = n - 1; i >= 0; --i) {
        int v = order[i];
        c.S[v] += s[v];
        if (c.parent[v] >= 0) c.S[c.parent[v]] += c.S[v];
    }
    c.deltav.assign(n, rat(0));
    for (int v = 0; v < n; ++v) {
        if (v == c.centre) continue;
        const auto& e = t.edges[c.parentEdge[v]];
        c.deltav[v] = e.yellow ? e.length / 2 : e.length;
    }
    return c;
}

}  // namespace hyperlocal
