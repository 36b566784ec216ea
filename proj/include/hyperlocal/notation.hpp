// Textual cluster-picture notation:
//   picture := cluster
//   cluster := "(" item {space item} ")" "_" rational
//   item    := "r" | cluster
// The top-level subscript is the absolute depth d_R; inner subscripts are
// relative depths. Rationals are "a" or "a/b", optionally wrapped in braces.
#pragma once
#include "cluster.hpp"
#include <cctype>
#include <string>
#include <stdexcept>

namespace hyperlocal {

struct ParseError : std::runtime_error {
    size_t offset;
    ParseError(const std::string& msg, size_t off)
        : std::runtime_error(msg + " at offset " + std::to_string(off)), offset(off) {}
};

namespace detail {

struct PictureParser {
    const std::string& s;
    size_t pos = 0;
    ClusterPicture& p;
    int nextRoot = 0;

    void skip_ws() {
        while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
    }
    [[noreturn]] void fail(const std::string& m) { throw ParseError(m, pos); }

    BigRat rational() {
        bool braced = false;
        if (pos < s.size() && s[pos] == '{') {
            braced = true;
            ++pos;
        }
        size_t start = pos;
        if (pos < s.size() && (s[pos] == '-' || s[pos] == '+')) ++pos;
        while (pos < s.size() && (isdigit((unsigned char)s[pos]) || s[pos] == '/')) ++pos;
        if (pos == start) fail("expected rational");
        BigRat r;
        try {
            r = rat_from_string(s.substr(start, pos - start));
        } catch (...) {
            fail("bad rational");
        }
        if (braced) {
            if (pos >= s.size() || s[pos] != '}') fail("expected '}'");
            ++pos;
        }
        return r;
    }

    // returns cluster index
    int cluster() {
        if (pos >= s.size() || s[pos] != '(') fail("expected '('");
        ++pos;
        int idx = (int)p.cl.size();
        p.cl.emplace_back();
        bool any = false;
        for (;;) {
            skip_ws();
            if (pos >= s.size()) fail("unterminated cluster");
            if (s[pos] == ')') {
                ++pos;
                break;
            }
            any = true;
            if (s[pos] == 'r') {
                ++pos;
                p.cl[idx].roots.push_back(nextRoot++);
            } else if (s[pos] == '(') {
                int ch = cluster();
                p.cl[ch].parent = idx;
                p.cl[idx].children.push_back(ch);
                for (int r : p.cl[ch].roots) p.cl[idx].roots.push_back(r);
            } else {
                fail("expected 'r' or '('");
            }
        }
        if (!any) fail("empty cluster");
        if (pos >= s.size() || s[pos] != '_') fail("expected '_'");
        ++pos;
        p.cl[idx].delta = rational();
        return idx;
    }
};

}  // namespace detail

inline ClusterPicture parse_picture(const std::string& text, long vc = 0,
                                    std::optional<int> sq = std::nullopt) {
    ClusterPicture p;
    detail::PictureParser ps{text, 0, p};
    ps.skip_ws();
    p.top = ps.cluster();
    ps.skip_ws();
    if (ps.pos != text.size()) throw ParseError("trailing input", ps.pos);
    p.n = ps.nextRoot;
    p.vc = vc;
    p.leadingUnitSquareClass = sq;
    detail::finish_picture(p);
    return p;
}

namespace detail {

inline std::string render_rat(const BigRat& r) {
    std::string s = r.get_str();
    return s.find('/') != std::string::npos ? "{" + s + "}" : s;
}

inline std::string render_cluster(const ClusterPicture& p, int i) {
    // items: singletons and child clusters, ordered by canonical id
    struct Item {
        std::vector<int> id;
        int child;  // -1 for singleton
    };
    std::vector<Item> items;
    for (int r : p[i].solo) items.push_back({{r}, -1});
    for (int ch : p[i].children) items.push_back({p[ch].roots, ch});
    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.id < b.id; });
    std::string out = "(";
    bool first = true;
    for (auto& it : items) {
        if (!first) out += ' ';
        first = false;
        out += it.child == -1 ? "r" : render_cluster(p, it.child);
    }
    out += ")_" + render_rat(p[i].delta);
    return out;
}

}  // namespace detail

inline std::string render_picture(const ClusterPicture& p) {
    return detail::render_cluster(p, p.top);
}

}  // namespace hyperlocal
