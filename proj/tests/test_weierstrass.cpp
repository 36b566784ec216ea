#include <catch2/catch_amalgamated.hpp>
#include <hyperlocal/notation.hpp>
#include <hyperlocal/poly.hpp>
#include <hyperlocal/weierstrass.hpp>
#include <random>
#include "gen.hpp"

using namespace hyperlocal;

namespace {

// y^2 = p(x^2 - p^5)(x^3 - p^3)((x-1)^3 - p^9): twin at depth 5/2 inside a
// five-root cluster at depth 1, plus a three-root cluster at depth 3
ClusterPicture genus3_example() { return parse_picture("(((r r)_{3/2} r r r)_1 (r r r)_3)_0", 1); }

// y^2 = 7(x^2+1)(x^2+36)(x^2+64): two conjugate three-root clusters
ClusterPicture genus2_twins() { return parse_picture("((r r r)_1 (r r r)_1)_0", 1); }

GaloisLayer swap_layer(int n, int lo, int len, long residueSize) {
    GaloisLayer l = GaloisLayer::trivial(n);
    for (int i = 0; i < len; ++i) {
        l.frob[lo + i] = lo + len + i;
        l.frob[lo + len + i] = lo + i;
    }
    l.residueSize = residueSize;
    return l;
}

long vp(const BigRat& x, long p) {
    auto v = val_p(x, p);
    REQUIRE(!v.is_inf());
    REQUIRE(is_integer(v.value));
    return (long)v.value.get_num().get_si();
}

// multiset of (size, relative depth) over proper clusters, for shape checks
std::vector<std::pair<long, BigRat>> shape_of(const ClusterPicture& p) {
    std::vector<std::pair<long, BigRat>> out;
    for (int i = 0; i < (int)p.num_clusters(); ++i) out.push_back({p[i].size(), p[i].delta});
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

TEST_CASE("differentials: greedy exponents", "[weierstrass]") {
    SECTION("two conjugate triples and two rational points") {
        // y^2 = ((x-49)^2+1)((x-98)^2+1)((x-147)^2+1)(x^2-1) over Q_7, genus 3
        auto p = parse_picture("((r r r)_2 (r r r)_2 r r)_0", 0);
        auto d = differential_exponents(p);
        REQUIRE(d.e == std::vector<BigRat>{rat(1), rat(1), rat(0)});
        // incomparable tie at step 0: smaller canonical id first, then the twin
        // ... partner cluster, then the top
        REQUIRE(d.chosen[0] == std::vector<int>{0, 1, 2});
        REQUIRE(d.chosen[1] == std::vector<int>{3, 4, 5});
        REQUIRE(d.chosen[2] == p[p.top].roots);
    }
    SECTION("single-cluster family: e_0 = 1+2n, e_1 = 1+n") {
        for (long n = 0; n <= 5; ++n) {
            auto p = parse_picture("(r r r r r r)_" + std::to_string(n), 2);
            auto d = differential_exponents(p);
            REQUIRE(d.e == std::vector<BigRat>{rat(1 + 2 * n), rat(1 + n)});
            REQUIRE(d.chosen[0] == p[p.top].roots);
            REQUIRE(d.chosen[1] == p[p.top].roots);
        }
    }
    SECTION("nested chain: switch at m = floor((|t2|-1)/2), twin never picked") {
        // d_{t1} = 5/2, d_{t2} = 2, d_R = 1; |t2| = 7, |R| = 12, genus 5
        auto p = parse_picture("(((r r)_{1/2} r r r r r)_1 r r r r r)_1", 0);
        int t2 = p[p.find({0, 1})].parent;
        auto d = differential_exponents(p);
        REQUIRE(d.e == std::vector<BigRat>{rat(15, 2), rat(11, 2), rat(7, 2), rat(2), rat(1)});
        long m = (p[t2].size() - 1) / 2;
        REQUIRE(m == 3);
        for (long i = 0; i < 5; ++i) {
            REQUIRE(d.chosen[i] == (i < m ? p[t2].roots : p[p.top].roots));
            REQUIRE(d.chosen[i] != std::vector<int>({0, 1}));  // the twin t1
        }
    }
}

TEST_CASE("differentials: omega valuation", "[weierstrass]") {
    auto p = parse_picture("((r r r)_2 (r r r)_2 r r)_0", 0);
    REQUIRE(omega_valuation(p) == 2);
    for (long n = 0; n <= 5; ++n) {
        auto q = parse_picture("(r r r r r r)_" + std::to_string(n), 2);
        REQUIRE(omega_valuation(q) == 2 + 3 * n);
    }
    REQUIRE(omega_valuation(parse_picture("(r r r r r)_0", 0)) == 0);
}

TEST_CASE("differentials: disc-omega invariant", "[weierstrass]") {
    for (long n = 0; n <= 5; ++n)
        REQUIRE(disc_omega_invariant(parse_picture("(r r r r r r)_" + std::to_string(n), 2)) == 0);
    {
        auto p = parse_picture("((r r r)_2 (r r r)_2 r r)_0", 0);
        REQUIRE(disc_omega_invariant(p) ==
                rat(p.genus()) * disc_valuation(p) - rat(8 * p.genus() + 4) * omega_valuation(p));
    }
    REQUIRE(disc_omega_invariant(parse_picture("(r r r r r)_2", 1)) == 0);
    // the three formulas satisfy the identity on arbitrary pictures
    std::mt19937 rng(77);
    for (int k = 0; k < 100; ++k) {
        auto p = testgen::random_picture(rng);
        REQUIRE(disc_omega_invariant(p) ==
                rat(p.genus()) * disc_valuation(p) - rat(8 * p.genus() + 4) * omega_valuation(p));
    }
}

TEST_CASE("discriminant valuation", "[weierstrass]") {
    REQUIRE(disc_valuation(genus3_example()) == 55);
    REQUIRE(disc_valuation(genus2_twins()) == 22);

    SECTION("matches val_p(16^g c^{4g+2} disc(f/c)) for explicit curves") {
        auto check = [](const RatPoly& f, long prime, const ClusterPicture& p) {
            long g = (f.degree() - 1) / 2;
            REQUIRE(g == p.genus());
            BigRat c = f.lc();
            RatPoly monic = (rat(1) / c) * f;
            BigRat delta = rat(16);
            BigRat d16 = 1;
            for (long i = 0; i < g; ++i) d16 *= 16;
            BigRat cc = 1;
            for (long i = 0; i < 4 * g + 2; ++i) cc *= c;
            REQUIRE(disc_valuation(p) == vp(d16 * cc * discriminant(monic), prime));
        };
        {
            // y^2 = 7(x^2-7^5)(x^3-7^3)((x-1)^3-7^9)
            RatPoly f = RatPoly::constant(rat(7)) *
                        (RatPoly({-rat(16807), rat(0), rat(1)})) *
                        (RatPoly({-rat(343), rat(0), rat(0), rat(1)})) *
                        RatPoly({-rat(40353607), rat(0), rat(0), rat(1)}).shift(rat(-1));
            check(f, 7, genus3_example());
        }
        {
            // y^2 = 7(x^2+1)(x^2+36)(x^2+64)
            RatPoly f = RatPoly::constant(rat(7)) * RatPoly({rat(1), rat(0), rat(1)}) *
                        RatPoly({rat(36), rat(0), rat(1)}) * RatPoly({rat(64), rat(0), rat(1)});
            check(f, 7, genus2_twins());
        }
    }
}

TEST_CASE("minimal discriminant valuation", "[weierstrass]") {
    SECTION("genus-3 correction, both routes") {
        auto p = genus3_example();
        auto l = GaloisLayer::trivial(p.n);
        l.residueSize = 11;
        REQUIRE(minimal_disc_valuation_via_picture(p, l) == 27);
        REQUIRE(minimal_disc_valuation_via_tree(p, l) == 27);
        REQUIRE(minimal_disc_valuation(p, l) == 27);
    }
    SECTION("frobenius-swapped halves: E flips with the base field") {
        auto p = genus2_twins();
        auto swapped = swap_layer(p.n, 0, 3, 7);  // over Q_7
        REQUIRE(minimal_disc_valuation(p, swapped) == 22);
        auto l = GaloisLayer::trivial(p.n);  // over Q_7(i)
        l.residueSize = 49;
        REQUIRE(minimal_disc_valuation(p, l) == 12);
    }
    SECTION("residue field too small") {
        auto p = genus2_twins();
        auto l = GaloisLayer::trivial(p.n);
        l.residueSize = 5;
        REQUIRE_THROWS_AS(minimal_disc_valuation(p, l), ResidueFieldTooSmall);
        l.residueSize = 0;
        REQUIRE_THROWS_AS(minimal_disc_valuation(p, l), ResidueFieldTooSmall);
        REQUIRE_NOTHROW(minimal_disc_valuation(p, l, 11));
    }
    SECTION("already minimal: correction vanishes") {
        auto p = parse_picture("(r r r r r r)_0", 0);
        auto l = GaloisLayer::trivial(p.n);
        l.residueSize = 11;
        REQUIRE(minimal_disc_valuation(p, l) == disc_valuation(p));
    }
    SECTION("both routes agree on random semistable pictures") {
        std::mt19937 rng(2024);
        for (int k = 0; k < 60; ++k) {
            auto s = testgen::random_semistable(rng);
            s.l.residueSize = 1009;
            REQUIRE(minimal_disc_valuation_via_picture(s.p, s.l) ==
                    minimal_disc_valuation_via_tree(s.p, s.l));
        }
    }
}

TEST_CASE("integral shiftability", "[weierstrass]") {
    SECTION("negative top depth rescued by a deep child") {
        // y^2 = p(x - p^-2)((x - p^-2)^3 - p^9)(x - p^-2 - p^-1)
        auto p = parse_picture("((r r r r)_4 r)_{-1}", 1);
        REQUIRE(is_integral_shiftable(p, GaloisLayer::trivial(p.n)));
    }
    SECTION("first branch: v(c) >= 0 and d_R >= 0") {
        auto p = parse_picture("(r r r)_1", 0);
        REQUIRE(is_integral_shiftable(p, GaloisLayer::trivial(p.n)));
    }
    SECTION("failing both branches") {
        auto p = parse_picture("((r r r)_1 r r)_{-1}", -5);
        REQUIRE_FALSE(is_integral_shiftable(p, GaloisLayer::trivial(p.n)));
    }
    SECTION("wild action is rejected") {
        auto p = parse_picture("(r r r)_1", 0);
        auto l = GaloisLayer::trivial(p.n);
        l.tame = false;
        REQUIRE_THROWS_AS(is_integral_shiftable(p, l), NotTame);
    }
}

TEST_CASE("minimal Weierstrass criteria", "[weierstrass]") {
    SECTION("quick rule") {
        // y^2 = (x^2-1)(x^3-p)((x-2)^3-p^7)
        auto p = parse_picture("((r r r)_{7/3} (r r r)_{1/3} r r)_0", 0);
        auto r = is_minimal_weierstrass(p, GaloisLayer::trivial(p.n));
        REQUIRE(r.minimal);
        REQUIRE(r.rule == MinimalityRule::quick);
    }
    SECTION("semistable rule, condition (2) with v(c)=2") {
        // y^2 = p^2(x - p^-2)(x^5-1)
        auto p = parse_picture("((r r r r r)_2 r)_{-2}", 2);
        auto l = GaloisLayer::trivial(p.n);
        l.residueSize = 7;
        auto r = is_minimal_weierstrass(p, l);
        REQUIRE(r.minimal);
        REQUIRE(r.rule == MinimalityRule::semistableIff);
        REQUIRE(r.witness.size() == 5);
    }
    SECTION("semistable rule, condition (2) with v(c)=6") {
        // y'^2 = (x'^3-p^6)(x'^2-1)(p^6 x'^3-1)
        auto p = parse_picture("(((r r r)_2 r r)_2 r r r)_{-2}", 6);
        auto l = GaloisLayer::trivial(p.n);
        l.residueSize = 11;
        auto r = is_minimal_weierstrass(p, l);
        REQUIRE(r.minimal);
        REQUIRE(r.rule == MinimalityRule::semistableIff);
        REQUIRE(r.witness.size() == 5);
    }
    SECTION("condition (1): swapped halves with v(c) = 1") {
        auto p = genus2_twins();
        auto l = swap_layer(p.n, 0, 3, 7);
        auto r = is_minimal_weierstrass(p, l);
        REQUIRE(r.minimal);
        REQUIRE(r.rule == MinimalityRule::semistableIff);
        REQUIRE(r.witness.size() == 3);
    }
    SECTION("deep big cluster: not minimal") {
        auto p = parse_picture("((r r r r)_1 r r)_0", 0);
        auto l = GaloisLayer::trivial(p.n);
        l.residueSize = 7;
        auto r = is_minimal_weierstrass(p, l);
        REQUIRE_FALSE(r.minimal);
        REQUIRE(r.rule == MinimalityRule::semistableIff);
    }
    SECTION("non-semistable input outside the quick rule") {
        auto p = parse_picture("((r r r r)_1 r r)_0", 0);
        auto l = GaloisLayer::trivial(p.n);
        l.eKR = 3;
        l.residueSize = 7;
        REQUIRE_THROWS_AS(is_minimal_weierstrass(p, l), NotSemistable);
    }
}

TEST_CASE("equivalence moves", "[weierstrass]") {
    SECTION("shift depths") {
        auto p = parse_picture("(r r r r r r)_0", 0);
        auto q = apply_move(p, ShiftDepths{rat(1, 3)});
        REQUIRE(render_picture(q) == "(r r r r r r)_{1/3}");
        auto back = apply_move(q, ShiftDepths{rat(-1, 3)});
        REQUIRE(render_picture(back) == render_picture(p));
    }
    SECTION("add/remove root") {
        auto p = parse_picture("(r r r)_1", 0);
        auto q = apply_move(p, AddRoot{});
        REQUIRE(q.n == 4);
        REQUIRE(render_picture(q) == "(r r r r)_1");
        auto back = apply_move(q, RemoveRoot{3});
        REQUIRE(render_picture(back) == render_picture(p));
        REQUIRE_THROWS_AS(apply_move(q, AddRoot{}), MovePreconditionFailed);
        REQUIRE_THROWS_AS(apply_move(p, RemoveRoot{0}), MovePreconditionFailed);
        // root inside a proper child cannot be removed
        auto r2 = parse_picture("((r r)_1 r r)_0", 0);
        REQUIRE_THROWS_AS(apply_move(r2, RemoveRoot{0}), MovePreconditionFailed);
        // complement must not already be a cluster
        auto r3 = parse_picture("((r r r)_1 r)_0", 0);
        REQUIRE_THROWS_AS(apply_move(r3, RemoveRoot{3}), MovePreconditionFailed);
    }
    SECTION("redistribute: depth-4 block splits into a twin pair") {
        // y^2 = (x^2-1)(x^4-7^8): two free roots, one four-root cluster
        auto p = parse_picture("((r r r r)_2 r r)_0", 0);
        std::vector<int> big = {0, 1, 2, 3};
        // a = 1/5, b = 9/5 picture of the Moebius image over Q_7(7^{1/5})
        auto q = apply_move(p, Redistribute{big, rat(-1, 5)});
        REQUIRE(q.num_clusters() == 3);
        REQUIRE(q[q.find(big)].delta == rat(9, 5));
        REQUIRE(q[q.find({4, 5})].delta == rat(1, 5));
        // pushing all depth across dissolves the big cluster
        auto q2 = apply_move(p, Redistribute{big, rat(-2)});
        REQUIRE(q2.num_clusters() == 2);
        REQUIRE(q2[q2.find({4, 5})].delta == 2);
        REQUIRE(q2.find(big) == -1);
        // singleton child: wrap the rest into a new cluster of relative depth 1
        auto q3 = apply_move(p, Redistribute{{4}, rat(-1)});
        REQUIRE(q3.num_clusters() == 3);
        int mid = q3.find({0, 1, 2, 3, 5});
        REQUIRE(mid != -1);
        REQUIRE(q3[mid].delta == 1);
        REQUIRE(q3[q3.find(big)].delta == 2);  // relative depth inside the new cluster
        // range violations
        REQUIRE_THROWS_AS(apply_move(p, Redistribute{big, rat(-3)}), MovePreconditionFailed);
        REQUIRE_THROWS_AS(apply_move(p, Redistribute{big, rat(1)}), MovePreconditionFailed);
        REQUIRE_THROWS_AS(apply_move(p, Redistribute{{0, 1}, rat(0)}), MovePreconditionFailed);
        auto odd = parse_picture("(r r r)_1", 0);
        REQUIRE_THROWS_AS(apply_move(odd, Redistribute{{0}, rat(-1)}), MovePreconditionFailed);
    }
    SECTION("moves preserve the equivalence class") {
        std::mt19937 rng(4242);
        auto p0 = parse_picture("((r r r r)_2 r r)_0", 0);
        // the displayed equivalence class: all pictures share one BY tree
        for (auto& mv : std::vector<Move>{ShiftDepths{rat(5)}, Redistribute{{0, 1, 2, 3}, rat(-1, 5)},
                                          Redistribute{{0, 1, 2, 3}, rat(-2)},
                                          Redistribute{{4}, rat(-1)}, RemoveRoot{4}})
            REQUIRE(equivalent(p0, apply_move(p0, mv)));
        // random move sequences
        for (int trial = 0; trial < 50; ++trial) {
            auto p = testgen::random_semistable(rng, false).p;
            auto q = p;
            for (int step = 0; step < 4; ++step) {
                if (q.n % 2 == 1) {
                    q = apply_move(q, rng() % 2 ? Move{AddRoot{}} : Move{ShiftDepths{rat((long)(rng() % 7) - 3, (long)(1 + rng() % 3))}});
                } else if (rng() % 2 && !q[q.top].solo.empty()) {
                    int r = q[q.top].solo[rng() % q[q.top].solo.size()];
                    std::vector<int> rest;
                    for (int i : q[q.top].roots)
                        if (i != r) rest.push_back(i);
                    if (q.find(rest) == -1 && rng() % 2) {
                        q = apply_move(q, RemoveRoot{r});
                    } else {
                        q = apply_move(q, Redistribute{{r}, rat(-(long)(1 + rng() % 3))});
                    }
                } else if (!q[q.top].children.empty()) {
                    int ch = q[q.top].children[rng() % q[q.top].children.size()];
                    // shift part of the child's depth outwards
                    BigRat m = -q[ch].delta / (long)(1 + rng() % 2);
                    q = apply_move(q, Redistribute{q[ch].roots, m});
                } else {
                    q = apply_move(q, ShiftDepths{rat((long)(rng() % 5) - 2)});
                }
                REQUIRE(equivalent(p, q));
            }
        }
    }
}

TEST_CASE("equivalence of pictures", "[weierstrass]") {
    auto p = parse_picture("((r r r r)_2 r r)_0", 0);
    auto q = parse_picture("((r r)_2 r r r r)_0", 0);  // isomorphic curve over Q_7
    REQUIRE(equivalent(p, q));
    REQUIRE_FALSE(equivalent(p, parse_picture("(r r r r)_1", 0)));  // different genus
    REQUIRE_FALSE(equivalent(p, parse_picture("(r r r r r r)_0", 0)));
}

TEST_CASE("canonical representative", "[weierstrass]") {
    SECTION("genus-3 example realises the minimal discriminant") {
        auto p = genus3_example();
        auto l = GaloisLayer::trivial(p.n);
        l.residueSize = 11;
        auto can = canonical_representative(p, l);
        REQUIRE(can.vc == 0);
        REQUIRE(can.n == 8);
        REQUIRE(can[can.top].delta == 0);
        REQUIRE(shape_of(can) ==
                std::vector<std::pair<long, BigRat>>{{2, rat(3, 2)}, {3, rat(4)}, {8, rat(0)}});
        REQUIRE(disc_valuation(can) == minimal_disc_valuation(p, l));
        REQUIRE(equivalent(p, can));
        auto r = is_minimal_weierstrass(can, GaloisLayer::trivial(can.n));
        REQUIRE(r.minimal);
        // idempotent
        auto lc = GaloisLayer::trivial(can.n);
        lc.residueSize = 11;
        auto can2 = canonical_representative(can, lc);
        REQUIRE(can2.vc == can.vc);
        REQUIRE(shape_of(can2) == shape_of(can));
    }
    SECTION("E = 1 keeps v(c) = 1") {
        auto p = genus2_twins();
        auto l = swap_layer(p.n, 0, 3, 7);
        auto can = canonical_representative(p, l);
        REQUIRE(can.vc == 1);
        REQUIRE(shape_of(can) ==
                std::vector<std::pair<long, BigRat>>{{3, rat(1)}, {3, rat(1)}, {6, rat(0)}});
        REQUIRE(disc_valuation(can) == minimal_disc_valuation(p, l));
        // over the quadratic extension the swap disappears and v(c) drops
        auto lt = GaloisLayer::trivial(p.n);
        lt.residueSize = 49;
        auto canExt = canonical_representative(p, lt);
        REQUIRE(canExt.vc == 0);
        REQUIRE(disc_valuation(canExt) == 12);
        // the canonical picture passes the semistable minimality test
        std::vector<int> a, b;
        for (int i = 0; i < (int)can.num_clusters(); ++i)
            if (can[i].size() == 3) (a.empty() ? a : b) = can[i].roots;
        GaloisLayer lcan = GaloisLayer::trivial(can.n);
        for (size_t i = 0; i < a.size(); ++i) {
            lcan.frob[a[i]] = b[i];
            lcan.frob[b[i]] = a[i];
        }
        lcan.residueSize = 7;
        auto r = is_minimal_weierstrass(can, lcan);
        REQUIRE(r.minimal);
        REQUIRE(r.rule == MinimalityRule::semistableIff);
    }
    SECTION("genus-2 pictures land on the standard shapes") {
        std::mt19937 rng(99);
        int seen = 0;
        while (seen < 40) {
            auto s = testgen::random_semistable(rng);
            if (s.p.genus() != 2) continue;
            ++seen;
            s.l.residueSize = 1009;
            auto can = canonical_representative(s.p, s.l);
            REQUIRE(can.n == 6);
            REQUIRE(can[can.top].delta == 0);
            REQUIRE((can.vc == 0 || can.vc == 1));
            std::vector<BigRat> threeDepths;
            for (int i = 0; i < (int)can.num_clusters(); ++i) {
                if (i == can.top) continue;
                REQUIRE((can[i].size() == 2 || can[i].size() == 3));
                if (can[i].size() == 3) threeDepths.push_back(can[i].delta);
            }
            if (threeDepths.size() == 2) REQUIRE(threeDepths[0] == threeDepths[1]);
            if (can.vc == 1) REQUIRE(threeDepths.size() == 2);
            REQUIRE(equivalent(s.p, can));
        }
    }
    SECTION("preconditions") {
        auto p = genus2_twins();
        auto l = GaloisLayer::trivial(p.n);
        REQUIRE_THROWS_AS(canonical_representative(p, l), ResidueFieldTooSmall);
        l.residueSize = 7;
        l.eKR = 4;
        REQUIRE_THROWS_AS(canonical_representative(p, l), NotSemistable);
    }
}
