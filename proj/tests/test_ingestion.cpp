#include <catch2/catch_amalgamated.hpp>
#include <hyperlocal/ingestion.hpp>
#include <hyperlocal/invariants.hpp>
#include <hyperlocal/notation.hpp>
#include <hyperlocal/weierstrass.hpp>

#include <algorithm>
#include <map>
#include <random>
#include <vector>

using namespace hyperlocal;

static RatPoly poly(std::vector<BigRat> c) { return RatPoly(std::move(c)); }

static BigRat pw(long p, long e) {
    BigRat r = 1;
    for (long i = 0; i < e; ++i) r *= rat(p);
    return r;
}

/// multiset of (size, absolute depth) over all proper clusters
static std::vector<std::pair<long, BigRat>> shape_of(const ClusterPicture& p) {
    std::vector<std::pair<long, BigRat>> s;
    for (int i = 0; i < p.num_clusters(); ++i) s.emplace_back(p[i].size(), p[i].depth);
    std::sort(s.begin(), s.end());
    return s;
}

static long vp(const BigRat& x, long p) {
    return mpz_get_si(val_p(x, p).value.get_num().get_mpz_t());
}

/// v(Delta) of the curve from the exact polynomial: v(c^{4g+2} disc(f/c))
static BigRat exact_disc_val(const RatPoly& f, long p) {
    long n = f.degree(), g = (n - 1) / 2;
    long v = vp(discriminant(f), p) + (4 * g + 4 - 2 * n) * vp(f.lc(), p);
    return rat(v);
}

/// assign each approximated root to the factor it solves (largest valuation)
static std::vector<int> factor_of_roots(const ClusterData& cd, const std::vector<RatPoly>& fs,
                                        long p) {
    std::vector<int> out;
    for (const auto& r : cd.roots.roots) {
        int best = -1;
        long bestm = -1;
        bool inf = false;
        for (int k = 0; k < (int)fs.size(); ++k) {
            // evaluate the factor at the (scaled) root: substitute x -> x / p^shift
            RatPoly fk = fs[(size_t)k].scale_arg(BigRat(1 / pw(p, cd.roots.shift)));
            BigInt den(1);
            for (const auto& c : fk.coeffs)
                mpz_lcm(den.get_mpz_t(), den.get_mpz_t(), c.get_den().get_mpz_t());
            std::vector<BigInt> ic;
            for (long i = 0; i <= fk.degree(); ++i)
                ic.push_back(BigInt(BigRat(fk.coeff((size_t)i) * BigRat(den)).get_num()));
            auto val = te_val(tp_eval(tp_from_ints(cd.roots.tower, ic), r));
            if (!val) {
                best = k;
                inf = true;
                break;
            }
            if (*val > bestm) {
                bestm = *val;
                best = k;
            }
        }
        REQUIRE(best >= 0);
        (void)inf;
        out.push_back(best);
    }
    return out;
}

TEST_CASE("tower arithmetic") {
    auto T = make_tower(BigInt(7), 2, 2, 12);
    // pi^2 = 7
    TowerElt pi = te_scale_pi(te_from_int(T, BigInt(1)), 1);
    CHECK(pi * pi == te_from_int(T, BigInt(7)));
    CHECK(te_val(pi * pi).value() == 2);
    // u satisfies the defining polynomial of F_49
    TowerElt u = te_lift(T, T->F->gen());
    TPoly mu = tp_from_ints(T, [&] {
        auto v = T->defpoly;
        v.push_back(BigInt(1));
        return v;
    }());
    CHECK(tp_eval(mu, u).is_zero());
    // unit inversion round-trip
    TowerElt a = u + pi + te_from_int(T, BigInt(3));
    CHECK(a * te_inv_unit(a) == te_from_int(T, BigInt(1)));
    // exact division by pi
    TowerElt b = te_scale_pi(a, 5);
    CHECK(te_div_pi(b, 5) == a);
}

TEST_CASE("cluster_data: nested clusters over Q7") {
    // (x^2 + 7^2)(x^2 - 7^15)(x - 7^6)(x - 7^6 - 7^9)
    RatPoly f = poly({pw(7, 2), 0, rat(1)}) * poly({-pw(7, 15), 0, rat(1)}) *
                poly({-pw(7, 6), rat(1)}) * poly({BigRat(-pw(7, 6) - pw(7, 9)), rat(1)});
    auto cd = cluster_data({f, 7, std::nullopt});
    const auto& p = cd.picture;
    const auto& l = cd.layer;

    SECTION("depths") {
        std::vector<std::pair<long, BigRat>> want = {
            {2, rat(15, 2)}, {2, rat(9)}, {4, rat(6)}, {6, rat(1)}};
        CHECK(shape_of(p) == want);
        CHECK(p.vc == 0);
        // discovery order: deepest valuations first
        REQUIRE(p.find({0, 1}) >= 0);
        CHECK(p[p.find({0, 1})].depth == rat(15, 2));
        REQUIRE(p.find({2, 3}) >= 0);
        CHECK(p[p.find({2, 3})].depth == rat(9));
        REQUIRE(p.find({0, 1, 2, 3}) >= 0);
        CHECK(p[p.find({0, 1, 2, 3})].depth == rat(6));
        CHECK(p[p.top].depth == rat(1));
        CHECK(render_picture(p) == "(((r r)_{3/2} (r r)_3)_5 r r)_1");
    }
    SECTION("layer") {
        CHECK(l.eKR == 2);
        CHECK(l.tame);
        CHECK(l.tameKnown);
        CHECK_FALSE(l.annotated);
        CHECK(l.residueSize == 7);
        CHECK(l.cSquare == 1);
        // Frobenius conjugates the two rational-over-Q7(i) solo roots +-7i
        std::vector<int> frobWant = {0, 1, 2, 3, 5, 4};
        std::vector<int> inerWant = {1, 0, 2, 3, 4, 5};  // inertia flips +-7^{15/2}
        CHECK(l.frob == frobWant);
        CHECK(l.inertiaGen == inerWant);
    }
    SECTION("epsilon values all +1") {
        CHECK(l.epsFrob.size() == 4);  // t1, t2, the 4-cluster, and the top
        for (const auto& [id, v] : l.epsFrob) CHECK(v == 1);
        CHECK(epsilon_frob(cd.roots, p, {0, 1}) == 1);
        CHECK(epsilon_frob(cd.roots, p, {0, 1, 2, 3}) == 1);
    }
    SECTION("discriminant valuation matches the exact discriminant") {
        CHECK(disc_valuation(p) == exact_disc_val(f, 7));
    }
    SECTION("distance profiles agree with the valuation matrix") {
        std::vector<RatPoly> fs = {poly({pw(7, 2), 0, rat(1)}), poly({-pw(7, 15), 0, rat(1)}),
                                   poly({-pw(7, 6), rat(1)}),
                                   poly({BigRat(-pw(7, 6) - pw(7, 9)), rat(1)})};
        auto owner = factor_of_roots(cd, fs, 7);
        for (int a = 0; a < (int)fs.size(); ++a)
            for (int b = 0; b < (int)fs.size(); ++b) {
                if (a == b) continue;
                std::vector<BigRat> want;
                for (int i = 0; i < p.n; ++i)
                    for (int j = 0; j < p.n; ++j)
                        if (owner[(size_t)i] == a && owner[(size_t)j] == b)
                            want.push_back(cd.roots.valMatrix[(size_t)i][(size_t)j].value);
                std::sort(want.begin(), want.end());
                CHECK(root_distance_profile(fs[(size_t)a], fs[(size_t)b], 7) == want);
            }
    }
}

TEST_CASE("cluster_data: rational roots over Q5") {
    RatPoly f = poly({rat(1)});
    for (long r : {0, 1, 2, 3, 5, 8, 13}) f = f * poly({rat(-r), rat(1)});
    auto cd = cluster_data({f, 5, std::nullopt});
    const auto& p = cd.picture;

    SECTION("picture and exact depths") {
        std::vector<std::pair<long, BigRat>> want = {{2, rat(1)}, {3, rat(1)}, {7, rat(0)}};
        CHECK(shape_of(p) == want);
        // depths of an all-rational input are exact: rebuild from direct valuations
        std::vector<long> roots = {0, 1, 2, 3, 5, 8, 13};
        std::vector<std::vector<ValOrInf>> M(7, std::vector<ValOrInf>(7, ValOrInf::infinity()));
        for (int i = 0; i < 7; ++i)
            for (int j = 0; j < 7; ++j)
                if (i != j) M[i][j] = val_p(rat(roots[i] - roots[j]), 5);
        CHECK(shape_of(from_depth_matrix(M)) == shape_of(p));
        CHECK(disc_valuation(p) == exact_disc_val(f, 5));
    }
    SECTION("trivial Galois layer") {
        const auto& l = cd.layer;
        CHECK(l.frob == GaloisLayer::trivial(7).frob);
        CHECK(l.inertiaGen == GaloisLayer::trivial(7).inertiaGen);
        CHECK(l.eKR == 1);
        CHECK(l.cSquare == 1);
    }
    SECTION("split-node criterion: product of residues") {
        // the twin {0,5}: epsilon = +1 iff prod_{r not in t}(0 - r) is a square mod 5
        const auto& l = cd.layer;
        REQUIRE(l.epsFrob.size() == 1);
        auto [id, eps] = *l.epsFrob.begin();
        CHECK(id == std::vector<int>{0, 1});  // roots 0 and 5 are found first
        BigInt prod(1);
        for (long r : {1, 2, 3, 8, 13}) prod *= BigInt(0 - r);
        BigInt P5(5);
        CHECK(eps == mpz_legendre(prod.get_mpz_t(), P5.get_mpz_t()));
        CHECK(eps == 1);
    }
    SECTION("precision override does not change the result") {
        auto lo = cluster_data({f, 5, 30});
        auto hi = cluster_data({f, 5, 60});
        CHECK(render_picture(lo.picture) == render_picture(hi.picture));
        CHECK(lo.layer.frob == hi.layer.frob);
        CHECK(lo.layer.epsFrob == hi.layer.epsFrob);
    }
}

TEST_CASE("cluster_data: Frobenius permutes twins over Q11") {
    // three twins around the roots of an inert cubic, plus 0, 1, 2
    RatPoly h = poly({rat(10), rat(4), rat(5), rat(1)});  // x^3+5x^2+4x+10, irreducible mod 11
    RatPoly f = poly({rat(0), rat(1)}) * poly({rat(-1), rat(1)}) * poly({rat(-2), rat(1)}) *
                h.shift(rat(-11)) * h.shift(rat(11));
    auto cd = cluster_data({f, 11, std::nullopt});
    const auto& p = cd.picture;
    const auto& l = cd.layer;

    std::vector<std::pair<long, BigRat>> want = {
        {2, rat(1)}, {2, rat(1)}, {2, rat(1)}, {9, rat(0)}};
    CHECK(shape_of(p) == want);
    CHECK(l.eKR == 1);
    CHECK(l.inertiaGen == GaloisLayer::trivial(9).inertiaGen);

    // Frobenius acts on the three twins as a 3-cycle
    auto cp = induced_cluster_perm(p, l.frob);
    REQUIRE_FALSE(cp.empty());
    std::vector<int> twins;
    for (int i = 0; i < p.num_clusters(); ++i)
        if (p[i].size() == 2) twins.push_back(i);
    REQUIRE(twins.size() == 3);
    int t = twins[0];
    CHECK(cp[t] != t);
    CHECK(cp[cp[t]] != t);
    CHECK(cp[cp[cp[t]]] == t);

    // theta^2 is a non-square in F_{11^3}: the epsilon product over the orbit is -1
    int prod = 1, minus = 0;
    for (int tw : twins) {
        auto it = l.epsFrob.find(p[tw].roots);
        REQUIRE(it != l.epsFrob.end());
        prod *= it->second;
        minus += it->second == -1;
        CHECK(epsilon_frob(cd.roots, p, p[tw].roots) == -1);
        CHECK(cd.roots.thetaSquareClass.at(p[star(p, tw)].roots) == -1);
    }
    CHECK(prod == -1);
    CHECK(minus == 1);  // cocycle normalisation: +1 on all but the last orbit member
    CHECK(disc_valuation(p) == exact_disc_val(f, 11));
}

TEST_CASE("cluster_data: epsilon from theta over Q5") {
    // y^2 = (x^2-5)(x-1)(x-2)(x+1): theta_s = sqrt(2) is not in Q5
    RatPoly f = poly({rat(-5), 0, rat(1)}) * poly({rat(-1), rat(1)}) * poly({rat(-2), rat(1)}) *
                poly({rat(1), rat(1)});
    auto cd = cluster_data({f, 5, std::nullopt});
    const auto& p = cd.picture;
    const auto& l = cd.layer;

    std::vector<std::pair<long, BigRat>> want = {{2, rat(1, 2)}, {5, rat(0)}};
    CHECK(shape_of(p) == want);
    CHECK(l.eKR == 2);
    CHECK(l.frob == GaloisLayer::trivial(5).frob);
    // inertia flips +-sqrt(5), the first two roots found
    std::vector<int> iner = {1, 0, 2, 3, 4};
    CHECK(l.inertiaGen == iner);
    CHECK(epsilon_frob(cd.roots, p, {0, 1}) == -1);
    CHECK(l.epsFrob.at({0, 1}) == -1);
    CHECK(tamagawa_easy(p, l) == 1);
}

TEST_CASE("cluster_data: even pi-power theta is a square") {
    // twin at depth 3/2; theta^2 = -1 times an even power of pi, a square mod 5
    RatPoly f = poly({rat(-250), 0, rat(1)}) * poly({rat(-1), rat(1)}) * poly({rat(1), rat(1)});
    auto cd = cluster_data({f, 5, std::nullopt});
    std::vector<std::pair<long, BigRat>> want = {{2, rat(3, 2)}, {4, rat(0)}};
    CHECK(shape_of(cd.picture) == want);
    CHECK(cd.layer.eKR == 2);
    CHECK(cd.layer.epsFrob.at({0, 1}) == 1);
    CHECK(epsilon_frob(cd.roots, cd.picture, {0, 1}) == 1);
}

TEST_CASE("cluster_data: rational coefficients and negative depths") {
    // roots 1/7, 1/7 + 7, and +-7i; leading coefficient 1/3
    RatPoly f = rat(1, 3) * (poly({rat(-1, 7), rat(1)}) * poly({BigRat(rat(-1, 7) - rat(7)), rat(1)}) *
                             poly({rat(49), 0, rat(1)}));
    auto cd = cluster_data({f, 7, std::nullopt});
    const auto& p = cd.picture;
    std::vector<std::pair<long, BigRat>> want = {{2, rat(1)}, {2, rat(1)}, {4, rat(-1)}};
    CHECK(shape_of(p) == want);
    CHECK(p.vc == 0);
    CHECK(p.leadingUnitSquareClass.value() == -1);  // 1/3 is a non-square unit mod 7
    CHECK(cd.layer.cSquare == -1);
    CHECK(cd.roots.shift == 1);
    CHECK(disc_valuation(p) == exact_disc_val(f, 7));
    // Frobenius swaps +-7i and fixes the rational pair
    int moved = 0;
    for (int i = 0; i < p.n; ++i) moved += cd.layer.frob[(size_t)i] != i;
    CHECK(moved == 2);
}

TEST_CASE("cluster_data: wild input is reported") {
    CHECK_THROWS_AS(cluster_data({poly({rat(-3), 0, 0, rat(1)}), 3, std::nullopt}), WildInput);
    // x^5 + 256 over Q5: wildness only appears after recentering at -1
    CHECK_THROWS_AS(cluster_data({poly({rat(256), 0, 0, 0, 0, rat(1)}), 5, std::nullopt}),
                    WildInput);
    // tame ramification at the residue characteristic is fine
    RatPoly ok = poly({rat(-3), 0, rat(1)}) * poly({rat(-1), rat(1)});
    auto cd = cluster_data({ok, 3, std::nullopt});
    std::vector<std::pair<long, BigRat>> want = {{2, rat(1, 2)}, {3, rat(0)}};
    CHECK(shape_of(cd.picture) == want);
}

TEST_CASE("cluster_data: input validation") {
    RatPoly f = poly({rat(-1), 0, 0, rat(1)});
    CHECK_THROWS_AS(cluster_data({f, 4, std::nullopt}), std::invalid_argument);
    CHECK_THROWS_AS(cluster_data({f, 2, std::nullopt}), std::invalid_argument);
    RatPoly sq = poly({rat(-1), rat(1)}) * poly({rat(-1), rat(1)});
    CHECK_THROWS_AS(cluster_data({sq, 5, std::nullopt}), std::invalid_argument);
    CHECK_THROWS_AS(cluster_data({poly({rat(1), rat(1)}), 5, std::nullopt}),
                    std::invalid_argument);
}

TEST_CASE("root_distance_profile") {
    SECTION("conjugate pair") {
        RatPoly g = poly({rat(49), 0, rat(1)});
        std::vector<BigRat> want = {rat(1), rat(1)};
        CHECK(root_distance_profile(g, g, 7) == want);
    }
    SECTION("rational points") {
        CHECK(root_distance_profile(poly({rat(-3), rat(1)}), poly({rat(-128), rat(1)}), 5) ==
              std::vector<BigRat>{rat(3)});
        CHECK(root_distance_profile(poly({rat(0), rat(1)}), poly({rat(-5), rat(1)}), 5) ==
              std::vector<BigRat>{rat(1)});
    }
    SECTION("shared roots are omitted") {
        RatPoly g = poly({rat(0), rat(1)}) * poly({rat(-25), rat(1)});
        auto prof = root_distance_profile(g, g, 5);
        std::vector<BigRat> want = {rat(2), rat(2)};  // only the off-diagonal pair
        CHECK(prof == want);
    }
}

TEST_CASE("cluster_data: p > deg f is always tame") {
    std::mt19937 rng(271828);
    auto rnd = [&](long m) { return (long)(rng() % (unsigned long)m); };
    for (int trial = 0; trial < 10; ++trial) {
        long p = std::vector<long>{7, 11, 13}[(size_t)rnd(3)];
        // product of small structured factors, degree <= 6 < p
        RatPoly f = poly({rat(1)});
        long deg = 0;
        while (deg < 4) {
            switch (rnd(3)) {
                case 0:
                    f = f * poly({BigRat(-rat(rnd(4)) - pw(p, 1 + rnd(2))), rat(1)});
                    deg += 1;
                    break;
                case 1:
                    f = f * poly({BigRat(-pw(p, 1 + 2 * rnd(2))), 0, rat(1)});
                    deg += 2;
                    break;
                default:
                    f = f * poly({BigRat(rat(rnd(3)) * pw(p, rnd(3))), rat(1 + rnd(3))});
                    deg += 1;
                    break;
            }
        }
        if (discriminant(f) == 0) continue;  // rare coincidence of factors
        ClusterData cd;
        REQUIRE_NOTHROW(cd = cluster_data({f, p, std::nullopt}));
        CHECK(cd.layer.tame);
        CHECK(disc_valuation(cd.picture) == exact_disc_val(f, p));
        // the distance profile of f against itself covers the valuation matrix
        std::vector<BigRat> want;
        for (int i = 0; i < cd.picture.n; ++i)
            for (int j = 0; j < cd.picture.n; ++j)
                if (i != j) want.push_back(cd.roots.valMatrix[(size_t)i][(size_t)j].value);
        std::sort(want.begin(), want.end());
        CHECK(root_distance_profile(f, f, p) == want);
    }
}
