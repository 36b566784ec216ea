#include <catch2/catch_amalgamated.hpp>
#include <hyperlocal/reduction.hpp>
#include <hyperlocal/notation.hpp>
#include "gen.hpp"

using namespace hyperlocal;

static ClusterPicture genus2_running() {
    return parse_picture("(r r ((r r)_{3/2} (r r)_3)_5)_1");
}

static GaloisLayer running_layer() {
    GaloisLayer l = GaloisLayer::trivial(6);
    l.eKR = 2;
    std::swap(l.inertiaGen[2], l.inertiaGen[3]);  // inertia swaps the ramified twin
    std::swap(l.frob[0], l.frob[1]);              // conjugation swaps +-7i
    return l;
}

TEST_CASE("semistability") {
    SECTION("running example is semistable") {
        auto p = genus2_running();
        auto l = running_layer();
        auto r = semistability(p, l);
        CHECK(r.semistable);
        CHECK(r.failures.empty());
    }
    SECTION("x^6-27 over Q3 fails condition 2") {
        auto p = parse_picture("((r r r)_{1/2} (r r r)_{1/2})_{1/2}");
        GaloisLayer l = GaloisLayer::trivial(6);
        l.eKR = 2;
        l.inertiaGen = {3, 4, 5, 0, 1, 2};  // inertia swaps s1 and s2
        auto r = semistability(p, l);
        CHECK_FALSE(r.semistable);
        bool c2 = false;
        for (auto& f : r.failures) {
            if (f.condition == 2) c2 = true;
        }
        CHECK(c2);
    }
    SECTION("trivial picture with even nu") {
        auto p = parse_picture("(r r r r r r)_0", 0);
        auto l = GaloisLayer::trivial(6);
        CHECK(semistability(p, l).semistable);
    }
    SECTION("odd nu fails condition 3") {
        auto p = parse_picture("(r r r r r r)_0", 1);
        auto l = GaloisLayer::trivial(6);
        auto r = semistability(p, l);
        CHECK_FALSE(r.semistable);
        CHECK(r.failures[0].condition == 3);
    }
}

TEST_CASE("good reduction") {
    SECTION("distinct residual roots, even nu") {
        auto p = parse_picture("(r r r r r r r r)_0", 0);
        auto l = GaloisLayer::trivial(8);
        CHECK(good_reduction_curve(p, l));
        CHECK(good_reduction_jac(p, l));
    }
    SECTION("odd vc breaks it") {
        auto p = parse_picture("(r r r r r r r r)_0", 1);
        auto l = GaloisLayer::trivial(8);
        CHECK_FALSE(good_reduction_curve(p, l));
    }
    SECTION("running example: both false") {
        auto p = genus2_running();
        auto l = running_layer();
        CHECK_FALSE(good_reduction_curve(p, l));
        CHECK_FALSE(good_reduction_jac(p, l));
        CHECK_FALSE(potentially_good_curve(p));
        CHECK_FALSE(potentially_good_jac(p));
    }
    SECTION("all-odd picture: jacobian good") {
        auto p = parse_picture("((r r r)_2 r r r r)_0", 0);
        auto l = GaloisLayer::trivial(7);
        CHECK(good_reduction_jac(p, l));
        CHECK_FALSE(good_reduction_curve(p, l));  // size-3 cluster < 2g+1
    }
    SECTION("x^6-27: curve no, jacobian potentially yes") {
        auto p = parse_picture("((r r r)_{1/2} (r r r)_{1/2})_{1/2}");
        CHECK_FALSE(potentially_good_curve(p));
        CHECK(potentially_good_jac(p));
    }
    SECTION("single cluster size 2g+1: both potentially good") {
        auto p = parse_picture("(r r r r r)_{1/3}");
        CHECK(potentially_good_curve(p));
        CHECK(potentially_good_jac(p));
    }
}

TEST_CASE("toric rank") {
    auto p = genus2_running();
    CHECK(potential_toric_rank(p) == 2);  // t1, t2, a even; a ubereven; R is top
    CHECK(potentially_totally_toric(p));
    auto q = parse_picture("(r r r r r r r r)_0");
    CHECK(potential_toric_rank(q) == 0);
    CHECK_FALSE(potentially_totally_toric(q));  // 8 odd children at top
}

TEST_CASE("tameness") {
    auto p = genus2_running();
    auto l = running_layer();
    CHECK(is_tame(p, l, 7));  // p = 7 > 2g+1 = 5
    auto q = parse_picture("((r r r)_{1/2} (r r r)_{1/2})_{1/2}");
    GaloisLayer l3 = GaloisLayer::trivial(6);
    l3.tame = true;
    CHECK(is_tame(q, l3, 3));
    l3.tame = false;
    CHECK_FALSE(is_tame(q, l3, 3));
    l3.tameKnown = false;
    CHECK_THROWS_AS(is_tame(q, l3, 3), MissingLayer);
}

TEST_CASE("implication chain on random pictures") {
    std::mt19937 rng(53);
    for (int trial = 0; trial < 200; ++trial) {
        auto p = testgen::random_picture(rng, /*integerDepths=*/true);
        auto l = GaloisLayer::trivial(p.n);
        if (good_reduction_curve(p, l)) CHECK(good_reduction_jac(p, l));
        if (good_reduction_jac(p, l)) {
            CHECK(potentially_good_jac(p));
            CHECK(semistability(p, l).semistable);
        }
        if (potentially_good_jac(p)) CHECK(potential_toric_rank(p) == 0);
    }
}
