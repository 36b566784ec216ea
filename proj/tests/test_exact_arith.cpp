#include <catch2/catch_amalgamated.hpp>
#include <hyperlocal/rational.hpp>
#include <hyperlocal/poly.hpp>
#include <hyperlocal/fq.hpp>

#include <random>

using namespace hyperlocal;

TEST_CASE("val_p basics") {
    CHECK(val_p(rat(50), 5) == ValOrInf::of(rat(2)));
    CHECK(val_p(rat(1, 7), 7) == ValOrInf::of(rat(-1)));
    CHECK(val_p(rat(0), 3).is_inf());
    CHECK(ValOrInf::infinity() > ValOrInf::of(rat(1000000)));
}

static RatPoly parse_simple(std::initializer_list<long> coeffs) {
    std::vector<BigRat> v;
    for (long c : coeffs) v.push_back(rat(c));
    return RatPoly(std::move(v));
}

TEST_CASE("newton polygon") {
    SECTION("x^6 - p") {
        for (long p : {5L, 7L}) {
            RatPoly f = RatPoly::monomial(rat(1), 6) - RatPoly::constant(rat(p));
            auto np = newton_polygon(f, p);
            REQUIRE(np.segments.size() == 1);
            CHECK(np.segments[0] == NewtonSegment{rat(1, 6), 6});
            CHECK(np.zeroRoots == 0);
        }
    }
    SECTION("x^6 - p x") {
        long p = 7;
        RatPoly f = RatPoly::monomial(rat(1), 6) - RatPoly::monomial(rat(p), 1);
        auto np = newton_polygon(f, p);
        REQUIRE(np.segments.size() == 1);
        CHECK(np.segments[0] == NewtonSegment{rat(1, 5), 5});
        CHECK(np.zeroRoots == 1);
    }
    SECTION("x^2 - p^2") {
        long p = 3;
        RatPoly f = RatPoly::monomial(rat(1), 2) - RatPoly::constant(rat(9));
        auto np = newton_polygon(f, p);
        REQUIRE(np.segments.size() == 1);
        CHECK(np.segments[0] == NewtonSegment{rat(1), 2});
    }
    SECTION("segment lengths sum to degree") {
        std::mt19937 rng(7);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<BigRat> c;
            int deg = 2 + (int)(rng() % 7);
            for (int i = 0; i <= deg; ++i) c.push_back(rat((long)(rng() % 200) - 100));
            RatPoly f(std::move(c));
            if (f.is_zero()) continue;
            auto np = newton_polygon(f, 5);
            long total = np.zeroRoots;
            for (auto& s : np.segments) total += s.length;
            CHECK(total == f.degree());
            for (size_t i = 0; i + 1 < np.segments.size(); ++i)
                CHECK(np.segments[i].rootValuation > np.segments[i + 1].rootValuation);
        }
    }
}

TEST_CASE("resultant and discriminant") {
    SECTION("disc(x^2+bx+c) = b^2-4c") {
        for (long b = -3; b <= 3; ++b)
            for (long c = -3; c <= 3; ++c) {
                RatPoly f = parse_simple({c, b, 1});
                CHECK(discriminant(f) == rat(b * b - 4 * c));
            }
    }
    SECTION("resultant(x-2, x-3) = -1") {
        CHECK(resultant(parse_simple({-2, 1}), parse_simple({-3, 1})) == rat(-1));
    }
    SECTION("disc(fg) = disc(f) disc(g) res(f,g)^2") {
        std::mt19937 rng(11);
        for (int trial = 0; trial < 30; ++trial) {
            auto rnd = [&](int deg) {
                std::vector<BigRat> c;
                for (int i = 0; i < deg; ++i) c.push_back(rat((long)(rng() % 11) - 5));
                c.push_back(rat(1 + (long)(rng() % 5)));
                return RatPoly(std::move(c));
            };
            RatPoly f = rnd(2 + rng() % 3), g = rnd(2 + rng() % 3);
            BigRat r = resultant(f, g);
            if (r == 0) continue;  // shared root; disc(fg)=0 too but formula needs care
            CHECK(discriminant(f * g) == discriminant(f) * discriminant(g) * r * r);
        }
    }
}

TEST_CASE("square_class") {
    auto F5 = FqField::make(5);
    CHECK(square_class(F5->from_int(2)) == -1);
    CHECK(square_class(F5->from_int(4)) == 1);
    auto F7 = FqField::make(7);
    CHECK(square_class(F7->from_int(0)) == 0);
    SECTION("Legendre symbol (6/p)") {
        // 6 = 2*3; check against direct search for small p
        for (long p : {5L, 7L, 11L, 13L, 23L}) {
            auto F = FqField::make(p);
            int sc = square_class(F->from_int(6));
            bool found = false;
            for (long x = 1; x < p; ++x)
                if ((x * x) % p == 6 % p) found = true;
            CHECK(sc == (found ? 1 : -1));
        }
    }
    SECTION("multiplicativity") {
        auto F = FqField::make(13);
        for (long a = 1; a < 13; ++a)
            for (long b = 1; b < 13; ++b)
                CHECK(square_class(F->from_int(a * b)) ==
                      square_class(F->from_int(a)) * square_class(F->from_int(b)));
    }
    SECTION("extension field") {
        auto F9 = FqField::make(3, 2);
        // every element of F_3^* is a square in F_9
        CHECK(square_class(F9->from_int(2)) == 1);
        // the generator is not (it has odd discrete log)
        int nonsq = 0;
        // count non-squares: should be (9-1)/2 = 4
        for (long a = 0; a < 3; ++a)
            for (long b = 0; b < 3; ++b) {
                auto e = F9->from_coeffs({BigInt(a), BigInt(b)});
                if (square_class(e) == -1) ++nonsq;
            }
        CHECK(nonsq == 4);
    }
}

TEST_CASE("fq_roots") {
    auto F7 = FqField::make(7);
    SECTION("x^2-1 over F7") {
        FqPoly f = {F7->from_int(-1), F7->zero(), F7->one()};
        auto r = fq_roots(f);
        REQUIRE(r.size() == 2);
        std::vector<long> vals;
        for (auto& x : r) vals.push_back(x.c[0].get_si());
        std::sort(vals.begin(), vals.end());
        CHECK(vals == std::vector<long>{1, 6});
    }
    SECTION("x^2-2 over F5 has no roots") {
        auto F5 = FqField::make(5);
        FqPoly f = {F5->from_int(-2), F5->zero(), F5->one()};
        CHECK(fq_roots(f).empty());
    }
    SECTION("agrees with exhaustive evaluation, q <= 121") {
        std::mt19937 rng(23);
        std::vector<std::pair<long, int>> fields = {{11, 1}, {5, 2}, {3, 4}, {7, 2}, {11, 2}, {13, 1}};
        for (auto [p, k] : fields) {
            auto F = FqField::make(p, k);
            for (int trial = 0; trial < 10; ++trial) {
                FqPoly f;
                int deg = 2 + rng() % 5;
                for (int i = 0; i <= deg; ++i) {
                    std::vector<BigInt> c;
                    for (int j = 0; j < k; ++j) c.push_back(BigInt((long)(rng() % p)));
                    f.push_back(F->from_coeffs(std::move(c)));
                }
                fqpoly::trim(f);
                if (f.size() <= 1) continue;
                auto roots = fq_roots(f);
                // exhaustive: count roots (distinct) by evaluation
                long found = 0;
                std::vector<BigInt> idx(k, BigInt(0));
                long q = 1;
                for (int j = 0; j < k; ++j) q *= p;
                for (long n = 0; n < q; ++n) {
                    long m = n;
                    std::vector<BigInt> c(k);
                    for (int j = 0; j < k; ++j) {
                        c[j] = BigInt(m % p);
                        m /= p;
                    }
                    auto e = F->from_coeffs(std::move(c));
                    if (fqpoly::eval(f, e).is_zero()) {
                        ++found;
                        bool present = false;
                        for (auto& r : roots)
                            if (r == e) present = true;
                        CHECK(present);
                    }
                }
                // distinct roots found by fq_roots
                std::vector<Fq> distinct;
                for (auto& r : roots) {
                    bool dup = false;
                    for (auto& d : distinct)
                        if (d == r) dup = true;
                    if (!dup) distinct.push_back(r);
                }
                CHECK((long)distinct.size() == found);
            }
        }
    }
    SECTION("multiplicity") {
        // (x-3)^2 (x-5) over F7
        auto mk = [&](long a) { return F7->from_int(a); };
        FqPoly f = {mk(-45), mk(39), mk(-11), mk(1)};
        auto r = fq_roots(f);
        REQUIRE(r.size() == 3);
        long threes = 0, fives = 0;
        for (auto& x : r) {
            if (x.c[0] == 3) ++threes;
            if (x.c[0] == 5) ++fives;
        }
        CHECK(threes == 2);
        CHECK(fives == 1);
    }
}
