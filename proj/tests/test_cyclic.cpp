#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ap4/cyclic.hpp"
#include "ap4/generators.hpp"

using namespace ap4;

TEST_CASE("find_prime returns the smallest prime in (4N, 8N]") {
    CHECK(find_prime(25).p == 101);
    CHECK(find_prime(1).p == 5);
    CHECK(find_prime(3).p == 13);
    CHECK_THROWS_AS(find_prime(0), std::invalid_argument);
}

TEST_CASE("modulus validation") {
    CHECK_THROWS_AS(Modulus(4), std::invalid_argument);
    CHECK_THROWS_AS(Modulus(3), std::invalid_argument);  // p >= 5
    CHECK_THROWS_AS(Modulus(91), std::invalid_argument); // 7*13
    CHECK(Modulus(7).p == 7);
}

TEST_CASE("torus norm values and symmetry") {
    CHECK(torus_norm(0.5) == doctest::Approx(0.5));
    CHECK(torus_norm(0.9) == doctest::Approx(0.1));
    CHECK(torus_norm(0.0) == doctest::Approx(0.0));
    Rng rng(11);
    for (int i = 0; i < 100; ++i) {
        double t = rng.uniform();
        CHECK(torus_norm(t) == doctest::Approx(torus_norm(1.0 - t)).epsilon(1e-12));
        CHECK(torus_norm(t) >= 0.0);
        CHECK(torus_norm(t) <= 0.5);
    }
}

TEST_CASE("expectation basics") {
    Modulus p5(5);
    CyclicFunction c = constant_function(p5, cd(0.3, -0.2));
    CHECK(std::abs(expectation(c) - cd(0.3, -0.2)) < 1e-12);

    std::vector<cd> vals(5);
    for (int64_t x = 0; x < 5; ++x) vals[(size_t)x] = (double)x / 5.0;
    CyclicFunction f(p5, vals);
    CHECK(expectation(f).real() == doctest::Approx(0.4).epsilon(1e-12));

    // indicator of k elements over a domain of size m
    Modulus p11(11);
    std::vector<cd> ind(11, 0.0);
    ind[2] = ind[5] = ind[7] = 1.0;
    CyclicFunction g(p11, ind);
    std::vector<int64_t> dom = {1, 2, 3, 4, 5, 6};
    CHECK(expectation(g, dom).real() == doctest::Approx(2.0 / 6.0));

    std::vector<int64_t> empty;
    CHECK_THROWS_AS(expectation(g, empty), std::invalid_argument);
}

TEST_CASE("expectation is linear") {
    Modulus p31(31);
    Rng rng(3);
    std::vector<cd> u(31), w(31);
    for (auto& z : u) z = rng.unit_disc();
    for (auto& z : w) z = rng.unit_disc();
    CyclicFunction f(p31, u), g(p31, w);
    cd a(0.7, 0.1), b(-0.4, 0.9);
    CyclicFunction comb = add(scale(f, a), scale(g, b));
    cd lhs = expectation(comb);
    cd rhs = a * expectation(f) + b * expectation(g);
    CHECK(std::abs(lhs - rhs) < 1e-12);
}

TEST_CASE("lp norms") {
    Modulus p7(7);
    CHECK(lp_norm(constant_function(p7, 1.0), 1.0) == doctest::Approx(1.0));
    CHECK(lp_norm(constant_function(p7, 1.0), 3.5) == doctest::Approx(1.0));

    std::vector<cd> ind(7, 0.0);
    ind[1] = ind[4] = 1.0;
    CyclicFunction g(p7, ind);
    CHECK(lp_norm(g, 1.0) == doctest::Approx(2.0 / 7.0));

    // exponent-2 norm vs direct computation
    Rng rng(5);
    std::vector<cd> vals(7);
    for (auto& z : vals) z = rng.unit_disc();
    CyclicFunction f(p7, vals);
    double direct = 0.0;
    for (auto& z : vals) direct += std::norm(z);
    direct = std::sqrt(direct / 7.0);
    CHECK(lp_norm(f, 2.0) == doctest::Approx(direct).epsilon(1e-12));

    CHECK_THROWS_AS(lp_norm(f, 0.5), std::invalid_argument);
}

TEST_CASE("lp norm monotonicity on 1-bounded functions") {
    Modulus p31(31);
    Rng rng(17);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<cd> vals(31);
        for (auto& z : vals) z = rng.unit_disc();
        CyclicFunction f(p31, vals, true);
        double l1 = lp_norm(f, 1.0), l2 = lp_norm(f, 2.0), li = lp_norm(f, INFINITY);
        CHECK(l1 <= l2 + 1e-12);
        CHECK(l2 <= li + 1e-12);
    }
}

TEST_CASE("embed_set basics") {
    Modulus p11(11);
    IntervalEmbedding emb(2, p11);
    std::vector<int64_t> A = {1, 2};
    CyclicFunction f = embed_set(A, emb);
    CHECK(f.one_bounded);
    CHECK(f.v[1] == cd(1.0));
    CHECK(f.v[2] == cd(1.0));
    for (int64_t x : {0, 3, 4, 5, 6, 7, 8, 9, 10}) CHECK(f.v[(size_t)x] == cd(0.0));

    std::vector<int64_t> empty;
    CyclicFunction z = embed_set(empty, emb);
    CHECK(lp_norm(z, 1.0) == doctest::Approx(0.0));

    Modulus p101(101);
    IntervalEmbedding emb25(25, p101);
    CyclicFunction full = embed_set(gen_interval(25), emb25);
    CHECK(expectation(full).real() == doctest::Approx(25.0 / 101.0));

    std::vector<int64_t> bad = {0};
    CHECK_THROWS_AS(embed_set(bad, emb), std::invalid_argument);
    std::vector<int64_t> bad2 = {3};
    CHECK_THROWS_AS(embed_set(bad2, emb), std::invalid_argument);
}

TEST_CASE("interval embedding invariant") {
    CHECK_THROWS_AS(IntervalEmbedding(25, Modulus(211)), std::invalid_argument);  // p > 8N
    CHECK_THROWS_AS(IntervalEmbedding(30, Modulus(113)), std::invalid_argument);  // 4N >= p
    IntervalEmbedding ok(30, Modulus(127));
    CHECK(ok.N == 30);
}

// cyclic 4-AP count of the embedded set equals the integer 4-AP count
TEST_CASE("embedding preserves 4-term progressions") {
    Rng rng(23);
    for (int rep = 0; rep < 5; ++rep) {
        int64_t N = 20 + (int64_t)rng.below(30);
        std::vector<int64_t> A;
        for (int64_t i = 1; i <= N; ++i)
            if (rng.uniform() < 0.5) A.push_back(i);
        if (A.empty()) continue;
        IntervalEmbedding emb(N, find_prime(N));
        const int64_t p = emb.mod.p;
        CyclicFunction f = embed_set(A, emb);

        // cyclic count by brute force over (x, h)
        std::vector<char> in(static_cast<size_t>(p), 0);
        for (int64_t a : A) in[(size_t)a] = 1;
        int64_t cyclic = 0;
        for (int64_t x = 0; x < p; ++x)
            for (int64_t h = 0; h < p; ++h)
                if (in[(size_t)x] && in[(size_t)((x + h) % p)] && in[(size_t)((x + 2 * h) % p)] &&
                    in[(size_t)((x + 3 * h) % p)])
                    ++cyclic;

        // integer count: degenerate h=0 plus both directions
        int64_t increasing = 0;
        for (int64_t a : A)
            for (int64_t h = 1; a + 3 * h <= N; ++h)
                if (in[(size_t)(a + h)] && in[(size_t)(a + 2 * h)] && in[(size_t)(a + 3 * h)]) ++increasing;
        CHECK(cyclic == (int64_t)A.size() + 2 * increasing);
    }
}
