#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ap4/recurrence.hpp"

using namespace ap4;

TEST_CASE("kronecker search") {
    SearchResult half = kronecker_search({0.5}, 10);
    CHECK(half.n == 2);
    CHECK(half.value == doctest::Approx(0.0));

    const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
    SearchResult g = kronecker_search({golden}, 100);
    CHECK(g.value <= 4.0 / 100.0);
    CHECK(g.n == 89);  // Fibonacci denominator

    // pigeonhole bound at d = 2
    Rng rng(12);
    for (int rep = 0; rep < 5; ++rep) {
        std::vector<double> alpha = {rng.uniform(), rng.uniform()};
        SearchResult r = kronecker_search(alpha, 10000);
        CHECK(r.value <= 4.0 / std::sqrt(10000.0));
    }
}

TEST_CASE("schmidt search") {
    SearchResult q = schmidt_search({0.25}, 10);
    CHECK(q.n == 2);
    CHECK(q.value == doctest::Approx(0.0));

    // minimum over a superset cannot grow
    Rng rng(13);
    double alpha = rng.uniform();
    double prev = std::numeric_limits<double>::infinity();
    for (int64_t N : {10, 50, 200, 1000}) {
        double v = schmidt_search({alpha}, N).value;
        CHECK(v <= prev + 1e-15);
        prev = v;
    }

    for (int rep = 0; rep < 5; ++rep) {
        SearchResult r = schmidt_search({rng.uniform()}, 10000);
        CHECK(r.value <= std::pow(10000.0, -0.25));
    }
}

TEST_CASE("f_lattice basics") {
    Lattice Z1 = integer_lattice(1);
    const double theta_z = 1.0864348112133080;
    CHECK(f_lattice(Z1, {0.0}, 0) == doctest::Approx(theta_z).epsilon(1e-10));
    Lattice Z2 = integer_lattice(2);
    CHECK(f_lattice(Z2, {0.0, 0.0}, 25) == doctest::Approx(theta_z * theta_z).epsilon(1e-10));

    // restriction to multiples of q, all terms positive
    Rng rng(21);
    for (int rep = 0; rep < 5; ++rep) {
        double a = rng.uniform();
        int64_t N = 40 + (int64_t)rng.below(60);
        int64_t q = 2 + (int64_t)rng.below(4);
        std::vector<double> qa = {mod1(a * (double)q * (double)q)};
        double lhs = f_lattice(Z1, {a}, N);
        double rhs = ((double)(2 * (N / q) + 1) / (double)(2 * N + 1)) * f_lattice(Z1, qa, N / q);
        CHECK(lhs >= rhs - 1e-12);
    }

    // Fourier form agrees
    for (int rep = 0; rep < 3; ++rep) {
        double a = rng.uniform();
        CHECK(f_lattice(Z1, {a}, 30) == doctest::Approx(f_lattice_fourier(Z1, {a}, 30)).epsilon(1e-8));
    }
    Lattice L2 = make_lattice(2, std::vector<double>{1.3, 0.2, 0.1, 0.9});
    std::vector<double> al = {rng.uniform(), rng.uniform()};
    CHECK(f_lattice(L2, al, 20) == doctest::Approx(f_lattice_fourier(L2, al, 20)).epsilon(1e-8));
}

TEST_CASE("f-calculus property report") {
    Lattice Z1 = integer_lattice(1);
    Rng rng(31);
    double alpha = rng.uniform();

    FPropertyParams params;
    params.c = 0.5;
    params.q = 3;
    params.eps = 0.01;
    FPropertyReport rep = check_f_properties(Z1, {alpha}, 100, params);
    CHECK(rep.contraction_holds);
    CHECK(rep.dilation_holds);
    CHECK(rep.stability_holds);
    CHECK(rep.stability_ratio >= rep.stability_c0);

    // perturbed alpha within eps N^-2
    FPropertyParams p2 = params;
    p2.alpha_tilde = {alpha + 0.009 / (100.0 * 100.0)};
    CHECK(check_f_properties(Z1, {alpha}, 100, p2).stability_holds);

    FPropertyParams bad = params;
    bad.c = 0.01;  // below 10/N
    CHECK_THROWS_AS(check_f_properties(Z1, {alpha}, 100, bad), std::invalid_argument);
    FPropertyParams bad2 = params;
    bad2.alpha_tilde = {alpha + 0.1};
    CHECK_THROWS_AS(check_f_properties(Z1, {alpha}, 100, bad2), std::invalid_argument);
}

TEST_CASE("weyl rational approximation") {
    SearchResult r = weyl_rational_approx(3.0 / 7.0, 100, 10);
    CHECK(r.n == 7);
    CHECK(r.value == doctest::Approx(0.0));

    SearchResult s = weyl_rational_approx(std::sqrt(2.0), 100, 100);
    CHECK(s.n == 70);  // best convergent denominator below 100

    // Dirichlet: some q <= q_bound has ||q theta|| <= 1/q_bound
    Rng rng(41);
    for (int rep = 0; rep < 10; ++rep) {
        double theta_val = rng.uniform();
        int64_t qb = 50 + (int64_t)rng.below(200);
        SearchResult w = weyl_rational_approx(theta_val, 10, qb);
        CHECK(w.value <= 1.0 / (double)qb + 1e-12);
        CHECK(w.n <= qb);
    }
}

TEST_CASE("schmidt alternative branches") {
    Lattice Z2 = integer_lattice(2);
    AlternativeOutcome large = schmidt_alternative(Z2, {0.0, 0.0}, 100);
    CHECK(large.branch == AlternativeBranch::F_large);
    CHECK(large.F_value >= 1.0);

    // rational relation surfaced under a forced threshold
    AlternativeConfig forced;
    forced.f_threshold = 10.0;
    Lattice Z1 = integer_lattice(1);
    AlternativeOutcome rel = schmidt_alternative(Z1, {3.0 / 7.0}, 100, forced);
    CHECK(rel.branch == AlternativeBranch::relation_found);
    CHECK(rel.q % 7 == 0);
    CHECK(rel.residual <= 1e-12);
    // primitivity: gcd of dual coordinates is 1
    int64_t g = 0;
    for (int64_t z : rel.xi_coords) g = std::gcd(g, std::llabs(z));
    CHECK(g == 1);

    AlternativeOutcome rel2 = schmidt_alternative(Z2, {3.0 / 7.0, 0.123456}, 60, forced);
    CHECK(rel2.branch == AlternativeBranch::relation_found);
    int64_t g2 = 0;
    for (int64_t z : rel2.xi_coords) g2 = std::gcd(g2, std::llabs(z));
    CHECK(g2 == 1);

    // a sparse scaled lattice where F < 1/2 genuinely: the n^2 alpha orbit
    // concentrates away from 6Z, and the dichotomy surfaces the denominator
    Lattice sparse = scaled_lattice(integer_lattice(1), 6.0);
    AlternativeOutcome nat = schmidt_alternative(sparse, {10.0 / 11.0}, 60);
    CHECK(nat.F_value < 0.5);
    REQUIRE(nat.branch == AlternativeBranch::relation_found);
    CHECK(nat.xi_coords == std::vector<int64_t>{1});
    CHECK(nat.q % 33 == 0);  // xi . alpha = 5/33
    CHECK(nat.residual <= 1e-12);
    FTrace nat_trace = f_lower_bound_trace(sparse, {10.0 / 11.0}, 60);
    CHECK(nat_trace.reached_dim0);
    for (const auto& level : nat_trace.levels) {
        CHECK(level.trivial_bound_holds);
        CHECK(level.descent_bound_holds);
    }
}

TEST_CASE("integer kernel completion is exact for all small primitive vectors") {
    // includes vectors with leading zeros such as (0,0,1)
    for (int a = -3; a <= 3; ++a)
        for (int b = -3; b <= 3; ++b)
            for (int c = -3; c <= 3; ++c) {
                int64_t g = std::gcd(std::gcd(std::llabs(a), std::llabs(b)), (int64_t)std::llabs(c));
                if (g != 1) continue;
                std::vector<int64_t> w = {a, b, c};
                ap4::detail::KernelBasis kb = ap4::detail::integer_kernel(w);
                REQUIRE(kb.kernel.size() == 2);
                for (const auto& k : kb.kernel) {
                    int64_t dot = 0;
                    for (int i = 0; i < 3; ++i) dot += w[(size_t)i] * k[(size_t)i];
                    CHECK(dot == 0);
                }
                int64_t de = 0;
                for (int i = 0; i < 3; ++i) de += w[(size_t)i] * kb.e[(size_t)i];
                CHECK(de == 1);
            }
}

TEST_CASE("descent step") {
    AlternativeConfig forced;
    forced.f_threshold = 10.0;

    // d = 1 bottoms out at the 0-dimensional convention F = 1
    Lattice Z1 = integer_lattice(1);
    AlternativeOutcome rel = schmidt_alternative(Z1, {3.0 / 7.0}, 100, forced);
    DescentResult d0 = descent_step(Z1, {3.0 / 7.0}, 100, rel);
    CHECK(d0.new_dim == 0);
    CHECK_FALSE(d0.lattice.has_value());
    CHECK(d0.descent_bound_holds);
    CHECK(d0.measured_ratio == doctest::Approx(f_lattice(Z1, {3.0 / 7.0}, 100)).epsilon(1e-12));

    // d = 2 descends to a genuine 1-dimensional lattice
    Lattice Z2 = integer_lattice(2);
    std::vector<double> alpha = {3.0 / 7.0, 0.123456};
    AlternativeOutcome rel2 = schmidt_alternative(Z2, alpha, 60, forced);
    DescentResult d1 = descent_step(Z2, alpha, 60, rel2);
    CHECK(d1.new_dim == 1);
    REQUIRE(d1.lattice.has_value());
    CHECK(d1.descent_bound_holds);
    CHECK(d1.dual_det_residual <= 1e-9);
    CHECK(d1.N >= 0);

    // a skew lattice with determinant > 1
    Lattice skew = make_lattice(2, std::vector<double>{1.5, 0.3, 0.0, 1.2});
    AlternativeOutcome rel3 = schmidt_alternative(skew, {0.25, 2.0 / 3.0}, 50, forced);
    if (rel3.branch == AlternativeBranch::relation_found) {
        DescentResult d2 = descent_step(skew, {0.25, 2.0 / 3.0}, 50, rel3);
        CHECK(d2.descent_bound_holds);
    }

    CHECK_THROWS_AS(descent_step(Z1, {0.0}, 10, AlternativeOutcome{}), std::invalid_argument);
}

TEST_CASE("f lower bound trace") {
    Lattice Z1 = integer_lattice(1);
    FTrace t1 = f_lower_bound_trace(Z1, {0.0}, 100);
    CHECK(t1.stopped_f_large);
    CHECK(t1.levels.size() == 1);
    CHECK(t1.levels[0].trivial_bound_holds);

    Rng rng(7);
    Lattice Z2 = integer_lattice(2);
    FTrace t2 = f_lower_bound_trace(Z2, {rng.uniform(), rng.uniform()}, 200);
    CHECK((t2.stopped_f_large || t2.reached_dim0));
    for (const auto& level : t2.levels) {
        CHECK(level.trivial_bound_holds);
        CHECK(level.descent_bound_holds);
    }

    // forced relation branch exercises the full descent chain
    AlternativeConfig forced;
    forced.f_threshold = 10.0;
    FTrace t3 = f_lower_bound_trace(Z2, {3.0 / 7.0, 5.0 / 11.0}, 100, forced);
    CHECK(t3.reached_dim0);
    CHECK(t3.levels.size() == 3);  // d=2, d=1, d=0
    for (const auto& level : t3.levels) CHECK(level.trivial_bound_holds);

    Lattice small = make_lattice(1, std::vector<double>{0.5});
    CHECK_THROWS_AS(f_lower_bound_trace(small, {0.0}, 10), std::invalid_argument);
}

TEST_CASE("theta-certified recurrence search") {
    ThetaRecurrenceResult r = schmidt_via_theta({0.25}, 10, 4.0);
    CHECK(r.n == 2);
    CHECK(r.certified);
    CHECK(r.coord_norms[0] == doctest::Approx(0.0));

    // certified outputs agree with the direct evaluation at the same n
    Rng rng(53);
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<double> alpha = {rng.uniform()};
        ThetaRecurrenceResult t = schmidt_via_theta(alpha, 1000, 25.0);
        double direct = schmidt_objective(alpha, t.n);
        double mymax = *std::max_element(t.coord_norms.begin(), t.coord_norms.end());
        CHECK(mymax == doctest::Approx(direct).epsilon(1e-12));
        if (t.certified) {
            CHECK(mymax <= 1.0 / std::sqrt(25.0) + 1e-12);
        }
    }

    // dimension 3: a certified hit also satisfies the per-coordinate bound
    ThetaRecurrenceResult r3 = schmidt_via_theta({0.25, 0.5, 0.75}, 50, 9.0);
    double direct3 = schmidt_objective({0.25, 0.5, 0.75}, r3.n);
    CHECK(*std::max_element(r3.coord_norms.begin(), r3.coord_norms.end()) ==
          doctest::Approx(direct3).epsilon(1e-12));
    CHECK(r3.certified);  // n = 4 clears all three coordinates exactly
    CHECK(r3.coord_norms[0] == doctest::Approx(0.0));

    CHECK_THROWS_AS(schmidt_via_theta({0.1, 0.2, 0.3, 0.4}, 10, 40.0), std::invalid_argument);
    CHECK_THROWS_AS(schmidt_via_theta({0.1}, 10, 1.0), std::invalid_argument);
}
