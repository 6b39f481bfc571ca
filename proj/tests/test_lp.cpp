#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mdinet/lp.hpp"

using namespace mdinet;

TEST_CASE("simple lower-bounded minimum") {
    // min x0 subject to x0 >= 3
    LpResult r = lp_minimize({{-1.0}}, {-3.0}, {1.0});
    REQUIRE(r.status == LpResult::Status::optimal);
    CHECK(r.objective == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(r.x[0] == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("maximization via negated objective") {
    // max x0 + x1 subject to x0 + 2 x1 <= 4, x0 <= 3
    LpResult r = lp_minimize({{1.0, 2.0}, {1.0, 0.0}}, {4.0, 3.0}, {-1.0, -1.0});
    REQUIRE(r.status == LpResult::Status::optimal);
    CHECK(-r.objective == doctest::Approx(3.5).epsilon(1e-9));  // x0=3, x1=0.5
}

TEST_CASE("infeasible system detected") {
    // x0 <= -1 with x0 >= 0
    LpResult r = lp_minimize({{1.0}}, {-1.0}, {1.0});
    CHECK(r.status == LpResult::Status::infeasible);
}

TEST_CASE("unbounded problem detected") {
    // min -x0 with only x1 constrained
    LpResult r = lp_minimize({{0.0, 1.0}}, {1.0}, {-1.0, 0.0});
    CHECK(r.status == LpResult::Status::unbounded);
}

TEST_CASE("two-sided constraints pin a variable") {
    // 2 <= x0 <= 2 exactly
    LpResult r = lp_minimize({{1.0}, {-1.0}}, {2.0, -2.0}, {1.0});
    REQUIRE(r.status == LpResult::Status::optimal);
    CHECK(r.x[0] == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("degenerate constraints terminate") {
    // redundant rows around the same optimum
    std::vector<std::vector<double>> A = {
        {1.0, 1.0}, {1.0, 1.0}, {-1.0, 0.0}, {0.0, -1.0}, {1.0, 0.0}};
    std::vector<double> b = {1.0, 1.0, 0.0, 0.0, 1.0};
    LpResult r = lp_minimize(A, b, {-1.0, -0.5});
    REQUIRE(r.status == LpResult::Status::optimal);
    CHECK(-r.objective == doctest::Approx(1.0).epsilon(1e-9));
}
