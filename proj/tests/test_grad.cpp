#include <doctest.h>

#include "support/grad_suite.hpp"

TEST_CASE("gradient suite: analytic vs central finite differences") {
    const auto checks = dlr::test::run_gradient_suite();
    REQUIRE(checks.size() >= 25); // every operator plus blocks and networks
    for (const auto& c : checks) {
        INFO(c.name);
        CHECK(c.err < dlr::test::kGradTol);
    }
}
