#include <doctest.h>

#include "dlr/model_util.hpp"

using namespace dlr;

TEST_CASE("init_parameters: determinism, zero biases, fan-in variance") {
    const std::vector<ParamSpec> specs{
        {"w.big", {100, 100}, ParamKind::weight, 64},
        {"b", {100}, ParamKind::bias, 0},
        {"ln.g", {32}, ParamKind::norm_scale, 0},
        {"ln.b", {32}, ParamKind::norm_offset, 0},
    };

    Rng r1(5), r2(5), r3(6);
    const ParameterTree a = init_parameters(specs, r1);
    const ParameterTree b = init_parameters(specs, r2);
    const ParameterTree c = init_parameters(specs, r3);
    CHECK(a.get("w.big").data == b.get("w.big").data);
    CHECK(a.get("w.big").data != c.get("w.big").data);

    for (float v : a.get("b").data) CHECK(v == 0.0f);
    for (float v : a.get("ln.b").data) CHECK(v == 0.0f);
    for (float v : a.get("ln.g").data) CHECK(v == 1.0f);

    // sample variance of U(-a, a) with a = sqrt(1/fan_in) is a^2/3
    const Tensor& w = a.get("w.big");
    double mean = 0.0;
    for (float v : w.data) mean += v;
    mean /= static_cast<double>(w.numel());
    double var = 0.0;
    for (float v : w.data) var += (v - mean) * (v - mean);
    var /= static_cast<double>(w.numel());
    const double want = (1.0 / 64.0) / 3.0;
    CHECK(var == doctest::Approx(want).epsilon(0.20));
    double bound = 0.0;
    for (float v : w.data) bound = std::max(bound, std::abs(double(v)));
    CHECK(bound <= std::sqrt(1.0 / 64.0));

    CHECK_THROWS_AS(
        init_parameters({{"bad", {4, 4}, ParamKind::weight, 0}}, r1), Error);
}
