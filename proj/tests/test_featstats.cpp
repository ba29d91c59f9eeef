#include "ash/featstats.hpp"

#include <cmath>

#include "doctest.h"
#include "gradcheck.hpp"

using namespace ash;

namespace {

Tensor random_tensor(Shape s, uint64_t seed, double lo = -2.0, double hi = 2.0) {
    Rng rng(seed);
    Tensor t(s);
    for (int64_t i = 0; i < t.numel(); ++i) t[size_t(i)] = rng.uniform(lo, hi);
    return t;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    double m = 0.0;
    for (int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::fabs(a[size_t(i)] - b[size_t(i)]));
    return m;
}

}  // namespace

TEST_CASE("channel_stats: zero tensor has mean 0 and floored std") {
    Tensor f(Shape{1, 1, 2, 2});
    ChannelStats st = channel_stats(f);
    CHECK(st.mean[0] == 0.0);
    CHECK(st.std[0] == kStdEps);
}

TEST_CASE("channel_stats matches a scalar brute-force computation") {
    Tensor f(Shape{1, 1, 2, 2});
    f.at(0, 0, 0, 0) = 1;
    f.at(0, 0, 0, 1) = 3;
    f.at(0, 0, 1, 0) = 5;
    f.at(0, 0, 1, 1) = 7;

    // Independent oracle over the four values.
    const double vals[4] = {1, 3, 5, 7};
    double mu = 0;
    for (double v : vals) mu += v;
    mu /= 4;
    double var = 0;
    for (double v : vals) var += (v - mu) * (v - mu);
    var /= 4;

    ChannelStats st = channel_stats(f);
    CHECK(st.mean[0] == doctest::Approx(mu).epsilon(1e-12));
    CHECK(st.std[0] == doctest::Approx(std::sqrt(var)).epsilon(1e-12));
    CHECK(st.mean[0] == doctest::Approx(4.0));
    CHECK(st.std[0] == doctest::Approx(std::sqrt(5.0)));
}

TEST_CASE("channel_stats rejects non-finite input") {
    Tensor f(Shape{1, 1, 2, 2});
    f.at(0, 0, 1, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(channel_stats(f), InvalidInputError);
}

TEST_CASE("adain(f, f) == f") {
    Tensor f = random_tensor(Shape{2, 3, 4, 5}, 11);
    Tensor out = adain(f, f);
    CHECK(max_abs_diff(out, f) <= 1e-6);
}

TEST_CASE("adain on a constant source lands on the style mean") {
    Tensor src = Tensor::full(Shape{1, 1, 2, 2}, 5.0);
    Tensor style(Shape{1, 1, 1, 2});
    style.at(0, 0, 0, 0) = -1.0;  // mean 2, population std 3
    style.at(0, 0, 0, 1) = 5.0;
    Tensor out = adain(src, style);
    for (int64_t i = 0; i < out.numel(); ++i) CHECK(out[size_t(i)] == doctest::Approx(2.0));
}

TEST_CASE("adain output statistics match the style statistics") {
    for (uint64_t seed = 1; seed <= 20; ++seed) {
        Tensor a = random_tensor(Shape{1, 2, 3, 3}, seed);
        Tensor b = random_tensor(Shape{1, 2, 3, 3}, seed + 1000);
        ChannelStats sb = channel_stats(b);
        bool well_scaled = true;
        for (int64_t i = 0; i < sb.std.numel(); ++i)
            well_scaled = well_scaled && sb.std[size_t(i)] > 10 * kStdEps;
        if (!well_scaled) continue;
        ChannelStats so = channel_stats(adain(a, b));
        CHECK(max_abs_diff(so.mean, sb.mean) <= 1e-5);
        CHECK(max_abs_diff(so.std, sb.std) <= 1e-5);
    }
}

TEST_CASE("adain is idempotent in the style argument") {
    Tensor a = random_tensor(Shape{2, 3, 4, 4}, 5);
    Tensor b = random_tensor(Shape{2, 3, 6, 6}, 6);
    Tensor once = adain(a, b);
    Tensor twice = adain(once, b);
    CHECK(max_abs_diff(once, twice) <= 1e-5);
}

TEST_CASE("adain rejects (B,C) mismatch") {
    Tensor a = random_tensor(Shape{1, 2, 3, 3}, 1);
    Tensor b = random_tensor(Shape{1, 3, 3, 3}, 2);
    CHECK_THROWS_AS(adain(a, b), ShapeError);
}

TEST_CASE("content_loss basics") {
    Tensor f = random_tensor(Shape{1, 2, 3, 3}, 3);
    CHECK(content_loss(f, f) == 0.0);

    Tensor ones = Tensor::full(Shape{1, 1, 1, 2}, 1.0);
    Tensor zeros(Shape{1, 1, 1, 2});
    CHECK(content_loss(ones, zeros) == doctest::Approx(std::sqrt(2.0)));

    CHECK(content_loss(f, adain(f, f)) <= 1e-6);

    Tensor g = f;
    g.at(0, 0, 0, 0) += 1e-7;
    CHECK(content_loss(f, g) > 0.0);

    CHECK_THROWS_AS(content_loss(ones, Tensor(Shape{1, 1, 2, 2})), ShapeError);
}

TEST_CASE("adain gradient matches central finite differences") {
    Var a = parameter(random_tensor(Shape{1, 2, 3, 3}, 21), "a");
    Var b = parameter(random_tensor(Shape{1, 2, 3, 3}, 22), "b");
    Tensor probe_w = random_tensor(Shape{1, 2, 3, 3}, 23);
    auto loss = [&] { return dot(adain(a, b), constant(probe_w)); };
    auto res = ashtest::gradcheck(loss, {a, b}, 1e-3);
    CHECK(res.checked == 36);
    CHECK(res.max_rel_err <= 1e-3);
}

TEST_CASE("content_loss gradient matches central finite differences") {
    Var a = parameter(random_tensor(Shape{1, 2, 3, 3}, 31), "a");
    Var b = parameter(random_tensor(Shape{1, 2, 3, 3}, 32), "b");
    auto loss = [&] { return content_loss(a, b); };
    auto res = ashtest::gradcheck(loss, {a, b}, 1e-3);
    CHECK(res.max_rel_err <= 1e-3);
}

TEST_CASE("adain composed with stats keeps shapes") {
    // statistics are per-channel scalars, so spatial sizes may differ
    Tensor a = random_tensor(Shape{2, 3, 5, 7}, 41);
    Tensor b = random_tensor(Shape{2, 3, 2, 2}, 42);
    Tensor out = adain(a, b);
    CHECK(out.shape() == a.shape());
}
