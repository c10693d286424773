#include <doctest.h>

#include <cmath>
#include <random>

#include "ddspamp/losses.hpp"
#include "ddspamp/grad_check.hpp"
#include "test_util.hpp"

using namespace ddspamp;

namespace {

// Independent MR-STFT oracle built on the brute-force DFT.
double oracle_mrstft(const std::vector<double>& y, const std::vector<double>& yh) {
    double total = 0.0;
    for (std::size_t w : {std::size_t{128}, std::size_t{512}, std::size_t{2048}}) {
        const std::size_t hop = w / 4;
        std::vector<double> win(w);
        for (std::size_t i = 0; i < w; ++i)
            win[i] = 0.5 * (1.0 - std::cos(2.0 * M_PI * static_cast<double>(i) /
                                           static_cast<double>(w)));
        double num = 0.0, den = 0.0, log_acc = 0.0;
        std::size_t bins = 0;
        for (std::size_t start = 0; start + w <= y.size(); start += hop) {
            std::vector<double> fy(w), fh(w);
            for (std::size_t i = 0; i < w; ++i) {
                fy[i] = y[start + i] * win[i];
                fh[i] = yh[start + i] * win[i];
            }
            const auto sy = testutil::naive_dft(fy);
            const auto sh = testutil::naive_dft(fh);
            for (std::size_t k = 0; k <= w / 2; ++k) {
                const double my = std::hypot(sy[2 * k], sy[2 * k + 1]);
                const double mh = std::hypot(sh[2 * k], sh[2 * k + 1]);
                num += (my - mh) * (my - mh);
                den += my * my;
                log_acc += std::abs(std::log(my + 1e-7) - std::log(mh + 1e-7));
                ++bins;
            }
        }
        total += std::sqrt(num) / std::sqrt(den) + log_acc / static_cast<double>(bins);
    }
    return total;
}

} // namespace

TEST_CASE("mae: identical signals give zero") {
    const auto x = testutil::white_noise(100, 50);
    CHECK(mae_loss(x, x) == 0.0);
}

TEST_CASE("mae: hand example [1,-1] vs [0,0] gives 1") {
    CHECK(mae_loss({1.0, -1.0}, {0.0, 0.0}) == 1.0);
}

TEST_CASE("mae: matches the elementwise oracle on random pairs") {
    std::mt19937 rng(51);
    for (int trial = 0; trial < 20; ++trial) {
        const auto y = testutil::white_noise(777, 100 + static_cast<unsigned>(trial));
        const auto yh = testutil::white_noise(777, 200 + static_cast<unsigned>(trial));
        double acc = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i)
            acc += std::abs(y[i] - yh[i]);
        const double oracle = acc / 777.0;
        CHECK(mae_loss(y, yh) == doctest::Approx(oracle).epsilon(1e-14));
    }
}

TEST_CASE("mae: rejects mismatched or empty inputs") {
    CHECK_THROWS(mae_loss({1.0}, {1.0, 2.0}));
    CHECK_THROWS(mae_loss({}, {}));
}

TEST_CASE("mrstft: identical signals give exactly zero") {
    const auto x = testutil::white_noise(4096, 52);
    CHECK(mrstft_loss(x, x) == 0.0);
}

TEST_CASE("mrstft: spectral convergence is exactly 1 for yhat = 2y") {
    const auto y = testutil::white_noise(4096, 53, 0.5);
    auto yh = y;
    for (double& v : yh)
        v *= 2.0;
    const auto parts = mrstft_breakdown(y, yh);
    for (const auto& p : parts.per_resolution)
        CHECK(p.sc == 1.0);
}

TEST_CASE("mrstft: matches the brute-force DFT oracle") {
    for (int trial = 0; trial < 3; ++trial) {
        const auto y = testutil::white_noise(4096, 300 + static_cast<unsigned>(trial));
        const auto yh = testutil::white_noise(4096, 400 + static_cast<unsigned>(trial));
        const double fast = mrstft_loss(y, yh);
        const double slow = oracle_mrstft(y, yh);
        CHECK(std::abs(fast - slow) / std::abs(slow) < 1e-6);
    }
}

TEST_CASE("mrstft: rejects segments shorter than the largest window") {
    const auto x = testutil::white_noise(1024, 54);
    CHECK_THROWS(mrstft_loss(x, x));
}

TEST_CASE("tape losses: values agree with the plain implementations bit for bit") {
    const auto y = testutil::white_noise(4096, 55);
    const auto yh = testutil::white_noise(4096, 56);
    Tape t;
    TV yhat = t.constant(yh);
    CHECK(mae_loss_tv(t, y, yhat).value() == mae_loss(y, yh));
    CHECK(mrstft_loss_tv(t, y, yhat).value() == mrstft_loss(y, yh));
}

TEST_CASE("tape mrstft: scaling identity survives the differentiable path") {
    const auto y = testutil::white_noise(2048, 57, 0.5);
    auto yh = y;
    for (double& v : yh)
        v *= 2.0;
    Tape t;
    const double tape_total = mrstft_loss_tv(t, y, t.constant(yh)).value();
    CHECK(tape_total == mrstft_loss(y, yh));
}

TEST_CASE("tape losses: gradients match finite differences") {
    // yhat = a*x + b*w with scalar a, b keeps the finite-difference sweep small
    // while exercising the full STFT graph
    const auto x = testutil::white_noise(2048, 58, 0.5);
    const auto w = testutil::white_noise(2048, 59, 0.5);
    const auto target = testutil::white_noise(2048, 60, 0.5);
    ParamStore store;
    const int ea = store.add("a", {0.9});
    const int eb = store.add("b", {0.2});
    auto build = [&](Tape& t, const ParamStore& s) {
        TV yhat = t.add(t.scale(t.param(s, ea), t.constant(x)),
                        t.scale(t.param(s, eb), t.constant(w)));
        return t.add(mae_loss_tv(t, target, yhat), mrstft_loss_tv(t, target, yhat));
    };
    Tape tape;
    TV loss = build(tape, store);
    Gradient g = tape.backward(loss, store);
    auto fn = [&](const ParamStore& s) {
        Tape t2;
        return build(t2, s).value();
    };
    const auto res = grad_check(fn, store, g, 1e-6, 1e-7, 1e-4);
    CAPTURE(res.worst.name);
    CAPTURE(res.worst.analytic);
    CAPTURE(res.worst.numeric);
    CHECK(res.pass);
}
