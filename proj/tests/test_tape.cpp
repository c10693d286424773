#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "ddspamp/biquad.hpp"
#include "ddspamp/fft.hpp"
#include "ddspamp/grad_check.hpp"
#include "ddspamp/gru1.hpp"
#include "ddspamp/tape.hpp"
#include "test_util.hpp"

using namespace ddspamp;

namespace {

using Builder = std::function<TV(Tape&, const ParamStore&)>;

// Record the graph once for the analytic gradient, then re-record it under
// perturbed parameters for the central-difference oracle.
GradCheckResult check_builder(const Builder& build, ParamStore& store, double step = 1e-5,
                              double abs_tol = 1e-7, double rel_tol = 1e-4) {
    Tape tape;
    TV loss = build(tape, store);
    REQUIRE(loss.len() == 1);
    Gradient g = tape.backward(loss, store);
    auto fn = [&](const ParamStore& s) {
        Tape t;
        return build(t, s).value(0);
    };
    return grad_check(fn, store, g, step, abs_tol, rel_tol);
}

void expect_pass(const GradCheckResult& r) {
    CAPTURE(r.worst.name);
    CAPTURE(r.worst.analytic);
    CAPTURE(r.worst.numeric);
    CAPTURE(r.max_rel_err_failing);
    CHECK(r.pass);
}

std::vector<double> rand_vec(std::mt19937& rng, std::size_t n, double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> v(n);
    for (double& x : v)
        x = dist(rng);
    return v;
}

} // namespace

TEST_CASE("tape: d(theta^2)/d(theta) = 2 theta") {
    ParamStore store;
    const int e = store.add("theta", {3.0});
    Tape tape;
    TV th = tape.param(store, e);
    TV loss = tape.mul(th, th);
    Gradient g = tape.backward(loss, store);
    CHECK(loss.value() == 9.0);
    CHECK(g.at(e, 0) == 6.0);
}

TEST_CASE("tape: elementwise op gradients match finite differences") {
    std::mt19937 rng(21);
    const auto w = rand_vec(rng, 8, -1.0, 1.0);

    auto scalar_probe = [&](const char* name, auto&& apply, double lo, double hi) {
        ParamStore store;
        std::mt19937 inner(std::hash<std::string>{}(name) & 0xffff);
        const int e = store.add("x", rand_vec(inner, 8, lo, hi));
        Builder build = [&, e](Tape& t, const ParamStore& s) {
            TV x = t.param(s, e);
            TV y = apply(t, x);
            return t.sum(t.mul(y, t.constant(w)));
        };
        CAPTURE(name);
        expect_pass(check_builder(build, store));
    };

    scalar_probe("tanh", [](Tape& t, TV x) { return t.tanh(x); }, -2.0, 2.0);
    scalar_probe("sigmoid", [](Tape& t, TV x) { return t.sigmoid(x); }, -3.0, 3.0);
    scalar_probe("leaky_relu", [](Tape& t, TV x) { return t.leaky_relu(x, 0.1); }, -2.0, 2.0);
    scalar_probe("log", [](Tape& t, TV x) { return t.log(x); }, 0.2, 3.0);
    scalar_probe("exp", [](Tape& t, TV x) { return t.exp(x); }, -1.0, 1.0);
    scalar_probe("abs", [](Tape& t, TV x) { return t.abs(x); }, 0.1, 2.0);
    scalar_probe("sqrt", [](Tape& t, TV x) { return t.sqrt(x); }, 0.2, 4.0);
    scalar_probe("sin", [](Tape& t, TV x) { return t.sin(x); }, -2.0, 2.0);
    scalar_probe("cos", [](Tape& t, TV x) { return t.cos(x); }, -2.0, 2.0);
    scalar_probe("neg", [](Tape& t, TV x) { return t.neg(x); }, -2.0, 2.0);
    scalar_probe("add_c", [](Tape& t, TV x) { return t.add_c(x, 0.7); }, -2.0, 2.0);
    scalar_probe("mul_c", [](Tape& t, TV x) { return t.mul_c(x, -1.3); }, -2.0, 2.0);
}

TEST_CASE("tape: binary op gradients match finite differences") {
    std::mt19937 rng(22);
    const auto w = rand_vec(rng, 6, -1.0, 1.0);
    ParamStore store;
    const int ea = store.add("a", rand_vec(rng, 6, -2.0, 2.0));
    const int eb = store.add("b", rand_vec(rng, 6, 0.5, 2.5));
    auto probe = [&](const char* name, auto&& apply) {
        Builder build = [&](Tape& t, const ParamStore& s) {
            TV a = t.param(s, ea);
            TV b = t.param(s, eb);
            return t.sum(t.mul(apply(t, a, b), t.constant(w)));
        };
        CAPTURE(name);
        expect_pass(check_builder(build, store));
    };
    probe("add", [](Tape& t, TV a, TV b) { return t.add(a, b); });
    probe("sub", [](Tape& t, TV a, TV b) { return t.sub(a, b); });
    probe("mul", [](Tape& t, TV a, TV b) { return t.mul(a, b); });
    probe("div", [](Tape& t, TV a, TV b) { return t.div(a, b); });
}

TEST_CASE("tape: structural ops (scale, slice, zero_pad, sum) match finite differences") {
    std::mt19937 rng(23);
    ParamStore store;
    const int eg = store.add("g", {1.3});
    const int ex = store.add("x", rand_vec(rng, 10, -1.0, 1.0));
    const auto w = rand_vec(rng, 16, -1.0, 1.0);
    Builder build = [&](Tape& t, const ParamStore& s) {
        TV gn = t.param(s, eg);
        TV x = t.param(s, ex);
        TV scaled = t.scale(gn, x);
        TV sliced = t.slice(scaled, 2, 6);
        TV padded = t.zero_pad(sliced, 16);
        return t.sum(t.mul(padded, t.constant(w)));
    };
    expect_pass(check_builder(build, store));
}

TEST_CASE("tape: spectral pipeline gradients match finite differences") {
    // x -> zero-pad -> fft -> apply biquad response -> ifft -> slice -> loss,
    // which is exactly the frequency-sampling filter fragment used in training
    std::mt19937 rng(24);
    ParamStore store;
    const int ex = store.add("x", rand_vec(rng, 48, -0.8, 0.8));
    const auto w = rand_vec(rng, 48, -1.0, 1.0);
    Builder build = [&](Tape& t, const ParamStore& s) {
        TV x = t.param(s, ex);
        TV spec = t.fft(t.zero_pad(x, 128));
        TV mags = t.cabs(spec);
        TV y = t.ifft(spec);
        TV sl = t.slice(y, 0, 48);
        TV l1 = t.sum(t.mul(sl, t.constant(w)));
        TV l2 = t.mul_c(t.sum(mags), 1e-2);
        return t.add(l1, l2);
    };
    expect_pass(check_builder(build, store));
}

TEST_CASE("tape: cmul gradients match finite differences on both operands") {
    std::mt19937 rng(25);
    ParamStore store;
    const int ea = store.add("a", rand_vec(rng, 16, -1.0, 1.0)); // 8 complex bins
    const int eb = store.add("b", rand_vec(rng, 16, -1.0, 1.0));
    const auto w = rand_vec(rng, 16, -1.0, 1.0);
    Builder build = [&](Tape& t, const ParamStore& s) {
        TV prod = t.cmul(t.param(s, ea), t.param(s, eb));
        return t.sum(t.mul(prod, t.constant(w)));
    };
    expect_pass(check_builder(build, store));
}

TEST_CASE("tape: biquad_response coefficient gradients match finite differences") {
    ParamStore store;
    const int ec = store.add("coeffs", {0.9, 0.2, -0.1, -0.4, 0.2});
    const auto w = testutil::white_noise(128, 26);
    Builder build = [&](Tape& t, const ParamStore& s) {
        TV c = t.param(s, ec);
        TV h = t.biquad_response(t.slice(c, 0, 1), t.slice(c, 1, 1), t.slice(c, 2, 1),
                                 t.slice(c, 3, 1), t.slice(c, 4, 1), 64);
        return t.sum(t.mul(h, t.constant(w)));
    };
    expect_pass(check_builder(build, store));
}

TEST_CASE("tape: frequency-sampling biquad coefficient gradients (256-sample segment)") {
    std::mt19937 rng(27);
    const auto x = testutil::white_noise(256, 28);
    const auto w = rand_vec(rng, 256, -1.0, 1.0);
    ParamStore store;
    const int ec = store.add("coeffs", {0.8, 0.25, 0.1, -0.5, 0.3});
    Builder build = [&](Tape& t, const ParamStore& s) {
        TV c = t.param(s, ec);
        const int m = static_cast<int>(Fft::next_pow2(2 * x.size()));
        TV spec = t.fft(t.zero_pad(t.constant(x), m));
        TV h = t.biquad_response(t.slice(c, 0, 1), t.slice(c, 1, 1), t.slice(c, 2, 1),
                                 t.slice(c, 3, 1), t.slice(c, 4, 1), m);
        TV y = t.slice(t.ifft(t.cmul(spec, h)), 0, static_cast<int>(x.size()));
        return t.sum(t.mul(y, t.constant(w)));
    };
    // rel 1e-4 per the frequency-sampling gradient contract
    expect_pass(check_builder(build, store, 1e-5, 1e-7, 1e-4));
}

TEST_CASE("tape: forward of the fs fragment equals biquad_process_fs") {
    const auto x = testutil::white_noise(256, 29);
    const BiquadCoeffs c{0.8, 0.25, 0.1, -0.5, 0.3};
    const auto ref = biquad_process_fs(c, x);
    Tape t;
    const int m = static_cast<int>(Fft::next_pow2(2 * x.size()));
    TV spec = t.fft(t.zero_pad(t.constant(x), m));
    TV h = t.biquad_response(t.scalar(c.b0), t.scalar(c.b1), t.scalar(c.b2), t.scalar(c.a1),
                             t.scalar(c.a2), m);
    TV y = t.slice(t.ifft(t.cmul(spec, h)), 0, static_cast<int>(x.size()));
    CHECK(testutil::max_abs_diff(y.values(), ref) < 1e-12);
}

TEST_CASE("tape: gru1 sequence gradients match finite differences (64 samples)") {
    std::mt19937 rng(30);
    ParamStore store;
    const int ep = store.add("gru", rand_vec(rng, 9, -0.5, 0.5));
    const auto x = testutil::white_noise(64, 31);
    const auto w = rand_vec(rng, 64, -1.0, 1.0);
    Builder build = [&](Tape& t, const ParamStore& s) {
        TV y = t.gru1_seq(t.param(s, ep), t.constant(x), t.scalar(0.0));
        return t.sum(t.mul(y, t.constant(w)));
    };
    // h = 1e-4 with 1e-4 relative / 1e-7 absolute acceptance
    expect_pass(check_builder(build, store, 1e-4, 1e-7, 1e-4));
}

TEST_CASE("tape: gru1_seq forward equals gru1_process") {
    std::mt19937 rng(32);
    const auto pv = rand_vec(rng, 9, -0.6, 0.6);
    const auto x = testutil::white_noise(128, 33);
    Gru1State st;
    const auto ref = gru1_process(Gru1Params::from_flat(pv.data()), x, st);
    Tape t;
    TV y = t.gru1_seq(t.constant(pv), t.constant(x), t.scalar(0.0));
    CHECK(testutil::max_abs_diff(y.values(), ref) == 0.0);
}

TEST_CASE("tape: gru1_seq h0 gradient flows") {
    ParamStore store;
    const int eh = store.add("h0", {0.3});
    const auto x = testutil::white_noise(16, 34);
    std::mt19937 rng(35);
    const auto pv = rand_vec(rng, 9, -0.5, 0.5);
    const auto w = rand_vec(rng, 16, -1.0, 1.0);
    Builder build = [&](Tape& t, const ParamStore& s) {
        TV y = t.gru1_seq(t.constant(pv), t.constant(x), t.param(s, eh));
        return t.sum(t.mul(y, t.constant(w)));
    };
    expect_pass(check_builder(build, store, 1e-5));
}

TEST_CASE("tape: gru1_seq input-signal gradient flows") {
    ParamStore store;
    std::mt19937 rng(36);
    const int ex = store.add("x", rand_vec(rng, 24, -0.8, 0.8));
    const auto pv = rand_vec(rng, 9, -0.5, 0.5);
    const auto w = rand_vec(rng, 24, -1.0, 1.0);
    Builder build = [&](Tape& t, const ParamStore& s) {
        TV y = t.gru1_seq(t.constant(pv), t.param(s, ex), t.scalar(0.0));
        return t.sum(t.mul(y, t.constant(w)));
    };
    expect_pass(check_builder(build, store));
}

TEST_CASE("tape: dense layer gradients match finite differences") {
    std::mt19937 rng(37);
    ParamStore store;
    const int ew = store.add("w", rand_vec(rng, 12, -1.0, 1.0)); // 4x3
    const int eb = store.add("b", rand_vec(rng, 4, -0.5, 0.5));
    const int ex = store.add("x", rand_vec(rng, 3, -1.0, 1.0));
    const auto w = rand_vec(rng, 4, -1.0, 1.0);
    Builder build = [&](Tape& t, const ParamStore& s) {
        TV y = t.dense(t.param(s, ew), t.param(s, eb), t.param(s, ex), 4, 3);
        return t.sum(t.mul(y, t.constant(w)));
    };
    expect_pass(check_builder(build, store));
}

TEST_CASE("tape: range_map forward endpoints and gradients") {
    // u=0 / u=1 hit the interval ends; log midpoint is the geometric mean
    Tape t;
    std::vector<Tape::Range> ranges{{20.0, 2000.0, true}, {-24.0, 24.0, false}};
    TV lo = t.range_map(t.constant({0.0, 0.0}), ranges);
    CHECK(lo.value(0) == doctest::Approx(20.0).epsilon(1e-12));
    CHECK(lo.value(1) == doctest::Approx(-24.0).epsilon(1e-12));
    TV hi = t.range_map(t.constant({1.0, 1.0}), ranges);
    CHECK(hi.value(0) == doctest::Approx(2000.0).epsilon(1e-12));
    CHECK(hi.value(1) == doctest::Approx(24.0).epsilon(1e-12));
    TV mid = t.range_map(t.constant({0.5, 0.5}), ranges);
    CHECK(mid.value(0) == doctest::Approx(200.0).epsilon(1e-12)); // sqrt(20*2000)
    CHECK(mid.value(1) == doctest::Approx(0.0).epsilon(1e-12));

    ParamStore store;
    const int eu = store.add("u", {0.3, 0.7});
    Builder build = [&](Tape& tp, const ParamStore& s) {
        TV m = tp.range_map(tp.sigmoid(tp.param(s, eu)), ranges);
        return tp.sum(tp.mul(m, tp.constant({1e-3, 1.0})));
    };
    expect_pass(check_builder(build, store));
}

TEST_CASE("tape: concat-gru gradients match finite differences (h=4, 2 knobs)") {
    std::mt19937 rng(38);
    const int h = 4, k = 2;
    ParamStore store;
    const int e_wih = store.add("w_ih", rand_vec(rng, 3 * h * (1 + k), -0.4, 0.4));
    const int e_whh = store.add("w_hh", rand_vec(rng, 3 * h * h, -0.4, 0.4));
    const int e_b = store.add("bias", rand_vec(rng, 3 * h, -0.2, 0.2));
    const int e_hw = store.add("head_w", rand_vec(rng, h, -0.5, 0.5));
    const int e_hb = store.add("head_b", {0.1});
    const auto x = testutil::white_noise(16, 39);
    const std::vector<double> knobs{0.3, 0.8};
    const auto w = rand_vec(rng, 16, -1.0, 1.0);
    Builder build = [&](Tape& t, const ParamStore& s) {
        TV y = t.concat_gru_seq(t.param(s, e_wih), t.param(s, e_whh), t.param(s, e_b),
                                t.param(s, e_hw), t.param(s, e_hb), t.constant(x),
                                t.constant(knobs), t.constant(std::vector<double>(h, 0.0)), h);
        return t.sum(t.mul(y, t.constant(w)));
    };
    expect_pass(check_builder(build, store, 1e-5));
}

TEST_CASE("tape: concat-gru zero weights output the head bias") {
    Tape t;
    const int h = 3, k = 5;
    TV y = t.concat_gru_seq(t.constant(std::vector<double>(3 * h * (1 + k), 0.0)),
                            t.constant(std::vector<double>(3 * h * h, 0.0)),
                            t.constant(std::vector<double>(3 * h, 0.0)),
                            t.constant(std::vector<double>(h, 0.0)), t.scalar(0.25),
                            t.constant(testutil::white_noise(32, 40)),
                            t.constant(std::vector<double>(k, 0.5)),
                            t.constant(std::vector<double>(h, 0.0)), h);
    for (std::size_t i = 0; i < y.len(); ++i)
        CHECK(y.value(i) == 0.25);
}

TEST_CASE("tape: shared biquad design formula differentiates end to end") {
    // sigmoid-mapped controller outputs -> cookbook design -> sampled response
    ParamStore store;
    const int eu = store.add("u", {0.2, -0.4, 0.6});
    const auto w = testutil::white_noise(64, 41);
    std::vector<Tape::Range> ranges{{200.0, 4000.0, true}, {-24.0, 24.0, false},
                                    {0.3, 3.0, true}};
    Builder build = [&](Tape& t, const ParamStore& s) {
        TV mapped = t.range_map(t.sigmoid(t.param(s, eu)), ranges);
        TV fc = t.slice(mapped, 0, 1);
        TV gain = t.slice(mapped, 1, 1);
        TV q = t.slice(mapped, 2, 1);
        const auto c = design_biquad_generic<TV>(FilterKind::Peak, fc, gain, q, 44100.0);
        TV h = t.biquad_response(c.b0, c.b1, c.b2, c.a1, c.a2, 32);
        return t.sum(t.mul(h, t.constant(w)));
    };
    expect_pass(check_builder(build, store));
}

TEST_CASE("tape: forward is linear through the linear subgraph") {
    const auto x = testutil::white_noise(64, 42);
    auto run = [&](double scale) {
        Tape t;
        auto xs = x;
        for (double& v : xs)
            v *= scale;
        TV spec = t.fft(t.zero_pad(t.constant(xs), 128));
        TV y = t.slice(t.ifft(spec), 0, 64);
        return y.values();
    };
    const auto y1 = run(1.0);
    const auto y2 = run(2.0);
    for (std::size_t i = 0; i < y1.size(); ++i)
        CHECK(y2[i] == doctest::Approx(2.0 * y1[i]).epsilon(1e-12));
}

TEST_CASE("tape: replay reproduces recorded values bit-exactly") {
    std::mt19937 rng(43);
    Tape t;
    TV x = t.constant(testutil::white_noise(96, 44));
    TV spec = t.fft(t.zero_pad(x, 256));
    TV h = t.biquad_response(t.scalar(0.9), t.scalar(0.1), t.scalar(-0.2), t.scalar(-0.3),
                             t.scalar(0.2), 256);
    TV y = t.slice(t.ifft(t.cmul(spec, h)), 0, 96);
    TV g = t.gru1_seq(t.constant(rand_vec(rng, 9, -0.5, 0.5)), y, t.scalar(0.0));
    TV loss = t.sum(t.abs(g));
    CHECK(loss.len() == 1);
    CHECK(t.replay_check() == 0.0);
}

TEST_CASE("tape: identical recordings give bitwise-identical gradients") {
    std::mt19937 rng(45);
    ParamStore store;
    const int ep = store.add("gru", rand_vec(rng, 9, -0.5, 0.5));
    const auto x = testutil::white_noise(128, 46);
    auto run = [&]() {
        Tape t;
        TV y = t.gru1_seq(t.param(store, ep), t.constant(x), t.scalar(0.0));
        TV loss = t.sum(t.abs(y));
        return t.backward(loss, store);
    };
    const Gradient g1 = run();
    const Gradient g2 = run();
    REQUIRE(g1.by_entry.size() == g2.by_entry.size());
    for (std::size_t e = 0; e < g1.by_entry.size(); ++e)
        for (std::size_t i = 0; i < g1.by_entry[e].size(); ++i)
            CHECK(g1.by_entry[e][i] == g2.by_entry[e][i]);
}

TEST_CASE("tape: backward twice on the same tape gives the same gradient") {
    ParamStore store;
    const int e = store.add("theta", {1.5});
    Tape t;
    TV th = t.param(store, e);
    TV loss = t.mul(th, t.tanh(th));
    const Gradient g1 = t.backward(loss, store);
    const Gradient g2 = t.backward(loss, store);
    CHECK(g1.at(e, 0) == g2.at(e, 0));
}

TEST_CASE("tape: abs subgradient at zero is zero") {
    ParamStore store;
    const int e = store.add("x", {0.0});
    Tape t;
    TV loss = t.sum(t.abs(t.param(store, e)));
    const Gradient g = t.backward(loss, store);
    CHECK(g.at(e, 0) == 0.0);
}

TEST_CASE("tape: non-finite forward values are reported with the node op") {
    Tape t;
    TV x = t.constant({-1.0});
    CHECK_THROWS_WITH_AS(t.log(x), doctest::Contains("log"), std::runtime_error);
    TV z = t.constant({0.0});
    CHECK_THROWS(t.div(t.constant({1.0}), z));
}

TEST_CASE("tape: param registration is idempotent") {
    ParamStore store;
    const int e = store.add("x", {1.0, 2.0});
    Tape t;
    TV a = t.param(store, e);
    TV b = t.param(store, e);
    CHECK(a.id == b.id);
    TV loss = t.sum(t.mul(a, b)); // x^2 summed
    const Gradient g = t.backward(loss, store);
    CHECK(g.at(e, 0) == 2.0);
    CHECK(g.at(e, 1) == 4.0);
}

TEST_CASE("tape: parameters unused by the loss get zero gradients") {
    ParamStore store;
    const int used = store.add("used", {2.0});
    const int unused = store.add("unused", {5.0, 7.0});
    Tape t;
    TV loss = t.mul(t.param(store, used), t.param(store, used));
    const Gradient g = t.backward(loss, store);
    CHECK(g.at(used, 0) == 4.0);
    CHECK(g.by_entry[static_cast<std::size_t>(unused)].size() == 2);
    CHECK(g.at(unused, 0) == 0.0);
    CHECK(g.at(unused, 1) == 0.0);
}

TEST_CASE("tape: shape and domain violations throw") {
    Tape t;
    TV a = t.constant({1.0, 2.0});
    TV b = t.constant({1.0});
    CHECK_THROWS(t.add(a, b));
    CHECK_THROWS(t.slice(a, 1, 5));
    CHECK_THROWS(t.zero_pad(a, 1));
    CHECK_THROWS(t.fft(t.constant(std::vector<double>(12, 0.0))));
    CHECK_THROWS(t.scale(a, b)); // gain must be scalar
    TV loss_like = t.constant({1.0, 2.0});
    ParamStore store;
    CHECK_THROWS(t.backward(loss_like, store)); // non-scalar loss
}
