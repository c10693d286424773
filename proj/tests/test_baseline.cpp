#include <doctest.h>

#include <random>

#include "ddspamp/baseline_gru.hpp"
#include "ddspamp/grad_check.hpp"
#include "test_util.hpp"

using namespace ddspamp;

TEST_CASE("baseline: parameter counts reproduce the published table") {
    {
        ParamStore store;
        ConcatGruModel small(8, store, 1);
        CHECK(small.param_count() == 369);
        CHECK(store.scalar_count() == 369);
    }
    {
        ParamStore store;
        ConcatGruModel big(48, store, 1);
        CHECK(big.param_count() == 7969);
        CHECK(store.scalar_count() == 7969);
    }
}

TEST_CASE("baseline: zero weights output the constant head bias") {
    ParamStore store;
    ConcatGruModel m(8, store, 2);
    for (auto& e : store.entries())
        std::fill(e.value.begin(), e.value.end(), 0.0);
    store.by_name("head.b").value[0] = 0.37;
    auto st = m.make_state();
    const auto y = m.process(store, {}, testutil::white_noise(64, 80), st);
    for (double v : y)
        CHECK(v == 0.37);
}

TEST_CASE("baseline: block-split processing is bit-exact") {
    ParamStore store;
    ConcatGruModel m(8, store, 3);
    const KnobVector knobs{0.2, 0.4, 0.6, 0.8, 0.5};
    const auto x = testutil::white_noise(1024, 81, 0.5);

    auto whole_state = m.make_state();
    const auto whole = m.process(store, knobs, x, whole_state);

    auto split_state = m.make_state();
    std::vector<double> split;
    for (int b = 0; b < 4; ++b) {
        std::vector<double> chunk(x.begin() + b * 256, x.begin() + (b + 1) * 256);
        const auto part = m.process(store, knobs, chunk, split_state);
        split.insert(split.end(), part.begin(), part.end());
    }
    REQUIRE(split.size() == whole.size());
    for (std::size_t i = 0; i < whole.size(); ++i)
        CHECK(split[i] == whole[i]);
}

TEST_CASE("baseline: plain and tape forwards agree bit for bit") {
    ParamStore store;
    ConcatGruModel m(8, store, 4);
    const KnobVector knobs{0.3, 0.5, 0.7, 0.2, 0.9};
    const auto x = testutil::white_noise(256, 82, 0.5);

    auto st = m.make_state();
    const auto plain = m.process(store, knobs, x, st);

    Tape t;
    TV y = m.build_train_graph(t, store, knobs, x);
    REQUIRE(y.len() == plain.size());
    for (std::size_t i = 0; i < plain.size(); ++i)
        CHECK(y.value(i) == plain[i]);
}

TEST_CASE("baseline: every parameter gradient matches finite differences (64 samples)") {
    ParamStore store;
    ConcatGruModel m(8, store, 5);
    const KnobVector knobs{0.3, 0.5, 0.7, 0.2, 0.9};
    const auto x = testutil::white_noise(64, 83, 0.5);
    const auto w = testutil::white_noise(64, 84);

    auto build = [&](Tape& t, const ParamStore& s) {
        TV y = m.build_train_graph(t, s, knobs, x);
        return t.sum(t.mul(y, t.constant(w)));
    };
    Tape tape;
    TV loss = build(tape, store);
    const Gradient g = tape.backward(loss, store);
    auto fn = [&](const ParamStore& s) {
        Tape t2;
        return build(t2, s).value();
    };
    const auto res = grad_check(fn, store, g, 1e-5, 1e-7, 1e-4);
    CAPTURE(res.worst.name);
    CAPTURE(res.worst.analytic);
    CAPTURE(res.worst.numeric);
    CAPTURE(res.failed);
    CHECK(res.pass);
}

TEST_CASE("baseline: rejects a mismatched stream state") {
    ParamStore s8, s48;
    ConcatGruModel m8(8, s8, 6);
    ConcatGruModel m48(48, s48, 6);
    auto st = m48.make_state();
    CHECK_THROWS(m8.process(s8, {}, {0.1, 0.2}, st));
}
