#include "ddspamp/controller.hpp"

#include <cmath>
#include <stdexcept>

#include "ddspamp/gru1.hpp"
#include "ddspamp/primitives.hpp"

namespace ddspamp {

namespace {

std::vector<double> uniform_fan_in(std::mt19937& rng, std::size_t n, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<double> v(n);
    for (double& x : v)
        x = dist(rng);
    return v;
}

std::vector<double> dense_plain(const std::vector<double>& w, const std::vector<double>& b,
                                const std::vector<double>& x, std::size_t rows,
                                std::size_t cols) {
    std::vector<double> y(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        double acc = b[r];
        const double* wr = &w[r * cols];
        for (std::size_t c = 0; c < cols; ++c)
            acc += wr[c] * x[c];
        y[r] = acc;
    }
    return y;
}

std::vector<Tape::Range> to_tape_ranges(const std::vector<ParamRange>& rs) {
    std::vector<Tape::Range> out;
    out.reserve(rs.size());
    for (const ParamRange& r : rs)
        out.push_back({r.lo, r.hi, r.log_scale});
    return out;
}

} // namespace

double map_range(const ParamRange& r, double u) {
    if (r.log_scale)
        return r.lo * std::pow(r.hi / r.lo, u);
    return r.lo + u * (r.hi - r.lo);
}

double neutral_logit(const ParamRange& r) {
    if (std::isnan(r.neutral))
        return 0.0;
    double u = r.log_scale ? std::log(r.neutral / r.lo) / std::log(r.hi / r.lo)
                           : (r.neutral - r.lo) / (r.hi - r.lo);
    u = std::min(0.99, std::max(0.01, u));
    return std::log(u / (1.0 - u));
}

MlpController::MlpController(ParamStore& store, std::string prefix, int in_dim,
                             std::vector<ParamRange> out_ranges, std::mt19937& rng)
    : in_(in_dim), ranges_(std::move(out_ranges)) {
    if (in_ < 1)
        throw std::runtime_error("MlpController: need at least one input");
    if (ranges_.empty())
        throw std::runtime_error("MlpController: need at least one output");
    for (const ParamRange& r : ranges_) {
        if (!(r.lo < r.hi))
            throw std::runtime_error("MlpController: range lo must be below hi");
        if (r.log_scale && !(r.lo > 0.0))
            throw std::runtime_error("MlpController: log range requires lo > 0");
    }
    const std::size_t h = kHidden;
    const std::size_t in = static_cast<std::size_t>(in_);
    const std::size_t out = ranges_.size();
    e_w1_ = store.add(prefix + ".w1", uniform_fan_in(rng, h * in, in));
    e_b1_ = store.add(prefix + ".b1", uniform_fan_in(rng, h, in));
    e_w2_ = store.add(prefix + ".w2", uniform_fan_in(rng, h * h, h));
    e_b2_ = store.add(prefix + ".b2", uniform_fan_in(rng, h, h));
    e_w3_ = store.add(prefix + ".w3", uniform_fan_in(rng, out * h, h));
    // final bias starts at the neutral logit so initial outputs sit at each
    // range's neutral value regardless of the knob inputs
    std::vector<double> b3(out);
    for (std::size_t i = 0; i < out; ++i)
        b3[i] = neutral_logit(ranges_[i]);
    e_b3_ = store.add(prefix + ".b3", b3);
}

std::size_t MlpController::param_count() const {
    const std::size_t h = kHidden, in = static_cast<std::size_t>(in_), out = ranges_.size();
    return h * in + h + h * h + h + out * h + out;
}

std::vector<double> MlpController::eval(const ParamStore& store,
                                        const std::vector<double>& inputs) const {
    if (inputs.size() != static_cast<std::size_t>(in_))
        throw std::runtime_error("MlpController: input size mismatch");
    const std::size_t h = kHidden;
    auto a1 = dense_plain(store.at(e_w1_).value, store.at(e_b1_).value, inputs, h,
                          static_cast<std::size_t>(in_));
    for (double& v : a1)
        v = leaky_relu(v, kLeakySlope);
    auto a2 = dense_plain(store.at(e_w2_).value, store.at(e_b2_).value, a1, h, h);
    for (double& v : a2)
        v = leaky_relu(v, kLeakySlope);
    auto a3 = dense_plain(store.at(e_w3_).value, store.at(e_b3_).value, a2, ranges_.size(), h);
    std::vector<double> out(ranges_.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = map_range(ranges_[i], sigmoid(a3[i]));
    return out;
}

TV MlpController::eval_tv(Tape& t, const ParamStore& store,
                          const std::vector<double>& inputs) const {
    if (inputs.size() != static_cast<std::size_t>(in_))
        throw std::runtime_error("MlpController: input size mismatch");
    TV x = t.constant(inputs);
    TV a1 = t.leaky_relu(t.dense(t.param(store, e_w1_), t.param(store, e_b1_), x, kHidden, in_),
                         kLeakySlope);
    TV a2 = t.leaky_relu(
        t.dense(t.param(store, e_w2_), t.param(store, e_b2_), a1, kHidden, kHidden),
        kLeakySlope);
    TV a3 = t.dense(t.param(store, e_w3_), t.param(store, e_b3_), a2, out_dim(), kHidden);
    return t.range_map(t.sigmoid(a3), to_tape_ranges(ranges_));
}

StaticController::StaticController(ParamStore& store, std::string prefix,
                                   std::vector<ParamRange> out_ranges)
    : ranges_(std::move(out_ranges)) {
    for (const ParamRange& r : ranges_) {
        if (!(r.lo < r.hi))
            throw std::runtime_error("StaticController: range lo must be below hi");
        if (r.log_scale && !(r.lo > 0.0))
            throw std::runtime_error("StaticController: log range requires lo > 0");
    }
    std::vector<double> raw(ranges_.size());
    for (std::size_t i = 0; i < raw.size(); ++i)
        raw[i] = neutral_logit(ranges_[i]);
    e_raw_ = store.add(prefix + ".raw", raw);
}

std::vector<double> StaticController::eval(const ParamStore& store) const {
    const auto& raw = store.at(e_raw_).value;
    std::vector<double> out(ranges_.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = map_range(ranges_[i], sigmoid(raw[i]));
    return out;
}

TV StaticController::eval_tv(Tape& t, const ParamStore& store) const {
    return t.range_map(t.sigmoid(t.param(store, e_raw_)), to_tape_ranges(ranges_));
}

} // namespace ddspamp
