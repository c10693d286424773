#include "ddspamp/baseline_gru.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "ddspamp/gru1.hpp"

namespace ddspamp {

ConcatGruModel::ConcatGruModel(int hidden, ParamStore& store, unsigned seed, int knob_count)
    : h_(hidden), k_(knob_count) {
    if (h_ < 1 || k_ < 0)
        throw std::runtime_error("ConcatGruModel: bad dimensions");
    const std::size_t h = static_cast<std::size_t>(h_);
    const std::size_t in_dim = 1 + static_cast<std::size_t>(k_);
    std::mt19937 rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(h));
    std::uniform_real_distribution<double> dist(-bound, bound);
    auto draw = [&](std::size_t n) {
        std::vector<double> v(n);
        for (double& x : v)
            x = dist(rng);
        return v;
    };
    e_wih_ = store.add("gru.w_ih", draw(3 * h * in_dim));
    e_whh_ = store.add("gru.w_hh", draw(3 * h * h));
    e_bias_ = store.add("gru.bias", draw(3 * h));
    e_headw_ = store.add("head.w", draw(h));
    e_headb_ = store.add("head.b", draw(1));
}

std::size_t ConcatGruModel::param_count() const {
    const std::size_t h = static_cast<std::size_t>(h_);
    const std::size_t k = static_cast<std::size_t>(k_);
    return 3 * h * (1 + k + h) + 3 * h + h + 1;
}

std::vector<double> ConcatGruModel::normalized_knobs(const KnobVector& k) const {
    k.validate();
    const auto arr = k.as_array();
    if (static_cast<std::size_t>(k_) > arr.size())
        throw std::runtime_error("ConcatGruModel: more knobs than the knob vector provides");
    std::vector<double> out(static_cast<std::size_t>(k_));
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = KnobVector::normalized(arr[i]);
    return out;
}

std::vector<double> ConcatGruModel::process(const ParamStore& store, const KnobVector& knobs,
                                            const std::vector<double>& block,
                                            State& state) const {
    const std::size_t h = static_cast<std::size_t>(h_);
    if (state.h.size() != h)
        throw std::runtime_error("ConcatGruModel: state size mismatch (use make_state)");
    const auto& w_ih = store.at(e_wih_).value;
    const auto& w_hh = store.at(e_whh_).value;
    const auto& bias = store.at(e_bias_).value;
    const auto& head_w = store.at(e_headw_).value;
    const double head_b = store.at(e_headb_).value[0];
    const auto kn = normalized_knobs(knobs);
    const std::size_t in_dim = 1 + kn.size();

    std::vector<double> y(block.size());
    std::vector<double> r(h), z(h), c(h);
    std::vector<double>& hv = state.h;
    for (std::size_t t = 0; t < block.size(); ++t) {
        for (std::size_t i = 0; i < h; ++i) {
            auto gate_pre = [&](std::size_t row) {
                double acc = bias[row] + w_ih[row * in_dim] * block[t];
                for (std::size_t j = 0; j < kn.size(); ++j)
                    acc += w_ih[row * in_dim + 1 + j] * kn[j];
                const double* hw = &w_hh[row * h];
                double rec = 0.0;
                for (std::size_t j = 0; j < h; ++j)
                    rec += hw[j] * hv[j];
                return std::pair<double, double>(acc, rec);
            };
            auto [ar_in, ar_rec] = gate_pre(i);
            r[i] = sigmoid(ar_in + ar_rec);
            auto [az_in, az_rec] = gate_pre(h + i);
            z[i] = sigmoid(az_in + az_rec);
            auto [ac_in, ac_rec] = gate_pre(2 * h + i);
            c[i] = std::tanh(ac_in + r[i] * ac_rec);
        }
        double out = head_b;
        for (std::size_t i = 0; i < h; ++i) {
            hv[i] = (1.0 - z[i]) * c[i] + z[i] * hv[i];
            out += head_w[i] * hv[i];
        }
        y[t] = out;
    }
    return y;
}

TV ConcatGruModel::build_train_graph(Tape& t, const ParamStore& store, const KnobVector& knobs,
                                     const std::vector<double>& input) const {
    return t.concat_gru_seq(t.param(store, e_wih_), t.param(store, e_whh_),
                            t.param(store, e_bias_), t.param(store, e_headw_),
                            t.param(store, e_headb_), t.constant(input),
                            t.constant(normalized_knobs(knobs)),
                            t.constant(std::vector<double>(static_cast<std::size_t>(h_), 0.0)),
                            h_);
}

} // namespace ddspamp
