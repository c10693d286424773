#include "ddspamp/tape.hpp"

#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <stdexcept>

#include "ddspamp/fft.hpp"

namespace ddspamp {

namespace {
inline double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// e^{-j 2 pi k / m} for k = 0..m-1, interleaved re/im. Computed once per DFT
// size; biquad_response evaluates these on every bin of every filter, so the
// trig must not be redone per node.
const std::vector<double>& unit_phasors(std::size_t m) {
    static std::mutex mutex;
    static std::map<std::size_t, std::vector<double>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto [it, inserted] = cache.try_emplace(m);
    if (inserted) {
        auto& t = it->second;
        t.resize(2 * m);
        for (std::size_t k = 0; k < m; ++k) {
            const double th = -2.0 * M_PI * static_cast<double>(k) / static_cast<double>(m);
            t[2 * k] = std::cos(th);
            t[2 * k + 1] = std::sin(th);
        }
    }
    return it->second;
}
} // namespace

const char* op_name(Op op) {
    switch (op) {
        case Op::Const: return "const";
        case Op::Param: return "param";
        case Op::Add: return "add";
        case Op::Sub: return "sub";
        case Op::Mul: return "mul";
        case Op::Div: return "div";
        case Op::Neg: return "neg";
        case Op::Tanh: return "tanh";
        case Op::Sigmoid: return "sigmoid";
        case Op::LeakyRelu: return "leaky_relu";
        case Op::Log: return "log";
        case Op::Exp: return "exp";
        case Op::Abs: return "abs";
        case Op::Sqrt: return "sqrt";
        case Op::Sin: return "sin";
        case Op::Cos: return "cos";
        case Op::AddC: return "add_c";
        case Op::MulC: return "mul_c";
        case Op::Scale: return "scale";
        case Op::Sum: return "sum";
        case Op::Slice: return "slice";
        case Op::ZeroPad: return "zero_pad";
        case Op::Fft: return "fft";
        case Op::Ifft: return "ifft";
        case Op::CMul: return "cmul";
        case Op::CAbs: return "cabs";
        case Op::BiquadResp: return "biquad_response";
        case Op::Gru1Seq: return "gru1_seq";
        case Op::DenseLayer: return "dense";
        case Op::RangeMap: return "range_map";
        case Op::ConcatGruSeq: return "concat_gru_seq";
    }
    return "?";
}

std::size_t TV::len() const { return tape->node(id).val.size(); }
double TV::value(std::size_t i) const { return tape->node(id).val.at(i); }
const std::vector<double>& TV::values() const { return tape->node(id).val; }

int Tape::push(TapeNode n) {
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

void Tape::check_finite(const TapeNode& n, int id) const {
    for (double v : n.val)
        if (!std::isfinite(v))
            throw std::runtime_error("tape: non-finite value in node #" + std::to_string(id) +
                                     " (" + op_name(n.op) + ")");
}

TV Tape::constant(std::vector<double> v) {
    TapeNode n;
    n.op = Op::Const;
    n.val = std::move(v);
    int id = push(std::move(n));
    return {this, id};
}

TV Tape::param(const ParamStore& store, int entry) {
    auto it = param_nodes_.find(entry);
    if (it != param_nodes_.end())
        return {this, it->second};
    TapeNode n;
    n.op = Op::Param;
    n.requires_grad = true;
    n.param_entry = entry;
    n.val = store.at(entry).value;
    int id = push(std::move(n));
    check_finite(nodes_.back(), id);
    param_nodes_[entry] = id;
    return {this, id};
}

TV Tape::emit(Op op, std::initializer_list<int> ins, std::size_t out_len, double attr0,
              int iattr0, int iattr1) {
    TapeNode n;
    n.op = op;
    n.attr0 = attr0;
    n.iattr0 = iattr0;
    n.iattr1 = iattr1;
    n.nin = static_cast<std::uint8_t>(ins.size());
    std::size_t i = 0;
    for (int in_id : ins) {
        n.in[i++] = in_id;
        if (nodes_[static_cast<std::size_t>(in_id)].requires_grad)
            n.requires_grad = true;
    }
    n.val.resize(out_len);
    compute_forward(n);
    int id = push(std::move(n));
    check_finite(nodes_.back(), id);
    return {this, id};
}

namespace {
void want(bool cond, const char* msg) {
    if (!cond)
        throw std::runtime_error(std::string("tape: ") + msg);
}
} // namespace

TV Tape::add(TV a, TV b) {
    want(a.len() == b.len(), "add: length mismatch");
    return emit(Op::Add, {a.id, b.id}, a.len());
}
TV Tape::sub(TV a, TV b) {
    want(a.len() == b.len(), "sub: length mismatch");
    return emit(Op::Sub, {a.id, b.id}, a.len());
}
TV Tape::mul(TV a, TV b) {
    want(a.len() == b.len(), "mul: length mismatch");
    return emit(Op::Mul, {a.id, b.id}, a.len());
}
TV Tape::div(TV a, TV b) {
    want(a.len() == b.len(), "div: length mismatch");
    return emit(Op::Div, {a.id, b.id}, a.len());
}
TV Tape::neg(TV a) { return emit(Op::Neg, {a.id}, a.len()); }
TV Tape::tanh(TV a) { return emit(Op::Tanh, {a.id}, a.len()); }
TV Tape::sigmoid(TV a) { return emit(Op::Sigmoid, {a.id}, a.len()); }
TV Tape::leaky_relu(TV a, double slope) { return emit(Op::LeakyRelu, {a.id}, a.len(), slope); }
TV Tape::log(TV a) { return emit(Op::Log, {a.id}, a.len()); }
TV Tape::exp(TV a) { return emit(Op::Exp, {a.id}, a.len()); }
TV Tape::abs(TV a) { return emit(Op::Abs, {a.id}, a.len()); }
TV Tape::sqrt(TV a) { return emit(Op::Sqrt, {a.id}, a.len()); }
TV Tape::sin(TV a) { return emit(Op::Sin, {a.id}, a.len()); }
TV Tape::cos(TV a) { return emit(Op::Cos, {a.id}, a.len()); }
TV Tape::add_c(TV a, double c) { return emit(Op::AddC, {a.id}, a.len(), c); }
TV Tape::mul_c(TV a, double c) { return emit(Op::MulC, {a.id}, a.len(), c); }
TV Tape::scale(TV s, TV x) {
    want(s.len() == 1, "scale: gain must be a scalar node");
    return emit(Op::Scale, {s.id, x.id}, x.len());
}
TV Tape::sum(TV a) { return emit(Op::Sum, {a.id}, 1); }
TV Tape::slice(TV a, int offset, int length) {
    want(offset >= 0 && length >= 0 &&
             static_cast<std::size_t>(offset) + static_cast<std::size_t>(length) <= a.len(),
         "slice: out of range");
    return emit(Op::Slice, {a.id}, static_cast<std::size_t>(length), 0.0, offset, length);
}
TV Tape::zero_pad(TV a, int total) {
    want(static_cast<std::size_t>(total) >= a.len(), "zero_pad: shorter than input");
    return emit(Op::ZeroPad, {a.id}, static_cast<std::size_t>(total), 0.0, total);
}
TV Tape::fft(TV a) {
    want(Fft::is_pow2(a.len()), "fft: length must be a power of two");
    return emit(Op::Fft, {a.id}, 2 * a.len());
}
TV Tape::ifft(TV a) {
    want(a.len() % 2 == 0 && Fft::is_pow2(a.len() / 2), "ifft: bad spectrum length");
    return emit(Op::Ifft, {a.id}, a.len() / 2);
}
TV Tape::cmul(TV a, TV b) {
    want(a.len() == b.len() && a.len() % 2 == 0, "cmul: length mismatch");
    return emit(Op::CMul, {a.id, b.id}, a.len());
}
TV Tape::cabs(TV a) {
    want(a.len() % 2 == 0, "cabs: odd buffer");
    return emit(Op::CAbs, {a.id}, a.len() / 2);
}
TV Tape::biquad_response(TV b0, TV b1, TV b2, TV a1, TV a2, int m) {
    want(Fft::is_pow2(static_cast<std::size_t>(m)), "biquad_response: m must be a power of two");
    for (TV c : {b0, b1, b2, a1, a2})
        want(c.len() == 1, "biquad_response: coefficients must be scalars");
    return emit(Op::BiquadResp, {b0.id, b1.id, b2.id, a1.id, a2.id},
                2 * static_cast<std::size_t>(m), 0.0, m);
}
TV Tape::gru1_seq(TV params9, TV x, TV h0) {
    want(params9.len() == 9, "gru1_seq: expected 9 parameters");
    want(h0.len() == 1, "gru1_seq: h0 must be a scalar");
    return emit(Op::Gru1Seq, {params9.id, x.id, h0.id}, x.len());
}
TV Tape::dense(TV w, TV b, TV x, int rows, int cols) {
    want(w.len() == static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols),
         "dense: weight size mismatch");
    want(b.len() == static_cast<std::size_t>(rows), "dense: bias size mismatch");
    want(x.len() == static_cast<std::size_t>(cols), "dense: input size mismatch");
    return emit(Op::DenseLayer, {w.id, b.id, x.id}, static_cast<std::size_t>(rows), 0.0, rows,
                cols);
}
TV Tape::range_map(TV u, const std::vector<Range>& ranges) {
    want(u.len() == ranges.size(), "range_map: range count mismatch");
    TapeNode n;
    n.op = Op::RangeMap;
    n.nin = 1;
    n.in[0] = u.id;
    n.requires_grad = nodes_[static_cast<std::size_t>(u.id)].requires_grad;
    n.aux.reserve(3 * ranges.size());
    for (const Range& r : ranges) {
        want(r.lo < r.hi, "range_map: lo must be below hi");
        want(!r.log_scale || r.lo > 0.0, "range_map: log range requires lo > 0");
        n.aux.push_back(r.lo);
        n.aux.push_back(r.hi);
        n.aux.push_back(r.log_scale ? 1.0 : 0.0);
    }
    n.val.resize(ranges.size());
    compute_forward(n);
    int id = push(std::move(n));
    check_finite(nodes_.back(), id);
    return {this, id};
}
TV Tape::concat_gru_seq(TV w_ih, TV w_hh, TV bias, TV head_w, TV head_b, TV x, TV knobs,
                        TV h0, int hidden) {
    const std::size_t h = static_cast<std::size_t>(hidden);
    const std::size_t k = knobs.len();
    want(w_ih.len() == 3 * h * (1 + k), "concat_gru: w_ih size mismatch");
    want(w_hh.len() == 3 * h * h, "concat_gru: w_hh size mismatch");
    want(bias.len() == 3 * h, "concat_gru: bias size mismatch");
    want(head_w.len() == h && head_b.len() == 1, "concat_gru: head size mismatch");
    want(h0.len() == h, "concat_gru: h0 size mismatch");
    return emit(Op::ConcatGruSeq,
                {w_ih.id, w_hh.id, bias.id, head_w.id, head_b.id, x.id, knobs.id, h0.id},
                x.len(), 0.0, hidden, static_cast<int>(k));
}

void Tape::compute_forward(TapeNode& n) {
    auto in_val = [&](int slot) -> const std::vector<double>& {
        return nodes_[static_cast<std::size_t>(n.in[slot])].val;
    };
    switch (n.op) {
        case Op::Const:
        case Op::Param:
            break;
        case Op::Add: {
            const auto &a = in_val(0), &b = in_val(1);
            for (std::size_t i = 0; i < n.val.size(); ++i)
                n.val[i] = a[i] + b[i];
            break;
        }
        case Op::Sub: {
            const auto &a = in_val(0), &b = in_val(1);
            for (std::size_t i = 0; i < n.val.size(); ++i)
                n.val[i] = a[i] - b[i];
            break;
        }
        case Op::Mul: {
            const auto &a = in_val(0), &b = in_val(1);
            for (std::size_t i = 0; i < n.val.size(); ++i)
                n.val[i] = a[i] * b[i];
            break;
        }
        case Op::Div: {
            const auto &a = in_val(0), &b = in_val(1);
            for (std::size_t i = 0; i < n.val.size(); ++i)
                n.val[i] = a[i] / b[i];
            break;
        }
        case Op::Neg: {
            const auto& a = in_val(0);
            for (std::size_t i = 0; i < n.val.size(); ++i)
                n.val[i] = -a[i];
            break;
        }
        case Op::Tanh: {
            const auto& a = in_val(0);
            for (std::size_t i = 0; i < n.val.size(); ++i)
                n.val[i] = std::tanh(a[i]);
            break;
        }
        case Op::Sigmoid: {
            const auto& a = in_val(0);
            for (std::size_t i = 0; i < n.val.size(); ++i)
                n.val[i] = sig(a[i]);
            break;
        }
        case Op::LeakyRelu: {
            const auto& a = in_val(0);
            for (std::size_t i = 0; i < n.val.size(); ++i)
                n.val[i] = a[i] > 0.0 ? a[i] : n.attr0 * a[i];
            break;
        }
        case Op::Log: {
            const auto& a = in_val(0);
            for (std::size_t i = 0; i < n.val.size(); ++i)
                n.val[i] = std::log(a[i]);
            break;
        }
        case Op::Exp: {
            const auto& a = in_val(0);
            for (std::size_t i = 0; i < n.val.size(); ++i)
                n.val[i] = std::exp(a[i]);
            break;
        }
        case Op::Abs: {
            const auto& a = in_val(0);
            for (std::size_t i = 0; i < n.val.size(); ++i)
                n.val[i] = std::abs(a[i]);
            break;
        }
        case Op::Sqrt: {
            const auto& a = in_val(0);
            for (std::size_t i = 0; i < n.val.size(); ++i)
                n.val[i] = std::sqrt(a[i]);
            break;
        }
        case Op::Sin: {
            const auto& a = in_val(0);
            for (std::size_t i = 0; i < n.val.size(); ++i)
                n.val[i] = std::sin(a[i]);
            break;
        }
        case Op::Cos: {
            const auto& a = in_val(0);
            for (std::size_t i = 0; i < n.val.size(); ++i)
                n.val[i] = std::cos(a[i]);
            break;
        }
        case Op::AddC: {
            const auto& a = in_val(0);
            for (std::size_t i = 0; i < n.val.size(); ++i)
                n.val[i] = a[i] + n.attr0;
            break;
        }
        case Op::MulC: {
            const auto& a = in_val(0);
            for (std::size_t i = 0; i < n.val.size(); ++i)
                n.val[i] = a[i] * n.attr0;
            break;
        }
        case Op::Scale: {
            const double s = in_val(0)[0];
            const auto& x = in_val(1);
            for (std::size_t i = 0; i < n.val.size(); ++i)
                n.val[i] = s * x[i];
            break;
        }
        case Op::Sum: {
            const auto& a = in_val(0);
            double acc = 0.0;
            for (double v : a)
                acc += v;
            n.val[0] = acc;
            break;
        }
        case Op::Slice: {
            const auto& a = in_val(0);
            for (std::size_t i = 0; i < n.val.size(); ++i)
                n.val[i] = a[static_cast<std::size_t>(n.iattr0) + i];
            break;
        }
        case Op::ZeroPad: {
            const auto& a = in_val(0);
            std::fill(n.val.begin(), n.val.end(), 0.0);
            for (std::size_t i = 0; i < a.size(); ++i)
                n.val[i] = a[i];
            break;
        }
        case Op::Fft: {
            n.val = Fft::forward_real(in_val(0));
            break;
        }
        case Op::Ifft: {
            n.val = Fft::backward_real(in_val(0));
            break;
        }
        case Op::CMul: {
            const auto &a = in_val(0), &b = in_val(1);
            const std::size_t m = n.val.size() / 2;
            for (std::size_t i = 0; i < m; ++i) {
                const double ar = a[2 * i], ai = a[2 * i + 1];
                const double br = b[2 * i], bi = b[2 * i + 1];
                n.val[2 * i] = ar * br - ai * bi;
                n.val[2 * i + 1] = ar * bi + ai * br;
            }
            break;
        }
        case Op::CAbs: {
            const auto& a = in_val(0);
            for (std::size_t i = 0; i < n.val.size(); ++i)
                n.val[i] = std::hypot(a[2 * i], a[2 * i + 1]);
            break;
        }
        case Op::BiquadResp: {
            const double b0 = in_val(0)[0], b1 = in_val(1)[0], b2 = in_val(2)[0];
            const double a1 = in_val(3)[0], a2 = in_val(4)[0];
            const std::size_t m = static_cast<std::size_t>(n.iattr0);
            n.aux.resize(2 * m); // cache 1/A(k) for the backward pass
            const auto& tw = unit_phasors(m);
            for (std::size_t k = 0; k < m; ++k) {
                const std::complex<double> e1(tw[2 * k], tw[2 * k + 1]);
                const std::complex<double> e2 = e1 * e1;
                const std::complex<double> den = 1.0 + a1 * e1 + a2 * e2;
                const std::complex<double> inv_a = 1.0 / den;
                const std::complex<double> h = (b0 + b1 * e1 + b2 * e2) * inv_a;
                n.val[2 * k] = h.real();
                n.val[2 * k + 1] = h.imag();
                n.aux[2 * k] = inv_a.real();
                n.aux[2 * k + 1] = inv_a.imag();
            }
            break;
        }
        case Op::Gru1Seq: {
            const auto& p = in_val(0);
            const auto& x = in_val(1);
            const double w_r = p[0], w_z = p[1], w_c = p[2];
            const double u_r = p[3], u_z = p[4], u_c = p[5];
            const double b_r = p[6], b_z = p[7], b_c = p[8];
            double h = in_val(2)[0];
            const std::size_t len = x.size();
            n.aux.resize(3 * len);
            for (std::size_t t = 0; t < len; ++t) {
                const double r = sig(w_r * x[t] + u_r * h + b_r);
                const double z = sig(w_z * x[t] + u_z * h + b_z);
                const double c = std::tanh(w_c * x[t] + r * u_c * h + b_c);
                h = (1.0 - z) * c + z * h;
                n.aux[3 * t] = r;
                n.aux[3 * t + 1] = z;
                n.aux[3 * t + 2] = c;
                n.val[t] = h;
            }
            break;
        }
        case Op::DenseLayer: {
            const auto& w = in_val(0);
            const auto& b = in_val(1);
            const auto& x = in_val(2);
            const std::size_t rows = static_cast<std::size_t>(n.iattr0);
            const std::size_t cols = static_cast<std::size_t>(n.iattr1);
            for (std::size_t r = 0; r < rows; ++r) {
                double acc = b[r];
                const double* wr = &w[r * cols];
                for (std::size_t c = 0; c < cols; ++c)
                    acc += wr[c] * x[c];
                n.val[r] = acc;
            }
            break;
        }
        case Op::RangeMap: {
            const auto& u = in_val(0);
            for (std::size_t i = 0; i < n.val.size(); ++i) {
                const double lo = n.aux[3 * i], hi = n.aux[3 * i + 1];
                if (n.aux[3 * i + 2] != 0.0)
                    n.val[i] = lo * std::exp(u[i] * std::log(hi / lo));
                else
                    n.val[i] = lo + u[i] * (hi - lo);
            }
            break;
        }
        case Op::ConcatGruSeq: {
            const auto& w_ih = in_val(0);
            const auto& w_hh = in_val(1);
            const auto& bias = in_val(2);
            const auto& head_w = in_val(3);
            const double head_b = in_val(4)[0];
            const auto& x = in_val(5);
            const auto& knobs = in_val(6);
            const std::size_t h = static_cast<std::size_t>(n.iattr0);
            const std::size_t k = static_cast<std::size_t>(n.iattr1);
            const std::size_t in_dim = 1 + k;
            const std::size_t len = x.size();
            n.aux.assign(4 * h * len + (len + 1) * h, 0.0);
            double* traj = n.aux.data() + 4 * h * len;
            const auto& h0 = in_val(7);
            for (std::size_t i = 0; i < h; ++i)
                traj[i] = h0[i];
            std::vector<double> hv(h0.begin(), h0.end());
            for (std::size_t t = 0; t < len; ++t) {
                double* rr = &n.aux[t * 4 * h];
                double* zz = rr + h;
                double* cc = zz + h;
                double* uch = cc + h;
                for (std::size_t i = 0; i < h; ++i) {
                    auto gate_pre = [&](std::size_t row) {
                        double acc = bias[row] + w_ih[row * in_dim] * x[t];
                        for (std::size_t j = 0; j < k; ++j)
                            acc += w_ih[row * in_dim + 1 + j] * knobs[j];
                        const double* hw = &w_hh[row * h];
                        double rec = 0.0;
                        for (std::size_t j = 0; j < h; ++j)
                            rec += hw[j] * hv[j];
                        return std::pair<double, double>(acc, rec);
                    };
                    auto [ar_in, ar_rec] = gate_pre(i);
                    rr[i] = sig(ar_in + ar_rec);
                    auto [az_in, az_rec] = gate_pre(h + i);
                    zz[i] = sig(az_in + az_rec);
                    auto [ac_in, ac_rec] = gate_pre(2 * h + i);
                    uch[i] = ac_rec;
                    cc[i] = std::tanh(ac_in + rr[i] * ac_rec);
                }
                double y = head_b;
                for (std::size_t i = 0; i < h; ++i) {
                    hv[i] = (1.0 - zz[i]) * cc[i] + zz[i] * hv[i];
                    traj[(t + 1) * h + i] = hv[i];
                    y += head_w[i] * hv[i];
                }
                n.val[t] = y;
            }
            break;
        }
    }
}

std::vector<double>& Tape::grad_of(int id) {
    TapeNode& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.empty())
        n.grad.assign(n.val.size(), 0.0);
    return n.grad;
}

void Tape::accumulate_backward(int id) {
    TapeNode& n = nodes_[static_cast<std::size_t>(id)];
    const std::vector<double>& g = n.grad;
    auto wants = [&](int slot) {
        return nodes_[static_cast<std::size_t>(n.in[slot])].requires_grad;
    };
    auto in_val = [&](int slot) -> const std::vector<double>& {
        return nodes_[static_cast<std::size_t>(n.in[slot])].val;
    };
    auto gin = [&](int slot) -> std::vector<double>& { return grad_of(n.in[slot]); };

    switch (n.op) {
        case Op::Const:
        case Op::Param:
            break;
        case Op::Add: {
            if (wants(0)) {
                auto& ga = gin(0);
                for (std::size_t i = 0; i < g.size(); ++i)
                    ga[i] += g[i];
            }
            if (wants(1)) {
                auto& gb = gin(1);
                for (std::size_t i = 0; i < g.size(); ++i)
                    gb[i] += g[i];
            }
            break;
        }
        case Op::Sub: {
            if (wants(0)) {
                auto& ga = gin(0);
                for (std::size_t i = 0; i < g.size(); ++i)
                    ga[i] += g[i];
            }
            if (wants(1)) {
                auto& gb = gin(1);
                for (std::size_t i = 0; i < g.size(); ++i)
                    gb[i] -= g[i];
            }
            break;
        }
        case Op::Mul: {
            const auto &a = in_val(0), &b = in_val(1);
            if (wants(0)) {
                auto& ga = gin(0);
                for (std::size_t i = 0; i < g.size(); ++i)
                    ga[i] += g[i] * b[i];
            }
            if (wants(1)) {
                auto& gb = gin(1);
                for (std::size_t i = 0; i < g.size(); ++i)
                    gb[i] += g[i] * a[i];
            }
            break;
        }
        case Op::Div: {
            const auto& b = in_val(1);
            if (wants(0)) {
                auto& ga = gin(0);
                for (std::size_t i = 0; i < g.size(); ++i)
                    ga[i] += g[i] / b[i];
            }
            if (wants(1)) {
                auto& gb = gin(1);
                for (std::size_t i = 0; i < g.size(); ++i)
                    gb[i] -= g[i] * n.val[i] / b[i];
            }
            break;
        }
        case Op::Neg: {
            if (wants(0)) {
                auto& ga = gin(0);
                for (std::size_t i = 0; i < g.size(); ++i)
                    ga[i] -= g[i];
            }
            break;
        }
        case Op::Tanh: {
            if (wants(0)) {
                auto& ga = gin(0);
                for (std::size_t i = 0; i < g.size(); ++i)
                    ga[i] += g[i] * (1.0 - n.val[i] * n.val[i]);
            }
            break;
        }
        case Op::Sigmoid: {
            if (wants(0)) {
                auto& ga = gin(0);
                for (std::size_t i = 0; i < g.size(); ++i)
                    ga[i] += g[i] * n.val[i] * (1.0 - n.val[i]);
            }
            break;
        }
        case Op::LeakyRelu: {
            if (wants(0)) {
                const auto& x = in_val(0);
                auto& ga = gin(0);
                for (std::size_t i = 0; i < g.size(); ++i)
                    ga[i] += g[i] * (x[i] > 0.0 ? 1.0 : n.attr0);
            }
            break;
        }
        case Op::Log: {
            if (wants(0)) {
                const auto& x = in_val(0);
                auto& ga = gin(0);
                for (std::size_t i = 0; i < g.size(); ++i)
                    ga[i] += g[i] / x[i];
            }
            break;
        }
        case Op::Exp: {
            if (wants(0)) {
                auto& ga = gin(0);
                for (std::size_t i = 0; i < g.size(); ++i)
                    ga[i] += g[i] * n.val[i];
            }
            break;
        }
        case Op::Abs: {
            if (wants(0)) {
                const auto& x = in_val(0);
                auto& ga = gin(0);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    if (x[i] > 0.0)
                        ga[i] += g[i];
                    else if (x[i] < 0.0)
                        ga[i] -= g[i];
                    // subgradient 0 at exactly 0
                }
            }
            break;
        }
        case Op::Sqrt: {
            if (wants(0)) {
                auto& ga = gin(0);
                for (std::size_t i = 0; i < g.size(); ++i)
                    ga[i] += g[i] * 0.5 / n.val[i];
            }
            break;
        }
        case Op::Sin: {
            if (wants(0)) {
                const auto& x = in_val(0);
                auto& ga = gin(0);
                for (std::size_t i = 0; i < g.size(); ++i)
                    ga[i] += g[i] * std::cos(x[i]);
            }
            break;
        }
        case Op::Cos: {
            if (wants(0)) {
                const auto& x = in_val(0);
                auto& ga = gin(0);
                for (std::size_t i = 0; i < g.size(); ++i)
                    ga[i] -= g[i] * std::sin(x[i]);
            }
            break;
        }
        case Op::AddC: {
            if (wants(0)) {
                auto& ga = gin(0);
                for (std::size_t i = 0; i < g.size(); ++i)
                    ga[i] += g[i];
            }
            break;
        }
        case Op::MulC: {
            if (wants(0)) {
                auto& ga = gin(0);
                for (std::size_t i = 0; i < g.size(); ++i)
                    ga[i] += g[i] * n.attr0;
            }
            break;
        }
        case Op::Scale: {
            const double s = in_val(0)[0];
            const auto& x = in_val(1);
            if (wants(0)) {
                double acc = 0.0;
                for (std::size_t i = 0; i < g.size(); ++i)
                    acc += g[i] * x[i];
                gin(0)[0] += acc;
            }
            if (wants(1)) {
                auto& gx = gin(1);
                for (std::size_t i = 0; i < g.size(); ++i)
                    gx[i] += g[i] * s;
            }
            break;
        }
        case Op::Sum: {
            if (wants(0)) {
                auto& ga = gin(0);
                for (std::size_t i = 0; i < ga.size(); ++i)
                    ga[i] += g[0];
            }
            break;
        }
        case Op::Slice: {
            if (wants(0)) {
                auto& ga = gin(0);
                for (std::size_t i = 0; i < g.size(); ++i)
                    ga[static_cast<std::size_t>(n.iattr0) + i] += g[i];
            }
            break;
        }
        case Op::ZeroPad: {
            if (wants(0)) {
                auto& ga = gin(0);
                for (std::size_t i = 0; i < ga.size(); ++i)
                    ga[i] += g[i];
            }
            break;
        }
        case Op::Fft: {
            // adjoint of the forward DFT on a real input: real part of the
            // unnormalized backward DFT of the cotangent
            if (wants(0)) {
                std::vector<double> buf = g;
                Fft::backward(buf);
                auto& ga = gin(0);
                for (std::size_t i = 0; i < ga.size(); ++i)
                    ga[i] += buf[2 * i];
            }
            break;
        }
        case Op::Ifft: {
            // adjoint of (1/M) * real(IDFT): forward DFT of the real cotangent
            // scaled by 1/M
            if (wants(0)) {
                const std::size_t m = n.val.size();
                std::vector<double> buf(2 * m, 0.0);
                for (std::size_t i = 0; i < m; ++i)
                    buf[2 * i] = g[i];
                Fft::forward(buf);
                const double scale = 1.0 / static_cast<double>(m);
                auto& ga = gin(0);
                for (std::size_t i = 0; i < ga.size(); ++i)
                    ga[i] += buf[i] * scale;
            }
            break;
        }
        case Op::CMul: {
            const auto &a = in_val(0), &b = in_val(1);
            const std::size_t m = g.size() / 2;
            if (wants(0)) {
                auto& ga = gin(0);
                for (std::size_t i = 0; i < m; ++i) {
                    const double br = b[2 * i], bi = b[2 * i + 1];
                    const double gr = g[2 * i], gim = g[2 * i + 1];
                    ga[2 * i] += br * gr + bi * gim;
                    ga[2 * i + 1] += br * gim - bi * gr;
                }
            }
            if (wants(1)) {
                auto& gb = gin(1);
                for (std::size_t i = 0; i < m; ++i) {
                    const double ar = a[2 * i], ai = a[2 * i + 1];
                    const double gr = g[2 * i], gim = g[2 * i + 1];
                    gb[2 * i] += ar * gr + ai * gim;
                    gb[2 * i + 1] += ar * gim - ai * gr;
                }
            }
            break;
        }
        case Op::CAbs: {
            if (wants(0)) {
                const auto& a = in_val(0);
                auto& ga = gin(0);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    const double m = n.val[i];
                    if (m > 0.0) {
                        ga[2 * i] += g[i] * a[2 * i] / m;
                        ga[2 * i + 1] += g[i] * a[2 * i + 1] / m;
                    }
                }
            }
            break;
        }
        case Op::BiquadResp: {
            const std::size_t m = static_cast<std::size_t>(n.iattr0);
            double acc[5] = {0, 0, 0, 0, 0};
            const auto& tw = unit_phasors(m);
            for (std::size_t k = 0; k < m; ++k) {
                const std::complex<double> e1(tw[2 * k], tw[2 * k + 1]);
                const std::complex<double> e2 = e1 * e1;
                const std::complex<double> inv_a(n.aux[2 * k], n.aux[2 * k + 1]);
                const std::complex<double> hk(n.val[2 * k], n.val[2 * k + 1]);
                const std::complex<double> gk(g[2 * k], g[2 * k + 1]);
                const std::complex<double> d[5] = {inv_a, e1 * inv_a, e2 * inv_a,
                                                   -hk * e1 * inv_a, -hk * e2 * inv_a};
                for (int c = 0; c < 5; ++c)
                    acc[c] += gk.real() * d[c].real() + gk.imag() * d[c].imag();
            }
            for (int c = 0; c < 5; ++c)
                if (wants(c))
                    gin(c)[0] += acc[c];
            break;
        }
        case Op::Gru1Seq: {
            const auto& p = in_val(0);
            const auto& x = in_val(1);
            const double w_r = p[0], w_z = p[1], w_c = p[2];
            const double u_r = p[3], u_z = p[4], u_c = p[5];
            const double h0 = in_val(2)[0];
            const std::size_t len = x.size();
            double gp[9] = {0, 0, 0, 0, 0, 0, 0, 0, 0};
            const bool want_x = wants(1);
            std::vector<double>* gx = want_x ? &gin(1) : nullptr;
            double carry = 0.0;
            for (std::size_t t = len; t-- > 0;) {
                const double h_prev = t > 0 ? n.val[t - 1] : h0;
                const double r = n.aux[3 * t];
                const double z = n.aux[3 * t + 1];
                const double c = n.aux[3 * t + 2];
                const double gh_out = g[t] + carry;
                const double gaz = gh_out * (h_prev - c) * z * (1.0 - z);
                const double gac = gh_out * (1.0 - z) * (1.0 - c * c);
                const double gar = gac * u_c * h_prev * r * (1.0 - r);
                gp[0] += gar * x[t];
                gp[3] += gar * h_prev;
                gp[6] += gar;
                gp[1] += gaz * x[t];
                gp[4] += gaz * h_prev;
                gp[7] += gaz;
                gp[2] += gac * x[t];
                gp[5] += gac * r * h_prev;
                gp[8] += gac;
                if (want_x)
                    (*gx)[t] += gar * w_r + gaz * w_z + gac * w_c;
                carry = gh_out * z + gac * r * u_c + gar * u_r + gaz * u_z;
            }
            if (wants(0)) {
                auto& gpv = gin(0);
                for (int i = 0; i < 9; ++i)
                    gpv[static_cast<std::size_t>(i)] += gp[i];
            }
            if (wants(2))
                gin(2)[0] += carry;
            break;
        }
        case Op::DenseLayer: {
            const auto& w = in_val(0);
            const auto& x = in_val(2);
            const std::size_t rows = static_cast<std::size_t>(n.iattr0);
            const std::size_t cols = static_cast<std::size_t>(n.iattr1);
            if (wants(0)) {
                auto& gw = gin(0);
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t c = 0; c < cols; ++c)
                        gw[r * cols + c] += g[r] * x[c];
            }
            if (wants(1)) {
                auto& gb = gin(1);
                for (std::size_t r = 0; r < rows; ++r)
                    gb[r] += g[r];
            }
            if (wants(2)) {
                auto& gx = gin(2);
                for (std::size_t r = 0; r < rows; ++r) {
                    const double* wr = &w[r * cols];
                    for (std::size_t c = 0; c < cols; ++c)
                        gx[c] += g[r] * wr[c];
                }
            }
            break;
        }
        case Op::RangeMap: {
            if (wants(0)) {
                auto& gu = gin(0);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    const double lo = n.aux[3 * i], hi = n.aux[3 * i + 1];
                    if (n.aux[3 * i + 2] != 0.0)
                        gu[i] += g[i] * n.val[i] * std::log(hi / lo);
                    else
                        gu[i] += g[i] * (hi - lo);
                }
            }
            break;
        }
        case Op::ConcatGruSeq: {
            const auto& w_ih = in_val(0);
            const auto& w_hh = in_val(1);
            const auto& head_w = in_val(3);
            const auto& x = in_val(5);
            const auto& knobs = in_val(6);
            const std::size_t h = static_cast<std::size_t>(n.iattr0);
            const std::size_t k = static_cast<std::size_t>(n.iattr1);
            const std::size_t in_dim = 1 + k;
            const std::size_t len = x.size();
            const double* traj = n.aux.data() + 4 * h * len;

            std::vector<double> g_wih(wants(0) ? w_ih.size() : 0, 0.0);
            std::vector<double> g_whh(wants(1) ? w_hh.size() : 0, 0.0);
            std::vector<double> g_bias(wants(2) ? 3 * h : 0, 0.0);
            std::vector<double> g_headw(wants(3) ? h : 0, 0.0);
            double g_headb = 0.0;
            const bool want_x = wants(5);
            const bool want_knobs = wants(6);
            std::vector<double> g_knobs(want_knobs ? k : 0, 0.0);

            std::vector<double> gh(h, 0.0), gh_next(h, 0.0);
            std::vector<double> gar(h), gaz(h), gac(h), g_uch(h);
            for (std::size_t t = len; t-- > 0;) {
                const double* rr = &n.aux[t * 4 * h];
                const double* zz = rr + h;
                const double* cc = zz + h;
                const double* uch = cc + h;
                const double* h_prev = traj + t * h;
                const double* h_now = traj + (t + 1) * h;
                const double gy = g[t];
                if (wants(3))
                    for (std::size_t i = 0; i < h; ++i)
                        g_headw[i] += gy * h_now[i];
                if (wants(4))
                    g_headb += gy;
                for (std::size_t i = 0; i < h; ++i) {
                    const double ghi = gh[i] + gy * head_w[i];
                    gaz[i] = ghi * (h_prev[i] - cc[i]) * zz[i] * (1.0 - zz[i]);
                    gac[i] = ghi * (1.0 - zz[i]) * (1.0 - cc[i] * cc[i]);
                    const double gr = gac[i] * uch[i];
                    gar[i] = gr * rr[i] * (1.0 - rr[i]);
                    g_uch[i] = gac[i] * rr[i];
                    gh_next[i] = ghi * zz[i];
                }
                auto accum_gate = [&](const std::vector<double>& ga, std::size_t row0) {
                    for (std::size_t i = 0; i < h; ++i) {
                        const std::size_t row = row0 + i;
                        const double gv = ga[i];
                        if (gv == 0.0)
                            continue;
                        if (!g_wih.empty()) {
                            g_wih[row * in_dim] += gv * x[t];
                            for (std::size_t j = 0; j < k; ++j)
                                g_wih[row * in_dim + 1 + j] += gv * knobs[j];
                        }
                        if (!g_bias.empty())
                            g_bias[row] += gv;
                        if (want_x)
                            gin(5)[t] += gv * w_ih[row * in_dim];
                        if (want_knobs)
                            for (std::size_t j = 0; j < k; ++j)
                                g_knobs[j] += gv * w_ih[row * in_dim + 1 + j];
                        if (!g_whh.empty())
                            for (std::size_t j = 0; j < h; ++j)
                                g_whh[row * h + j] += gv * h_prev[j];
                        const double* hw = &w_hh[row * h];
                        for (std::size_t j = 0; j < h; ++j)
                            gh_next[j] += gv * hw[j];
                    }
                };
                accum_gate(gar, 0);
                accum_gate(gaz, h);
                // candidate gate: the recurrent path flows through uch = U_c h,
                // with cotangent g_uch, while the input/bias path uses gac
                for (std::size_t i = 0; i < h; ++i) {
                    const std::size_t row = 2 * h + i;
                    const double gv = gac[i];
                    if (!g_wih.empty()) {
                        g_wih[row * in_dim] += gv * x[t];
                        for (std::size_t j = 0; j < k; ++j)
                            g_wih[row * in_dim + 1 + j] += gv * knobs[j];
                    }
                    if (!g_bias.empty())
                        g_bias[row] += gv;
                    if (want_x)
                        gin(5)[t] += gv * w_ih[row * in_dim];
                    if (want_knobs)
                        for (std::size_t j = 0; j < k; ++j)
                            g_knobs[j] += gv * w_ih[row * in_dim + 1 + j];
                    const double gu = g_uch[i];
                    if (!g_whh.empty())
                        for (std::size_t j = 0; j < h; ++j)
                            g_whh[row * h + j] += gu * h_prev[j];
                    const double* hw = &w_hh[row * h];
                    for (std::size_t j = 0; j < h; ++j)
                        gh_next[j] += gu * hw[j];
                }
                std::swap(gh, gh_next);
                std::fill(gh_next.begin(), gh_next.end(), 0.0);
            }
            if (wants(0)) {
                auto& dst = gin(0);
                for (std::size_t i = 0; i < g_wih.size(); ++i)
                    dst[i] += g_wih[i];
            }
            if (wants(1)) {
                auto& dst = gin(1);
                for (std::size_t i = 0; i < g_whh.size(); ++i)
                    dst[i] += g_whh[i];
            }
            if (wants(2)) {
                auto& dst = gin(2);
                for (std::size_t i = 0; i < g_bias.size(); ++i)
                    dst[i] += g_bias[i];
            }
            if (wants(3)) {
                auto& dst = gin(3);
                for (std::size_t i = 0; i < h; ++i)
                    dst[i] += g_headw[i];
            }
            if (wants(4))
                gin(4)[0] += g_headb;
            if (want_knobs) {
                auto& dst = gin(6);
                for (std::size_t j = 0; j < k; ++j)
                    dst[j] += g_knobs[j];
            }
            if (wants(7)) {
                auto& dst = gin(7);
                for (std::size_t i = 0; i < h; ++i)
                    dst[i] += gh[i];
            }
            break;
        }
    }
}

Gradient Tape::backward(TV loss, const ParamStore& store) {
    if (loss.tape != this)
        throw std::runtime_error("tape: loss node belongs to another tape");
    if (loss.len() != 1)
        throw std::runtime_error("tape: loss must be a scalar node");

    for (auto& n : nodes_)
        n.grad.clear();
    grad_of(loss.id)[0] = 1.0;

    for (int id = loss.id; id >= 0; --id) {
        TapeNode& n = nodes_[static_cast<std::size_t>(id)];
        if (!n.requires_grad || n.grad.empty())
            continue;
        accumulate_backward(id);
    }

    Gradient out;
    out.by_entry.resize(store.size());
    for (std::size_t e = 0; e < store.size(); ++e) {
        auto it = param_nodes_.find(static_cast<int>(e));
        if (it != param_nodes_.end() && !nodes_[static_cast<std::size_t>(it->second)].grad.empty())
            out.by_entry[e] = nodes_[static_cast<std::size_t>(it->second)].grad;
        else
            out.by_entry[e].assign(store.at(static_cast<int>(e)).value.size(), 0.0);
    }
    for (std::size_t e = 0; e < out.by_entry.size(); ++e)
        for (double v : out.by_entry[e])
            if (!std::isfinite(v))
                throw std::runtime_error("tape: non-finite gradient for parameter '" +
                                         store.at(static_cast<int>(e)).name + "'");
    return out;
}

double Tape::replay_check() {
    double max_diff = 0.0;
    for (std::size_t id = 0; id < nodes_.size(); ++id) {
        TapeNode& n = nodes_[id];
        if (n.op == Op::Const || n.op == Op::Param)
            continue;
        TapeNode clone = n;
        compute_forward(clone);
        for (std::size_t i = 0; i < n.val.size(); ++i) {
            const double d = std::abs(clone.val[i] - n.val[i]);
            if (d > max_diff)
                max_diff = d;
        }
    }
    return max_diff;
}

void Tape::reset() {
    nodes_.clear();
    param_nodes_.clear();
}

// ---- operator sugar ----

TV operator+(TV a, TV b) { return a.tape->add(a, b); }
TV operator-(TV a, TV b) { return a.tape->sub(a, b); }
TV operator*(TV a, TV b) { return a.tape->mul(a, b); }
TV operator/(TV a, TV b) { return a.tape->div(a, b); }
TV operator+(TV a, double c) { return a.tape->add_c(a, c); }
TV operator+(double c, TV a) { return a.tape->add_c(a, c); }
TV operator-(TV a, double c) { return a.tape->add_c(a, -c); }
TV operator-(double c, TV a) { return a.tape->add_c(a.tape->neg(a), c); }
TV operator*(TV a, double c) { return a.tape->mul_c(a, c); }
TV operator*(double c, TV a) { return a.tape->mul_c(a, c); }
TV operator/(TV a, double c) { return a.tape->mul_c(a, 1.0 / c); }
TV operator/(double c, TV a) { return a.tape->div(a.tape->constant(std::vector<double>(a.len(), c)), a); }
TV operator-(TV a) { return a.tape->neg(a); }
TV sin(TV a) { return a.tape->sin(a); }
TV cos(TV a) { return a.tape->cos(a); }
TV sqrt(TV a) { return a.tape->sqrt(a); }
TV exp(TV a) { return a.tape->exp(a); }
TV log(TV a) { return a.tape->log(a); }
TV tanh(TV a) { return a.tape->tanh(a); }
TV sigmoid(TV a) { return a.tape->sigmoid(a); }

} // namespace ddspamp
