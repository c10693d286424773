#pragma once
#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ddspamp/params.hpp"

namespace ddspamp {

// Define-by-run reverse-mode tape. Values are flat real buffers; scalars are
// length-1 buffers and complex spectra are interleaved [re, im, ...]. The
// recording order is a topological order, so the backward pass is a single
// reverse sweep that visits each node exactly once.
class Tape;

// Lightweight handle to a tape node.
struct TV {
    Tape* tape = nullptr;
    int id = -1;

    bool valid() const { return tape != nullptr && id >= 0; }
    std::size_t len() const;
    double value(std::size_t i = 0) const;
    const std::vector<double>& values() const;
};

enum class Op : std::uint8_t {
    Const,
    Param,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Tanh,
    Sigmoid,
    LeakyRelu, // attr0 = slope
    Log,
    Exp,
    Abs, // subgradient 0 at 0
    Sqrt,
    Sin,
    Cos,
    AddC,  // attr0 = constant
    MulC,  // attr0 = constant
    Scale, // in0 scalar node, in1 buffer
    Sum,
    Slice,   // iattr0 = offset, iattr1 = length
    ZeroPad, // iattr0 = output length
    Fft,     // real(M) -> complex(2M), unnormalized forward DFT
    Ifft,    // complex(2M) -> real(M), real part of normalized inverse DFT
    CMul,    // complex elementwise product
    CAbs,    // complex(2M) -> magnitudes(M)
    BiquadResp,   // 5 scalar coeff inputs -> complex(2M) transfer function; iattr0 = M
    Gru1Seq,      // (params9, x, h0) -> y; BPTT over the whole segment
    DenseLayer,   // (W, b, x) -> W x + b; iattr0 = rows, iattr1 = cols
    RangeMap,     // sigmoid outputs -> bounded dsp parameters; ranges in aux
    ConcatGruSeq, // vector GRU with knob concatenation; iattr0 = hidden, iattr1 = knobs
};

const char* op_name(Op op);

struct TapeNode {
    Op op;
    std::uint8_t nin = 0;
    bool requires_grad = false;
    std::array<int, 8> in{};
    double attr0 = 0.0;
    int iattr0 = 0;
    int iattr1 = 0;
    int param_entry = -1;
    std::vector<double> val;
    std::vector<double> grad;
    std::vector<double> aux; // op-specific: saved recurrence state, range tables
};

class Tape {
public:
    // ---- leaves ----
    TV constant(std::vector<double> v);
    TV scalar(double v) { return constant({v}); }
    // Registers a store entry as a leaf; repeated calls return the same node.
    TV param(const ParamStore& store, int entry);

    // ---- elementwise / scalar ----
    TV add(TV a, TV b);
    TV sub(TV a, TV b);
    TV mul(TV a, TV b);
    TV div(TV a, TV b);
    TV neg(TV a);
    TV tanh(TV a);
    TV sigmoid(TV a);
    TV leaky_relu(TV a, double slope);
    TV log(TV a);
    TV exp(TV a);
    TV abs(TV a);
    TV sqrt(TV a);
    TV sin(TV a);
    TV cos(TV a);
    TV add_c(TV a, double c);
    TV mul_c(TV a, double c);
    TV scale(TV s, TV x); // s scalar
    TV sum(TV a);
    TV slice(TV a, int offset, int length);
    TV zero_pad(TV a, int total);

    // ---- spectral ----
    TV fft(TV a);
    TV ifft(TV a);
    TV cmul(TV a, TV b);
    TV cabs(TV a);
    TV biquad_response(TV b0, TV b1, TV b2, TV a1, TV a2, int m);

    // ---- recurrences / layers ----
    TV gru1_seq(TV params9, TV x, TV h0);
    TV dense(TV w, TV b, TV x, int rows, int cols);
    // ranges: per output (lo, hi, log_flag)
    struct Range {
        double lo, hi;
        bool log_scale;
    };
    TV range_map(TV u, const std::vector<Range>& ranges);
    TV concat_gru_seq(TV w_ih, TV w_hh, TV bias, TV head_w, TV head_b, TV x, TV knobs,
                      TV h0, int hidden);

    // ---- execution ----
    // d(loss)/d(theta) for every registered parameter of `store`.
    Gradient backward(TV loss, const ParamStore& store);
    // Recompute every node from the leaves; returns max |recomputed - recorded|.
    double replay_check();
    void reset();

    std::size_t node_count() const { return nodes_.size(); }
    const TapeNode& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }

private:
    friend struct TV;
    std::vector<TapeNode> nodes_;
    std::map<int, int> param_nodes_; // store entry -> node id

    int push(TapeNode n);
    TV emit(Op op, std::initializer_list<int> ins, std::size_t out_len, double attr0 = 0.0,
            int iattr0 = 0, int iattr1 = 0);
    void compute_forward(TapeNode& n);
    void accumulate_backward(int id);
    std::vector<double>& grad_of(int id);
    void check_finite(const TapeNode& n, int id) const;
};

// Scalar-flavored operator sugar so shared formulas (filter design, range
// arithmetic) can be instantiated with TV as the scalar type.
TV operator+(TV a, TV b);
TV operator-(TV a, TV b);
TV operator*(TV a, TV b);
TV operator/(TV a, TV b);
TV operator+(TV a, double c);
TV operator+(double c, TV a);
TV operator-(TV a, double c);
TV operator-(double c, TV a);
TV operator*(TV a, double c);
TV operator*(double c, TV a);
TV operator/(TV a, double c);
TV operator/(double c, TV a);
TV operator-(TV a);
TV sin(TV a);
TV cos(TV a);
TV sqrt(TV a);
TV exp(TV a);
TV log(TV a);
TV tanh(TV a);
TV sigmoid(TV a);

} // namespace ddspamp
