#include "ddspamp/trainer.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "ddspamp/losses.hpp"

namespace ddspamp {

TrainConfig TrainConfig::from_run(const RunConfig& rc) {
    TrainConfig c;
    c.segment_length = rc.effective_segment_length();
    c.batch_size = rc.batch_size;
    c.lr0 = rc.lr0;
    c.max_epochs = rc.max_epochs;
    c.lr_halve_patience = rc.lr_halve_patience;
    c.early_stop_patience = rc.early_stop_patience;
    c.seed = rc.seed;
    return c;
}

void TrainConfig::validate() const {
    if (segment_length < 2048)
        throw std::runtime_error("trainer: segment_length must be at least 2048");
    if (batch_size < 1 || max_epochs < 1 || lr0 <= 0.0)
        throw std::runtime_error("trainer: batch_size, max_epochs and lr0 must be positive");
    if (lr_halve_patience < 1 || early_stop_patience < lr_halve_patience)
        throw std::runtime_error("trainer: need early_stop_patience >= lr_halve_patience >= 1");
}

std::size_t loss_warmup(std::size_t segment_length) {
    if (segment_length <= 2048)
        return 0;
    return std::min<std::size_t>(1024, segment_length - 2048);
}

LrSchedule::LrSchedule(double lr0, int halve_patience, int stop_patience)
    : lr_(lr0), halve_patience_(halve_patience), stop_patience_(stop_patience),
      best_(std::numeric_limits<double>::infinity()) {}

LrSchedule::Decision LrSchedule::observe(double val_loss) {
    Decision d;
    if (val_loss < best_) {
        best_ = val_loss;
        streak_ = 0;
        d.improved = true;
        return d;
    }
    ++streak_;
    if (streak_ >= stop_patience_) {
        d.stop = true;
        return d;
    }
    if (streak_ % halve_patience_ == 0) {
        lr_ *= 0.5;
        d.halved = true;
    }
    return d;
}

Adam::Adam(const ParamStore& store, double beta1, double beta2, double eps)
    : b1_(beta1), b2_(beta2), eps_(eps) {
    m_.reserve(store.size());
    v_.reserve(store.size());
    for (const auto& e : store.entries()) {
        m_.emplace_back(e.value.size(), 0.0);
        v_.emplace_back(e.value.size(), 0.0);
    }
}

void Adam::step(ParamStore& store, const Gradient& grad, double lr) {
    if (grad.by_entry.size() != m_.size())
        throw std::runtime_error("Adam: gradient/store entry count mismatch");
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    for (std::size_t e = 0; e < m_.size(); ++e) {
        auto& theta = store.at(static_cast<int>(e)).value;
        const auto& g = grad.by_entry[e];
        if (g.size() != theta.size())
            throw std::runtime_error("Adam: gradient/store size mismatch at entry " +
                                     store.at(static_cast<int>(e)).name);
        for (std::size_t i = 0; i < theta.size(); ++i) {
            m_[e][i] = b1_ * m_[e][i] + (1.0 - b1_) * g[i];
            v_[e][i] = b2_ * v_[e][i] + (1.0 - b2_) * g[i] * g[i];
            const double mhat = m_[e][i] / c1;
            const double vhat = v_[e][i] / c2;
            theta[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

TV segment_loss_tv(Tape& t, const Model& model, const ParamStore& store, const KnobVector& knobs,
                   const std::vector<double>& input, const std::vector<double>& target) {
    if (input.size() != target.size())
        throw std::runtime_error("trainer: segment input/target length mismatch");
    const std::size_t w = loss_warmup(input.size());
    TV y = model.build_train_graph(t, store, knobs, input);
    TV yl = (w == 0) ? y : t.slice(y, w, input.size() - w);
    const std::vector<double> tl(target.begin() + static_cast<std::ptrdiff_t>(w), target.end());
    return t.add(mae_loss_tv(t, tl, yl), mrstft_loss_tv(t, tl, yl));
}

double segment_loss_plain(const Model& model, const ParamStore& store, const KnobVector& knobs,
                          const std::vector<double>& input, const std::vector<double>& target,
                          double* mae_out, double* mrstft_out) {
    if (input.size() != target.size())
        throw std::runtime_error("trainer: segment input/target length mismatch");
    const std::size_t w = loss_warmup(input.size());
    auto stream = model.make_stream();
    const auto y = model.process(store, knobs, input, *stream);
    const std::vector<double> yl(y.begin() + static_cast<std::ptrdiff_t>(w), y.end());
    const std::vector<double> tl(target.begin() + static_cast<std::ptrdiff_t>(w), target.end());
    const double mae = mae_loss(tl, yl);
    const double stft = mrstft_loss(tl, yl);
    if (mae_out != nullptr)
        *mae_out = mae;
    if (mrstft_out != nullptr)
        *mrstft_out = stft;
    return mae + stft;
}

namespace {

std::vector<double> slice_of(const std::vector<double>& v, std::size_t off, std::size_t len) {
    return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(off),
                               v.begin() + static_cast<std::ptrdiff_t>(off + len));
}

void accumulate(Gradient& acc, const Gradient& g) {
    if (acc.by_entry.empty()) {
        acc = g;
        return;
    }
    for (std::size_t e = 0; e < acc.by_entry.size(); ++e)
        for (std::size_t i = 0; i < acc.by_entry[e].size(); ++i)
            acc.by_entry[e][i] += g.by_entry[e][i];
}

} // namespace

std::string format_epoch_record(const EpochRecord& r) {
    std::ostringstream out;
    out.precision(10);
    out << "epoch=" << r.epoch << " train_loss=" << r.train_loss << " val_loss=" << r.val_loss
        << " val_mae=" << r.val_mae << " val_mrstft=" << r.val_mrstft << " lr=" << r.lr;
    return out.str();
}

TrainResult train(const Model& model, ParamStore& store, const Dataset& data,
                  const TrainConfig& cfg, std::ostream* log_out) {
    cfg.validate();
    const std::size_t L = cfg.segment_length;
    auto train_segments = make_segments(data, Split::Train, L);
    const auto val_segments = make_segments(data, Split::Val, L);
    if (train_segments.empty())
        throw std::runtime_error("trainer: training split yields no full segments");
    if (val_segments.empty())
        throw std::runtime_error("trainer: validation split yields no full segments");

    for (const auto& p : data.pairs)
        p.knobs.validate();

    Adam adam(store);
    LrSchedule sched(cfg.lr0, cfg.lr_halve_patience, cfg.early_stop_patience);
    TrainResult result;
    result.best_val = std::numeric_limits<double>::infinity();

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        // Fresh deterministic order per epoch.
        shuffle_segments(train_segments, cfg.seed * 1000003u + static_cast<unsigned>(epoch));
        const double lr_epoch = sched.lr();

        double train_sum = 0.0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < train_segments.size();
             start += static_cast<std::size_t>(cfg.batch_size), ++batch_index) {
            const std::size_t stop =
                std::min(train_segments.size(), start + static_cast<std::size_t>(cfg.batch_size));
            Gradient batch_grad;
            for (std::size_t s = start; s < stop; ++s) {
                const SegmentRef ref = train_segments[s];
                const DatasetPair& pair = data.pairs[ref.pair];
                const std::string where = "epoch " + std::to_string(epoch + 1) + ", batch " +
                                          std::to_string(batch_index) + " (pair '" + pair.name +
                                          "', offset " + std::to_string(ref.offset) + ")";
                try {
                    Tape tape;
                    TV loss = segment_loss_tv(tape, model, store, pair.knobs,
                                              slice_of(pair.input, ref.offset, L),
                                              slice_of(pair.target, ref.offset, L));
                    const double value = loss.value();
                    if (!std::isfinite(value))
                        throw std::runtime_error("non-finite loss");
                    train_sum += value;
                    accumulate(batch_grad, tape.backward(loss, store));
                } catch (const std::exception& ex) {
                    throw std::runtime_error("trainer: aborting at " + where + ": " + ex.what());
                }
            }
            const double inv = 1.0 / static_cast<double>(stop - start);
            for (auto& entry : batch_grad.by_entry)
                for (double& g : entry)
                    g *= inv;
            adam.step(store, batch_grad, lr_epoch);
        }

        double val_sum = 0.0, val_mae_sum = 0.0, val_stft_sum = 0.0;
        for (const SegmentRef& ref : val_segments) {
            const DatasetPair& pair = data.pairs[ref.pair];
            double mae = 0.0, stft = 0.0;
            val_sum += segment_loss_plain(model, store, pair.knobs,
                                          slice_of(pair.input, ref.offset, L),
                                          slice_of(pair.target, ref.offset, L), &mae, &stft);
            val_mae_sum += mae;
            val_stft_sum += stft;
        }
        const double inv_val = 1.0 / static_cast<double>(val_segments.size());
        EpochRecord rec;
        rec.epoch = epoch + 1; // epochs are 1-based in logs and results
        rec.train_loss = train_sum / static_cast<double>(train_segments.size());
        rec.val_loss = val_sum * inv_val;
        rec.val_mae = val_mae_sum * inv_val;
        rec.val_mrstft = val_stft_sum * inv_val;
        rec.lr = lr_epoch;
        result.log.push_back(rec);
        result.epochs_run = epoch + 1;
        if (log_out != nullptr)
            *log_out << format_epoch_record(rec) << "\n" << std::flush;

        const auto decision = sched.observe(rec.val_loss);
        if (decision.improved) {
            result.best_val = rec.val_loss;
            result.best_epoch = epoch + 1;
            result.best_params = store;
        }
        if (decision.stop) {
            result.early_stopped = true;
            break;
        }
    }
    if (result.best_epoch < 0) {
        result.best_params = store;
        result.best_val = result.log.empty() ? 0.0 : result.log.back().val_loss;
        result.best_epoch = result.epochs_run;
    }
    return result;
}

} // namespace ddspamp
