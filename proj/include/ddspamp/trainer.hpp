#pragma once
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "ddspamp/dataset.hpp"
#include "ddspamp/model.hpp"
#include "ddspamp/params.hpp"
#include "ddspamp/run_config.hpp"
#include "ddspamp/tape.hpp"

namespace ddspamp {

struct TrainConfig {
    std::size_t segment_length = 8192;
    int batch_size = 32;
    double lr0 = 2e-3;
    int max_epochs = 100;
    int lr_halve_patience = 2;   // halve LR after this many consecutive non-improvements
    int early_stop_patience = 4; // stop after this many
    unsigned seed = 1;

    static TrainConfig from_run(const RunConfig& rc);
    void validate() const;
};

// Samples excluded from the loss at the start of each segment, absorbing the
// zero-state transient: min(1024, L - 2048). The remainder always satisfies
// the MR-STFT minimum length.
std::size_t loss_warmup(std::size_t segment_length);

// Validation-driven schedule. observe() feeds one validation loss and reports
// whether it improved the best, whether the LR was halved, and whether
// training should stop. The non-improvement streak resets on any strict
// improvement.
class LrSchedule {
public:
    LrSchedule(double lr0, int halve_patience, int stop_patience);

    struct Decision {
        bool improved = false;
        bool halved = false;
        bool stop = false;
    };
    Decision observe(double val_loss);

    double lr() const { return lr_; }
    double best() const { return best_; }
    int streak() const { return streak_; }

private:
    double lr_;
    int halve_patience_;
    int stop_patience_;
    double best_;
    int streak_ = 0;
};

// Adam with bias correction; moment buffers aligned with the store's entries.
class Adam {
public:
    explicit Adam(const ParamStore& store, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8);
    void step(ParamStore& store, const Gradient& grad, double lr);
    long steps() const { return t_; }

private:
    double b1_, b2_, eps_;
    long t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_mae = 0.0;
    double val_mrstft = 0.0;
    double lr = 0.0; // LR in effect during this epoch's updates
};

struct TrainResult {
    std::vector<EpochRecord> log;
    ParamStore best_params;
    double best_val = 0.0;
    int best_epoch = -1;
    int epochs_run = 0;
    bool early_stopped = false;
};

// Differentiable total loss (MAE + MR-STFT, unit weights) of one segment,
// with the warm-up prefix excluded. Exposed for gradient tests.
TV segment_loss_tv(Tape& t, const Model& model, const ParamStore& store, const KnobVector& knobs,
                   const std::vector<double>& input, const std::vector<double>& target);

// Plain-valued counterpart on the streaming path (state freshly zeroed).
double segment_loss_plain(const Model& model, const ParamStore& store, const KnobVector& knobs,
                          const std::vector<double>& input, const std::vector<double>& target,
                          double* mae_out = nullptr, double* mrstft_out = nullptr);

// Full protocol: shuffled non-overlapping segments, Adam updates per batch,
// per-epoch validation driving LR halving / early stopping, best-validation
// parameters retained. Deterministic for a fixed seed. If `log_out` is given,
// one line per epoch is written: epoch, train/val losses, the validation
// breakdown, and the LR.
TrainResult train(const Model& model, ParamStore& store, const Dataset& data,
                  const TrainConfig& cfg, std::ostream* log_out = nullptr);

std::string format_epoch_record(const EpochRecord& r);

} // namespace ddspamp
