#pragma once
#include <memory>
#include <string>
#include <vector>

#include "ddspamp/amp_model.hpp"
#include "ddspamp/baseline_gru.hpp"
#include "ddspamp/params.hpp"
#include "ddspamp/tape.hpp"

namespace ddspamp {

// Table-1 row selector. A/B are the black-box Concat-GRU baselines (hidden 8
// and 48); C-F are the modular amp graphs.
enum class ModelKind { A, B, C, D, E, F };

const char* model_kind_name(ModelKind k);
ModelKind model_kind_from_name(const std::string& name);

// Type-erased streaming state so the trainer/evaluator/CLI can drive either
// model family through one interface.
class StreamHandle {
public:
    virtual ~StreamHandle() = default;
    virtual void reset() = 0;
};

class Model {
public:
    virtual ~Model() = default;

    virtual std::string arch_id() const = 0;
    virtual ModelKind kind() const = 0;
    virtual int knob_count() const { return 5; }
    // 8192 samples for the amp graphs, 2048 for the baselines.
    virtual std::size_t default_segment_length() const = 0;

    virtual std::unique_ptr<StreamHandle> make_stream() const = 0;
    virtual std::vector<double> process(const ParamStore& store, const KnobVector& knobs,
                                        const std::vector<double>& block,
                                        StreamHandle& state) const = 0;
    virtual TV build_train_graph(Tape& t, const ParamStore& store, const KnobVector& knobs,
                                 const std::vector<double>& input) const = 0;

    // Non-null for C-F; stage probes need the concrete amp graph.
    virtual const AmpModel* amp() const { return nullptr; }
    virtual const ConcatGruModel* baseline() const { return nullptr; }
};

// Registers the model's parameters in `store` and returns the wrapper.
std::unique_ptr<Model> make_model(ModelKind kind, ParamStore& store, unsigned seed);

// Factory from a checkpoint's architecture id (e.g. "ddsp-amp-F").
std::unique_ptr<Model> make_model_from_arch(const std::string& arch_id, ParamStore& store,
                                            unsigned seed);

} // namespace ddspamp
