#include "ddspamp/model.hpp"

#include <stdexcept>

namespace ddspamp {
namespace {

class AmpStream : public StreamHandle {
public:
    explicit AmpStream(StreamState s) : state(std::move(s)) {}
    void reset() override { state.reset(); }
    StreamState state;
};

class AmpWrap : public Model {
public:
    AmpWrap(ModelKind kind, AmpConfig cfg, ParamStore& store, unsigned seed)
        : kind_(kind), model_(cfg, store, seed) {}

    std::string arch_id() const override {
        return std::string("ddsp-amp-") + amp_config_name(model_.config());
    }
    ModelKind kind() const override { return kind_; }
    std::size_t default_segment_length() const override { return 8192; }

    std::unique_ptr<StreamHandle> make_stream() const override {
        return std::make_unique<AmpStream>(model_.make_state());
    }
    std::vector<double> process(const ParamStore& store, const KnobVector& knobs,
                                const std::vector<double>& block,
                                StreamHandle& state) const override {
        auto* s = dynamic_cast<AmpStream*>(&state);
        if (s == nullptr)
            throw std::runtime_error("Model: stream state belongs to a different model family");
        return model_.process(store, knobs, block, s->state);
    }
    TV build_train_graph(Tape& t, const ParamStore& store, const KnobVector& knobs,
                         const std::vector<double>& input) const override {
        return model_.build_train_graph(t, store, knobs, input);
    }
    const AmpModel* amp() const override { return &model_; }

private:
    ModelKind kind_;
    AmpModel model_;
};

class GruStream : public StreamHandle {
public:
    explicit GruStream(ConcatGruModel::State s) : state(std::move(s)) {}
    void reset() override { state.reset(); }
    ConcatGruModel::State state;
};

class GruWrap : public Model {
public:
    GruWrap(ModelKind kind, int hidden, ParamStore& store, unsigned seed)
        : kind_(kind), model_(hidden, store, seed) {}

    std::string arch_id() const override {
        return "concat-gru-" + std::to_string(model_.hidden());
    }
    ModelKind kind() const override { return kind_; }
    std::size_t default_segment_length() const override { return 2048; }

    std::unique_ptr<StreamHandle> make_stream() const override {
        return std::make_unique<GruStream>(model_.make_state());
    }
    std::vector<double> process(const ParamStore& store, const KnobVector& knobs,
                                const std::vector<double>& block,
                                StreamHandle& state) const override {
        auto* s = dynamic_cast<GruStream*>(&state);
        if (s == nullptr)
            throw std::runtime_error("Model: stream state belongs to a different model family");
        return model_.process(store, knobs, block, s->state);
    }
    TV build_train_graph(Tape& t, const ParamStore& store, const KnobVector& knobs,
                         const std::vector<double>& input) const override {
        return model_.build_train_graph(t, store, knobs, input);
    }
    const ConcatGruModel* baseline() const override { return &model_; }

private:
    ModelKind kind_;
    ConcatGruModel model_;
};

} // namespace

const char* model_kind_name(ModelKind k) {
    switch (k) {
    case ModelKind::A: return "A";
    case ModelKind::B: return "B";
    case ModelKind::C: return "C";
    case ModelKind::D: return "D";
    case ModelKind::E: return "E";
    case ModelKind::F: return "F";
    }
    return "?";
}

ModelKind model_kind_from_name(const std::string& name) {
    if (name.size() == 1) {
        switch (name[0]) {
        case 'A': return ModelKind::A;
        case 'B': return ModelKind::B;
        case 'C': return ModelKind::C;
        case 'D': return ModelKind::D;
        case 'E': return ModelKind::E;
        case 'F': return ModelKind::F;
        default: break;
        }
    }
    throw std::runtime_error("unknown model config '" + name + "' (expected A-F)");
}

std::unique_ptr<Model> make_model(ModelKind kind, ParamStore& store, unsigned seed) {
    switch (kind) {
    case ModelKind::A: return std::make_unique<GruWrap>(kind, 8, store, seed);
    case ModelKind::B: return std::make_unique<GruWrap>(kind, 48, store, seed);
    case ModelKind::C: return std::make_unique<AmpWrap>(kind, AmpConfig::C, store, seed);
    case ModelKind::D: return std::make_unique<AmpWrap>(kind, AmpConfig::D, store, seed);
    case ModelKind::E: return std::make_unique<AmpWrap>(kind, AmpConfig::E, store, seed);
    case ModelKind::F: return std::make_unique<AmpWrap>(kind, AmpConfig::F, store, seed);
    }
    throw std::runtime_error("unknown model kind");
}

std::unique_ptr<Model> make_model_from_arch(const std::string& arch_id, ParamStore& store,
                                            unsigned seed) {
    if (arch_id == "concat-gru-8")
        return make_model(ModelKind::A, store, seed);
    if (arch_id == "concat-gru-48")
        return make_model(ModelKind::B, store, seed);
    const std::string prefix = "ddsp-amp-";
    if (arch_id.rfind(prefix, 0) == 0)
        return make_model(model_kind_from_name(arch_id.substr(prefix.size())), store, seed);
    throw std::runtime_error("unknown architecture id '" + arch_id + "'");
}

} // namespace ddspamp
