#pragma once
#include <cstddef>
#include <string>

#include "ddspamp/model.hpp"

namespace ddspamp {

// Training-run description, read from a plain key = value file ('#' comments,
// unknown keys rejected). `run_config_keys_help()` documents the schema.
struct RunConfig {
    ModelKind model = ModelKind::F;
    std::string data_dir;
    std::string out_dir = "run_out";
    unsigned seed = 1;
    std::size_t segment_length = 0; // 0 = model default (8192 amp, 2048 baseline)
    int batch_size = 32;
    double lr0 = 2e-3;
    int max_epochs = 100;
    int lr_halve_patience = 2;
    int early_stop_patience = 4;

    // Table-1 presets: everything at protocol defaults, model set to `kind`.
    static RunConfig preset(ModelKind kind);

    std::size_t effective_segment_length() const;
    void validate() const;
};

RunConfig parse_run_config_text(const std::string& text, const std::string& origin = "<string>");
RunConfig parse_run_config(const std::string& path);
std::string run_config_to_text(const RunConfig& c);
std::string run_config_keys_help();

} // namespace ddspamp
