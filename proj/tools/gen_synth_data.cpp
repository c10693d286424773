// Generates a synthetic system-identification dataset: guitar-like input
// signals processed through the reference SynthDevice at a table of knob
// settings, written in the dataset directory layout
// (<name>.input.wav / <name>.target.wav / <name>.knobs).
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "ddspamp/dataset.hpp"
#include "ddspamp/synth_device.hpp"
#include "ddspamp/wav_io.hpp"

namespace fs = std::filesystem;
using namespace ddspamp;

namespace {

const KnobVector kSeenTable[] = {
    {0.25, 0.50, 0.50, 0.50, 0.35},
    {0.50, 0.50, 0.50, 0.50, 0.50},
    {0.75, 0.30, 0.60, 0.70, 0.45},
    {0.35, 0.70, 0.40, 0.30, 0.60},
    {0.65, 0.40, 0.70, 0.60, 0.30},
};
const KnobVector kUnseenTable[] = {
    {0.45, 0.55, 0.45, 0.65, 0.40},
    {0.60, 0.35, 0.55, 0.45, 0.55},
};

void write_pair(const std::string& dir, const std::string& name, const KnobVector& knobs,
                bool unseen, std::size_t samples, unsigned seed) {
    const SynthDevice device;
    const auto input = synth_guitar_signal(samples, seed);
    auto state = device.make_state();
    const auto target = device.process(knobs, input, state);

    const std::string base = (fs::path(dir) / name).string();
    write_wav_f32(base + ".input.wav", input);
    write_wav_f32(base + ".target.wav", target);
    std::ofstream kf(base + ".knobs", std::ios::trunc);
    kf << knob_sidecar_text(knobs, unseen);
    if (!kf)
        throw std::runtime_error("cannot write " + base + ".knobs");
    std::cout << name << ": " << samples << " samples, gain=" << knobs.gain
              << " master=" << knobs.master << (unseen ? " (unseen)" : "") << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Generate the synthetic reference-device dataset"};
    std::string out_dir;
    double seconds_per_pair = 36.0;
    int pairs = 5;
    int unseen_pairs = 1;
    double unseen_seconds = 12.0;
    unsigned seed = 7;
    app.add_option("--out", out_dir, "output directory")->required();
    app.add_option("--seconds-per-pair", seconds_per_pair, "seen pair length in seconds");
    app.add_option("--pairs", pairs, "number of seen knob settings");
    app.add_option("--unseen", unseen_pairs, "number of unseen knob settings");
    app.add_option("--unseen-seconds", unseen_seconds, "unseen pair length in seconds");
    app.add_option("--seed", seed, "signal generator seed");
    CLI11_PARSE(app, argc, argv);

    try {
        fs::create_directories(out_dir);
        constexpr double kFs = 44100.0;
        const int seen_table_n = static_cast<int>(sizeof(kSeenTable) / sizeof(kSeenTable[0]));
        const int unseen_table_n = static_cast<int>(sizeof(kUnseenTable) / sizeof(kUnseenTable[0]));
        for (int p = 0; p < pairs; ++p) {
            char name[32];
            std::snprintf(name, sizeof(name), "pair%02d", p);
            write_pair(out_dir, name, kSeenTable[p % seen_table_n], false,
                       static_cast<std::size_t>(seconds_per_pair * kFs),
                       seed + static_cast<unsigned>(p));
        }
        for (int p = 0; p < unseen_pairs; ++p) {
            char name[32];
            std::snprintf(name, sizeof(name), "unseen%02d", p);
            write_pair(out_dir, name, kUnseenTable[p % unseen_table_n], true,
                       static_cast<std::size_t>(unseen_seconds * kFs),
                       seed + 1000 + static_cast<unsigned>(p));
        }
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 0;
}
