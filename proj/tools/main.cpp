// ddsp_amp: train / eval / process / bench / inspect entry points.
// Every command is non-interactive; failures exit nonzero with a one-line
// diagnostic on stderr.
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ddspamp/checkpoint.hpp"
#include "ddspamp/dataset.hpp"
#include "ddspamp/evaluator.hpp"
#include "ddspamp/model.hpp"
#include "ddspamp/run_config.hpp"
#include "ddspamp/synth_device.hpp"
#include "ddspamp/trainer.hpp"
#include "ddspamp/wav_io.hpp"

namespace fs = std::filesystem;
using namespace ddspamp;

namespace {

KnobVector parse_knobs(const std::string& text) {
    std::vector<double> vals;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            vals.push_back(std::stod(item, &used));
            if (used != item.size())
                throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw std::runtime_error("bad knob value '" + item + "'");
        }
    }
    if (vals.size() != 5)
        throw std::runtime_error("expected 5 comma-separated knob values "
                                 "(gain,bass,mid,treble,master), got " +
                                 std::to_string(vals.size()));
    KnobVector k{vals[0], vals[1], vals[2], vals[3], vals[4]};
    k.validate();
    return k;
}

struct LoadedModel {
    ParamStore store;
    std::unique_ptr<Model> model;
    CheckpointInfo info;
};

LoadedModel load_model(const std::string& checkpoint_path) {
    LoadedModel m;
    const CheckpointInfo header = read_checkpoint_info(checkpoint_path);
    m.model = make_model_from_arch(header.arch_id, m.store, /*seed=*/0);
    m.info = load_checkpoint(checkpoint_path, m.store, header.arch_id);
    return m;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::trunc);
    if (!f)
        throw std::runtime_error("cannot open " + path + " for writing");
    f << text;
    if (!f)
        throw std::runtime_error("write failed: " + path);
}

int cmd_train(const std::string& config_path) {
    const RunConfig rc = parse_run_config(config_path);
    if (rc.data_dir.empty())
        throw std::runtime_error("config: data_dir is required for training");
    const Dataset data = Dataset::load(rc.data_dir);
    fs::create_directories(rc.out_dir);

    ParamStore store;
    auto model = make_model(rc.model, store, rc.seed);
    const TrainConfig tc = TrainConfig::from_run(rc);

    const std::string log_path = (fs::path(rc.out_dir) / "train_log.txt").string();
    std::ofstream log_file(log_path, std::ios::trunc);
    if (!log_file)
        throw std::runtime_error("cannot open " + log_path + " for writing");

    struct Tee : std::ostream, std::streambuf {
        std::ostream &a, &b;
        Tee(std::ostream& a_, std::ostream& b_) : std::ostream(this), a(a_), b(b_) {}
        int overflow(int c) override {
            if (c != EOF) {
                a.put(static_cast<char>(c));
                b.put(static_cast<char>(c));
            }
            return c;
        }
        int sync() override {
            a.flush();
            b.flush();
            return 0;
        }
    } tee(std::cout, log_file);

    const TrainResult result = train(*model, store, data, tc, &tee);

    const std::string ckpt_path =
        (fs::path(rc.out_dir) / ("model_" + std::string(model_kind_name(rc.model)) + ".ckpt"))
            .string();
    const std::string meta = "config=" + std::string(model_kind_name(rc.model)) +
                             ";seed=" + std::to_string(rc.seed) +
                             ";best_epoch=" + std::to_string(result.best_epoch);
    save_checkpoint(ckpt_path, model->arch_id(), static_cast<std::uint32_t>(model->knob_count()),
                    meta, result.best_params);
    std::cout << "checkpoint=" << ckpt_path << " best_epoch=" << result.best_epoch
              << " best_val=" << result.best_val << " epochs_run=" << result.epochs_run
              << (result.early_stopped ? " early_stopped=1" : " early_stopped=0") << "\n";
    return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& data_dir, const std::string& split,
             const std::string& out_dir, std::size_t block) {
    LoadedModel m = load_model(ckpt);
    const Dataset data = Dataset::load(data_dir);
    const Split s = split_from_name(split);
    if (s != Split::TestSeen && s != Split::TestUnseen)
        throw std::runtime_error("eval expects --split seen or unseen");

    EvalReport report;
    report.arch_id = m.model->arch_id();
    report.params = count_params(m.store);
    report.ops = count_ops(m.model->kind());
    const EvalMetrics metrics = evaluate_split(*m.model, m.store, data, s, block);
    if (metrics.regions == 0)
        throw std::runtime_error("dataset has no material for split '" + split + "'");
    if (s == Split::TestSeen) {
        report.seen = metrics;
        report.has_seen = true;
    } else {
        report.unseen = metrics;
        report.has_unseen = true;
    }
    fs::create_directories(out_dir);
    const std::string base = (fs::path(out_dir) / ("eval_" + split)).string();
    write_text_file(base + ".txt", report.to_text());
    write_text_file(base + ".csv", report.to_csv());
    std::cout << report.to_text();
    return 0;
}

int cmd_process(const std::string& ckpt, const std::string& input, const std::string& output,
                const std::string& knob_text) {
    const KnobVector knobs = parse_knobs(knob_text);
    LoadedModel m = load_model(ckpt);
    const WavData in = read_wav(input); // enforces mono 44.1 kHz
    auto stream = m.model->make_stream();
    std::vector<double> out;
    out.reserve(in.samples.size());
    constexpr std::size_t kBlock = 4096;
    for (std::size_t pos = 0; pos < in.samples.size(); pos += kBlock) {
        const std::size_t stop = std::min(in.samples.size(), pos + kBlock);
        const std::vector<double> block(in.samples.begin() + static_cast<std::ptrdiff_t>(pos),
                                        in.samples.begin() + static_cast<std::ptrdiff_t>(stop));
        const auto y = m.model->process(m.store, knobs, block, *stream);
        out.insert(out.end(), y.begin(), y.end());
    }
    write_wav_f32(output, out, in.sample_rate);
    std::cout << "wrote " << output << " (" << out.size() << " samples)\n";
    return 0;
}

int cmd_bench(const std::string& ckpt, double seconds) {
    LoadedModel m = load_model(ckpt);
    const OpsBudget ops = count_ops(m.model->kind());
    std::cout << "arch = " << m.model->arch_id() << "\n";
    std::cout << "params = " << count_params(m.store) << "\n";
    std::cout << "ops_per_sample = " << ops.total() << "\n";
    std::cout << "ops_adds = " << ops.adds << "\n";
    std::cout << "ops_muls = " << ops.muls << "\n";
    std::cout << "ops_divs = " << ops.divs << "\n";
    std::cout << "ops_nonlin_calls = " << ops.nonlin_calls << "\n";

    const std::size_t n = static_cast<std::size_t>(44100.0 * std::max(0.1, seconds));
    const auto x = synth_guitar_signal(n, 1234);
    const KnobVector knobs{};
    auto stream = m.model->make_stream();
    const auto t0 = std::chrono::steady_clock::now();
    constexpr std::size_t kBlock = 4096;
    for (std::size_t pos = 0; pos < n; pos += kBlock) {
        const std::size_t stop = std::min(n, pos + kBlock);
        const std::vector<double> block(x.begin() + static_cast<std::ptrdiff_t>(pos),
                                        x.begin() + static_cast<std::ptrdiff_t>(stop));
        (void)m.model->process(m.store, knobs, block, *stream);
    }
    const auto t1 = std::chrono::steady_clock::now();
    const double elapsed = std::chrono::duration<double>(t1 - t0).count();
    std::cout << "samples_per_second = " << (static_cast<double>(n) / elapsed) << "\n";
    std::cout << "realtime_factor = " << (static_cast<double>(n) / 44100.0) / elapsed << "\n";
    return 0;
}

int cmd_inspect(const std::string& ckpt, const std::string& probe, const std::string& stage_text,
                double freq, double amp, const std::string& knob_text, const std::string& out) {
    LoadedModel m = load_model(ckpt);
    const KnobVector knobs = parse_knobs(knob_text);

    std::string csv;
    std::string note;
    if (probe == "hysteresis") {
        DistortionProbe p;
        if (const AmpModel* ampm = m.model->amp()) {
            const Stage stage = stage_from_name(stage_text);
            const DesignedAmp d = ampm->design(m.store, knobs);
            p = probe_distortion_curve(*ampm, d, stage, freq, amp);
        } else {
            p = probe_distortion_curve(*m.model, m.store, knobs, freq, amp);
        }
        csv = p.to_csv();
        std::ostringstream n;
        n.precision(10);
        n << "loop_area = " << p.loop_area << "\nfreq_used = " << p.freq_used << "\n";
        note = n.str();
    } else if (probe == "response") {
        const AmpModel* ampm = m.model->amp();
        if (ampm == nullptr)
            throw std::runtime_error("response probe needs a modular amp checkpoint (C-F)");
        const Stage stage = stage_from_name(stage_text);
        const DesignedAmp d = ampm->design(m.store, knobs);
        const auto cascade = stage_filter_cascade(d, stage);
        csv = response_csv(probe_frequency_response(cascade, ampm->sample_rate()));
    } else {
        throw std::runtime_error("unknown probe '" + probe + "' (expected hysteresis or response)");
    }

    if (out.empty()) {
        std::cout << csv;
        std::cerr << note;
    } else {
        write_text_file(out, csv);
        std::cout << note;
        std::cout << "wrote " << out << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Differentiable-DSP guitar amplifier modeling toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    auto* train_cmd = app.add_subcommand("train", "Train a model from a run-config file");
    train_cmd->add_option("--config", config_path, "key = value run configuration")->required();

    std::string ckpt, data_dir, split = "seen", out_dir = ".";
    std::size_t block = 4096;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset split");
    eval_cmd->add_option("--checkpoint", ckpt, "model checkpoint")->required();
    eval_cmd->add_option("--data", data_dir, "dataset directory")->required();
    eval_cmd->add_option("--split", split, "seen or unseen");
    eval_cmd->add_option("--out", out_dir, "report output directory");
    eval_cmd->add_option("--block", block, "streaming block size");

    std::string input, output, knob_text = "0.5,0.5,0.5,0.5,0.5";
    auto* proc_cmd = app.add_subcommand("process", "Run audio through a trained model");
    proc_cmd->add_option("--checkpoint", ckpt, "model checkpoint")->required();
    proc_cmd->add_option("--input", input, "input WAV (mono 44.1 kHz)")->required();
    proc_cmd->add_option("--output", output, "output WAV (32-bit float)")->required();
    proc_cmd->add_option("--knobs", knob_text, "gain,bass,mid,treble,master in [0,1]");

    double bench_seconds = 1.0;
    auto* bench_cmd = app.add_subcommand("bench", "Report ops/sample, params and throughput");
    bench_cmd->add_option("--checkpoint", ckpt, "model checkpoint")->required();
    bench_cmd->add_option("--seconds", bench_seconds, "amount of audio to time");

    std::string probe = "hysteresis", stage_text = "transformer", csv_out;
    double freq = 100.0, amp = 0.5;
    auto* inspect_cmd = app.add_subcommand("inspect", "Probe a checkpoint (CSV output)");
    inspect_cmd->add_option("--checkpoint", ckpt, "model checkpoint")->required();
    inspect_cmd->add_option("--probe", probe, "hysteresis or response");
    inspect_cmd->add_option("--stage", stage_text,
                            "preamp|tonestack|poweramp|transformer|clipper|full");
    inspect_cmd->add_option("--freq", freq, "probe frequency in Hz");
    inspect_cmd->add_option("--amp", amp, "probe amplitude");
    inspect_cmd->add_option("--knobs", knob_text, "gain,bass,mid,treble,master in [0,1]");
    inspect_cmd->add_option("--out", csv_out, "CSV file (default: stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed())
            return cmd_train(config_path);
        if (eval_cmd->parsed())
            return cmd_eval(ckpt, data_dir, split, out_dir, block);
        if (proc_cmd->parsed())
            return cmd_process(ckpt, input, output, knob_text);
        if (bench_cmd->parsed())
            return cmd_bench(ckpt, bench_seconds);
        if (inspect_cmd->parsed())
            return cmd_inspect(ckpt, probe, stage_text, freq, amp, knob_text, csv_out);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 0;
}
