#include "ddspamp/run_config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ddspamp {
namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos)
        return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

[[noreturn]] void fail(const std::string& origin, int line, const std::string& why) {
    throw std::runtime_error("config: " + origin + ":" + std::to_string(line) + ": " + why);
}

long parse_int(const std::string& origin, int line, const std::string& key,
               const std::string& value) {
    try {
        std::size_t used = 0;
        const long v = std::stol(value, &used);
        if (used != value.size())
            throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        fail(origin, line, "invalid integer for " + key + ": '" + value + "'");
    }
}

double parse_double(const std::string& origin, int line, const std::string& key,
                    const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size())
            throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        fail(origin, line, "invalid number for " + key + ": '" + value + "'");
    }
}

} // namespace

RunConfig RunConfig::preset(ModelKind kind) {
    RunConfig c;
    c.model = kind;
    return c;
}

std::size_t RunConfig::effective_segment_length() const {
    if (segment_length != 0)
        return segment_length;
    const bool baseline = (model == ModelKind::A || model == ModelKind::B);
    return baseline ? 2048 : 8192;
}

void RunConfig::validate() const {
    if (effective_segment_length() < 2048)
        throw std::runtime_error(
            "config: segment_length must be at least 2048 (the largest STFT window)");
    if (batch_size < 1)
        throw std::runtime_error("config: batch_size must be positive");
    if (lr0 <= 0.0)
        throw std::runtime_error("config: lr0 must be positive");
    if (max_epochs < 1)
        throw std::runtime_error("config: max_epochs must be positive");
    if (lr_halve_patience < 1 || early_stop_patience < 1)
        throw std::runtime_error("config: patience values must be positive");
    if (early_stop_patience < lr_halve_patience)
        throw std::runtime_error("config: early_stop_patience must be >= lr_halve_patience");
}

RunConfig parse_run_config_text(const std::string& text, const std::string& origin) {
    RunConfig c;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            fail(origin, lineno, "expected key = value, got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            fail(origin, lineno, "empty key or value");

        if (key == "model") {
            try {
                c.model = model_kind_from_name(value);
            } catch (const std::exception& ex) {
                fail(origin, lineno, ex.what());
            }
        } else if (key == "data_dir") {
            c.data_dir = value;
        } else if (key == "out_dir") {
            c.out_dir = value;
        } else if (key == "seed") {
            c.seed = static_cast<unsigned>(parse_int(origin, lineno, key, value));
        } else if (key == "segment_length") {
            c.segment_length = static_cast<std::size_t>(parse_int(origin, lineno, key, value));
        } else if (key == "batch_size") {
            c.batch_size = static_cast<int>(parse_int(origin, lineno, key, value));
        } else if (key == "lr0") {
            c.lr0 = parse_double(origin, lineno, key, value);
        } else if (key == "max_epochs") {
            c.max_epochs = static_cast<int>(parse_int(origin, lineno, key, value));
        } else if (key == "lr_halve_patience") {
            c.lr_halve_patience = static_cast<int>(parse_int(origin, lineno, key, value));
        } else if (key == "early_stop_patience") {
            c.early_stop_patience = static_cast<int>(parse_int(origin, lineno, key, value));
        } else {
            fail(origin, lineno, "unknown key '" + key + "'\n" + run_config_keys_help());
        }
    }
    c.validate();
    return c;
}

RunConfig parse_run_config(const std::string& path) {
    std::ifstream f(path);
    if (!f)
        throw std::runtime_error("config: cannot open " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse_run_config_text(buf.str(), path);
}

std::string run_config_to_text(const RunConfig& c) {
    std::ostringstream out;
    out << "model = " << model_kind_name(c.model) << "\n";
    out << "data_dir = " << c.data_dir << "\n";
    out << "out_dir = " << c.out_dir << "\n";
    out << "seed = " << c.seed << "\n";
    out << "segment_length = " << c.effective_segment_length() << "\n";
    out << "batch_size = " << c.batch_size << "\n";
    out << "lr0 = " << c.lr0 << "\n";
    out << "max_epochs = " << c.max_epochs << "\n";
    out << "lr_halve_patience = " << c.lr_halve_patience << "\n";
    out << "early_stop_patience = " << c.early_stop_patience << "\n";
    return out.str();
}

std::string run_config_keys_help() {
    return "known keys: model (A-F), data_dir, out_dir, seed, segment_length, batch_size, "
           "lr0, max_epochs, lr_halve_patience, early_stop_patience";
}

} // namespace ddspamp
