#include "cli/config.hpp"

#include <cstddef>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

namespace infedit::cli {
namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) {
        return {};
    }
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::string current;
    std::istringstream in(text);
    while (std::getline(in, current, sep)) {
        parts.push_back(current);
    }
    return parts;
}

[[noreturn]] void fail_value(const std::string& context, const std::string& value,
                             const std::string& expected) {
    throw std::runtime_error(context + ": cannot parse '" + value + "' as " + expected);
}

double to_double(const std::string& value, const std::string& context) {
    const std::string v = trim(value);
    std::size_t consumed = 0;
    double parsed = 0.0;
    try {
        parsed = std::stod(v, &consumed);
    } catch (const std::exception&) {
        fail_value(context, value, "a real number");
    }
    if (consumed != v.size()) {
        fail_value(context, value, "a real number");
    }
    return parsed;
}

long long to_int(const std::string& value, const std::string& context) {
    const std::string v = trim(value);
    std::size_t consumed = 0;
    long long parsed = 0;
    try {
        parsed = std::stoll(v, &consumed);
    } catch (const std::exception&) {
        fail_value(context, value, "an integer");
    }
    if (consumed != v.size()) {
        fail_value(context, value, "an integer");
    }
    return parsed;
}

std::uint64_t to_u64(const std::string& value, const std::string& context) {
    const std::string v = trim(value);
    if (!v.empty() && v[0] == '-') {
        fail_value(context, value, "a non-negative integer");
    }
    std::size_t consumed = 0;
    unsigned long long parsed = 0;
    try {
        parsed = std::stoull(v, &consumed);
    } catch (const std::exception&) {
        fail_value(context, value, "a non-negative integer");
    }
    if (consumed != v.size()) {
        fail_value(context, value, "a non-negative integer");
    }
    return parsed;
}

int to_bounded_int(const std::string& value, const std::string& context, long long lo,
                   long long hi) {
    const long long parsed = to_int(value, context);
    if (parsed < lo || parsed > hi) {
        std::ostringstream msg;
        msg << context << ": value " << parsed << " outside allowed range [" << lo << ", " << hi
            << "]";
        throw std::runtime_error(msg.str());
    }
    return static_cast<int>(parsed);
}

double to_unit_interval(const std::string& value, const std::string& context) {
    const double parsed = to_double(value, context);
    if (!(parsed > 0.0 && parsed <= 1.0)) {
        throw std::runtime_error(context + ": must lie in (0, 1]");
    }
    return parsed;
}

void require_choice(const std::string& value, const std::string& context,
                    std::initializer_list<const char*> choices) {
    for (const char* choice : choices) {
        if (value == choice) {
            return;
        }
    }
    std::ostringstream msg;
    msg << context << ": '" << value << "' is not one of {";
    bool first = true;
    for (const char* choice : choices) {
        msg << (first ? "" : ", ") << choice;
        first = false;
    }
    msg << "}";
    throw std::runtime_error(msg.str());
}

// Applies one key = value pair; returns false for unknown keys.  Value errors
// throw with the key named.
bool apply_key(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "schedule") {
        require_choice(value, "schedule", {"linear"});
        cfg.schedule = value;
    } else if (key == "total_steps") {
        cfg.total_steps = to_bounded_int(value, "total_steps", 1, 1000000);
    } else if (key == "beta_start") {
        cfg.beta_start = to_double(value, "beta_start");
    } else if (key == "beta_end") {
        cfg.beta_end = to_double(value, "beta_end");
    } else if (key == "steps") {
        cfg.steps = to_bounded_int(value, "steps", 1, 1000000);
    } else if (key == "seed") {
        cfg.seed = to_u64(value, "seed");
    } else if (key == "out_dir") {
        cfg.out_dir = value;
    } else if (key == "shape") {
        cfg.shape = value;
    } else if (key == "input") {
        require_choice(value, "input", {"random", "constant", "file"});
        cfg.input = value;
    } else if (key == "input_value") {
        cfg.input_value = to_double(value, "input_value");
    } else if (key == "input_latent") {
        cfg.input_latent = value;
    } else if (key == "sweep_seeds") {
        cfg.sweep_seeds = to_bounded_int(value, "sweep_seeds", 1, 100000);
    } else if (key == "trace_stride") {
        cfg.trace_stride = to_bounded_int(value, "trace_stride", 1, 1000000);
    } else if (key == "denoiser") {
        require_choice(value, "denoiser", {"gaussian", "mixture", "toy_attention"});
        cfg.denoiser = value;
    } else if (key == "oracle_means") {
        cfg.oracle_means = value;
    } else if (key == "oracle_stddev") {
        cfg.oracle_stddev = to_double(value, "oracle_stddev");
        if (cfg.oracle_stddev < 0.0) {
            throw std::runtime_error("oracle_stddev: must be >= 0");
        }
    } else if (key == "toy_seed") {
        cfg.toy_seed = to_u64(value, "toy_seed");
    } else if (key == "grid_h") {
        cfg.grid_h = to_bounded_int(value, "grid_h", 1, 4096);
    } else if (key == "grid_w") {
        cfg.grid_w = to_bounded_int(value, "grid_w", 1, 4096);
    } else if (key == "token_dim") {
        cfg.token_dim = to_bounded_int(value, "token_dim", 1, 4096);
    } else if (key == "num_tokens_max") {
        cfg.num_tokens_max = to_bounded_int(value, "num_tokens_max", 1, 65536);
    } else if (key == "source_tokens") {
        cfg.source_tokens = value;
    } else if (key == "target_tokens") {
        cfg.target_tokens = value;
    } else if (key == "control") {
        require_choice(value, "control", {"none", "uac"});
        cfg.control = value;
    } else if (key == "tau_c") {
        cfg.tau_c = to_bounded_int(value, "tau_c", 0, 1000001);
    } else if (key == "tau_s") {
        cfg.tau_s = to_bounded_int(value, "tau_s", 0, 1000001);
    } else if (key == "a_src") {
        cfg.a_src = to_unit_interval(value, "a_src");
    } else if (key == "a_tgt") {
        cfg.a_tgt = to_unit_interval(value, "a_tgt");
    } else if (key == "align") {
        cfg.align = value;
    } else if (key == "blend_src_tokens") {
        cfg.blend_src_tokens = value;
    } else if (key == "blend_tgt_tokens") {
        cfg.blend_tgt_tokens = value;
    } else if (key == "input_a") {
        cfg.input_a = value;
    } else if (key == "input_b") {
        cfg.input_b = value;
    } else if (key == "psnr_max") {
        cfg.psnr_max = to_double(value, "psnr_max");
        if (!(cfg.psnr_max > 0.0)) {
            throw std::runtime_error("psnr_max: must be > 0");
        }
    } else {
        return false;
    }
    return true;
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("config '" + path + "': cannot open for reading");
    }

    ExperimentConfig cfg;
    std::set<std::string> seen;
    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        std::ostringstream where;
        where << "config '" << path << "' line " << line_number << ": ";
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error(where.str() + "expected 'key = value', got '" + line + "'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!seen.insert(key).second) {
            throw std::runtime_error(where.str() + "duplicate key '" + key + "'");
        }
        try {
            if (!apply_key(cfg, key, value)) {
                throw std::runtime_error("unknown key '" + key + "'");
            }
        } catch (const std::runtime_error& e) {
            throw std::runtime_error(where.str() + e.what());
        }
    }
    return cfg;
}

std::vector<double> parse_double_list(const std::string& text, const std::string& context) {
    std::vector<double> values;
    for (const std::string& part : split(text, ',')) {
        const std::string item = trim(part);
        if (item.empty()) {
            throw std::runtime_error(context + ": empty entry in list '" + text + "'");
        }
        values.push_back(to_double(item, context));
    }
    if (values.empty()) {
        throw std::runtime_error(context + ": list must not be empty");
    }
    return values;
}

std::vector<std::int64_t> parse_token_list(const std::string& text, const std::string& context) {
    std::vector<std::int64_t> tokens;
    if (trim(text).empty()) {
        return tokens;
    }
    for (const std::string& part : split(text, ',')) {
        const std::string item = trim(part);
        if (item.empty()) {
            throw std::runtime_error(context + ": empty entry in list '" + text + "'");
        }
        tokens.push_back(to_int(item, context));
    }
    return tokens;
}

Shape parse_shape(const std::string& text) {
    Shape shape;
    for (const std::string& part : split(text, 'x')) {
        const std::string item = trim(part);
        const long long dim = to_int(item.empty() ? "?" : item, "shape");
        if (dim <= 0) {
            throw std::runtime_error("shape: dimensions must be positive, got '" + text + "'");
        }
        shape.push_back(static_cast<std::size_t>(dim));
    }
    if (shape.empty()) {
        throw std::runtime_error("shape: must name at least one dimension");
    }
    return shape;
}

AlignmentMap parse_alignment(const std::string& text, std::size_t num_target_tokens,
                             std::size_t num_source_tokens) {
    if (trim(text).empty()) {
        if (num_source_tokens < num_target_tokens) {
            std::ostringstream msg;
            msg << "align: implicit identity alignment needs at least " << num_target_tokens
                << " source tokens, got " << num_source_tokens;
            throw std::runtime_error(msg.str());
        }
        return AlignmentMap::identity(num_target_tokens);
    }

    AlignmentMap map = AlignmentMap::none(num_target_tokens);
    std::set<std::size_t> assigned;
    for (const std::string& part : split(text, ',')) {
        const std::string entry = trim(part);
        const auto colon = entry.find(':');
        if (colon == std::string::npos) {
            throw std::runtime_error("align: entry '" + entry +
                                     "' is not of the form tgt:src or tgt:none");
        }
        const long long tgt = to_int(trim(entry.substr(0, colon)), "align target index");
        if (tgt < 0 || static_cast<std::size_t>(tgt) >= num_target_tokens) {
            std::ostringstream msg;
            msg << "align: target index " << tgt << " outside [0, " << num_target_tokens << ")";
            throw std::runtime_error(msg.str());
        }
        if (!assigned.insert(static_cast<std::size_t>(tgt)).second) {
            std::ostringstream msg;
            msg << "align: duplicate target index " << tgt;
            throw std::runtime_error(msg.str());
        }
        const std::string src_text = trim(entry.substr(colon + 1));
        if (src_text == "none") {
            continue;
        }
        const long long src = to_int(src_text, "align source index");
        if (src < 0 || static_cast<std::size_t>(src) >= num_source_tokens) {
            std::ostringstream msg;
            msg << "align: source index " << src << " outside [0, " << num_source_tokens << ")";
            throw std::runtime_error(msg.str());
        }
        map.targets[static_cast<std::size_t>(tgt)] = static_cast<std::size_t>(src);
    }
    return map;
}

}  // namespace infedit::cli
