#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "infedit/attention_control.hpp"
#include "infedit/latent.hpp"

namespace infedit::cli {

// Flat key = value experiment description.  Unknown and duplicate keys are
// rejected at load time; every key is documented in the executable's --help
// output.  List-valued fields stay as raw strings here and are parsed by the
// helpers below when a command consumes them.
struct ExperimentConfig {
    // Variance schedule.
    std::string schedule = "linear";
    int total_steps = 1000;
    double beta_start = 1e-4;
    double beta_end = 0.02;

    // Sampling ladder: number of denoiser evaluations.  The visited timesteps
    // are evenly spaced (rounded down) over (0, total_steps], anchored so the
    // first one is exactly total_steps.
    int steps = 50;

    std::uint64_t seed = 0;
    std::string out_dir = ".";

    // Initial latent.
    std::string shape = "1x8x8";     // dims separated by 'x'
    std::string input = "random";    // random | constant | file
    double input_value = 0.0;        // used by input = constant
    std::string input_latent;        // used by input = file

    // reconstruct-specific.
    int sweep_seeds = 1;   // > 1 runs seeds seed .. seed + sweep_seeds - 1
    int trace_stride = 1;  // keep every k-th trace step

    // Denoiser.
    std::string denoiser = "gaussian";  // gaussian | mixture | toy_attention
    std::string oracle_means = "0.0";   // comma-separated component means
    double oracle_stddev = 1.0;
    std::uint64_t toy_seed = 7;
    int grid_h = 8;
    int grid_w = 8;
    int token_dim = 8;
    int num_tokens_max = 16;

    // Conditions (comma-separated token ids).
    std::string source_tokens = "0";
    std::string target_tokens = "0";

    // Attention control.
    std::string control = "none";  // none | uac
    int tau_c = 0;
    int tau_s = 0;
    double a_src = 0.3;  // blend threshold, source side
    double a_tgt = 0.3;  // blend threshold, target side
    std::string align;   // "0:0,1:none,..."; empty = identity alignment
    std::string blend_src_tokens;  // empty disables that blend side
    std::string blend_tgt_tokens;

    // metrics-specific: the two latent files to compare, and the peak value
    // used by the signal-to-noise ratio.
    std::string input_a;
    std::string input_b;
    double psnr_max = 1.0;
};

// Reads a config file: one `key = value` per line, '#' starts a comment,
// blank lines ignored.  Throws std::runtime_error naming the offending line
// for unknown keys, duplicate keys, malformed lines, and unparsable values.
ExperimentConfig load_config(const std::string& path);

// List parsing for the string-valued config fields.  `context` names the
// field in error messages.
std::vector<double> parse_double_list(const std::string& text, const std::string& context);
std::vector<std::int64_t> parse_token_list(const std::string& text, const std::string& context);
Shape parse_shape(const std::string& text);

// Alignment syntax: comma-separated entries `tgt:src` or `tgt:none`, indices
// into the target/source token lists.  Unlisted target indices default to
// none; with empty text every target index i maps to source index i.
AlignmentMap parse_alignment(const std::string& text, std::size_t num_target_tokens,
                                                          std::size_t num_source_tokens);

}  // namespace infedit::cli
