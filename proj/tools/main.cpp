#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cli/commands.hpp"
#include "cli/config.hpp"

namespace {

// One subcommand's argument storage.  Options bind to member addresses, so
// instances must stay put for the parse; they live as locals in main.
struct SubArgs {
    CLI::App* sub = nullptr;
    std::string config;
    std::uint64_t seed = 0;
    std::string out;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* out_opt = nullptr;
};

void setup_sub(CLI::App& app, SubArgs& args, const std::string& name, const std::string& desc,
               const std::string& footer) {
    args.sub = app.add_subcommand(name, desc);
    args.sub->add_option("--config", args.config, "Path to the key = value experiment config")
        ->required()
        ->check(CLI::ExistingFile);
    args.seed_opt = args.sub->add_option("--seed", args.seed, "Override the config's seed");
    args.out_opt =
        args.sub->add_option("--out", args.out, "Override the config's out_dir (created if missing)");
    args.sub->footer(footer);
}

constexpr const char* kTopFooter = R"(Config format: flat text, one `key = value` per line; '#' starts a comment.
Unknown and duplicate keys are rejected.  Common keys (defaults in parens):

  schedule        variance-schedule family; only "linear" exists (linear)
  total_steps     schedule length T >= 1 (1000)
  beta_start      first noise increment, in (0,1) (1e-4)
  beta_end        last noise increment, in (0,1) (0.02)
  steps           denoiser evaluations per run; visited timesteps are evenly
                  spaced (rounded down) and start exactly at total_steps (50)
  seed            base RNG seed (0); --seed overrides
  out_dir         output directory (.); --out overrides
  shape           synthetic input dims, e.g. 4x8x8 (1x8x8)
  input           random | constant | file (random)
  input_value     fill value when input = constant (0)
  input_latent    latent file path when input = file
  denoiser        gaussian | mixture | toy_attention (gaussian)
  oracle_means    comma-separated component means ("0.0"); gaussian takes
                  exactly one, mixture one per component (conditions select
                  components by their first token id)
  oracle_stddev   component spread s >= 0 (1)
  toy_seed        weight seed of the toy attention denoiser (7)
  grid_h, grid_w  toy denoiser grid (8, 8); shape numel must equal their
                  product
  token_dim       toy embedding width (8)
  num_tokens_max  toy vocabulary bound (16)
  source_tokens   comma-separated source token ids ("0")
  target_tokens   comma-separated target token ids ("0")

Command-specific keys are listed in each subcommand's --help.

Latent files (.dlt): magic "DLT1", one version byte = 1, one dtype byte = 1
(float64 little-endian), one ndim byte, ndim x uint32 dims (little-endian),
then the row-major float64 payload.  read(write(z)) is bitwise exact.

Determinism: identical config + seed produce bitwise identical latents,
CSV files, and JSON reports; nothing in any output depends on the clock.

Exit codes: 0 success; 1 config, I/O, or capability error; 2 reconstruction
error above tolerance.)";

constexpr const char* kReconstructFooter =
    R"(Reconstructs the input by exact re-noising (no inversion pass) and exits
with code 2 if the final max abs error exceeds 1e-9.

Additional config keys: sweep_seeds (run seeds seed .. seed+n-1 concurrently
and aggregate, default 1), trace_stride (record every k-th step plus the
last, default 1).

Writes into out_dir:
  input.dlt          reference input latent (single-run mode only)
  reconstructed.dlt  final reconstruction (single-run mode only)
  trace.csv          header "# schema: 1"; columns: step (1-based), timestep,
                     max_abs_error (|running reconstruction - input|)
  report.json        fields: schema (= 1), command ("reconstruct"),
                     total_steps, steps, tolerance, seed, shape,
                     max_abs_error, trace_stride, trace[] (objects with step,
                     timestep, max_abs_error), passed.  Sweep mode replaces
                     seed/shape/trace_stride/trace with sweep{base_seed,
                     count} and errors[] (objects with seed, max_abs_error);
                     no latent or CSV files are written then.)";

constexpr const char* kEditFooter =
    R"(Runs the dual-branch editing loop from source_tokens to target_tokens.

Additional config keys: control (none | uac, default none), tau_c, tau_s
(phase switches in [0, total_steps+1]: a phase is active at timesteps >= its
switch, so 0 = always and total_steps+1 = never), a_src, a_tgt (blend mask
thresholds in (0,1], default 0.3), align (comma-separated "tgt:src" or
"tgt:none" index pairs into the token lists; unlisted targets are none; empty
value = identity), blend_src_tokens / blend_tgt_tokens (column indices into
the respective token lists; both empty = blending off).

control = uac needs a denoiser with attention capture/injection
(toy_attention); oracles fail with a capability error naming the denoiser.

Writes into out_dir:
  source.dlt   source input latent
  edited.dlt   final edited latent
  steps.csv    header "# schema: 1"; columns: step (1-based), timestep,
               max_abs_z0_diff (|edited initial - source initial| after the
               step), max_abs_eps_diff (|target - source noise prediction|)
  report.json  fields: schema (= 1), command ("edit"), seed, denoiser,
               control, total_steps, steps, shape, source_tokens,
               target_tokens, uac{tau_c, tau_s, a_src, a_tgt} (uac only),
               final_max_abs_z0_diff, final_max_abs_eps_diff, edited_mean.)";

constexpr const char* kCompareFooter =
    R"(Reconstructs one input with (a) exact re-noising ("ddcm") and (b) an
explicit invert-then-resample reference ("ddim"), using an analytic oracle
denoiser (gaussian or mixture; toy_attention is rejected).

Writes into out_dir:
  samplers.csv  header "# schema: 1"; columns: strategy (ddcm | ddim), step
                (1-based), timestep, max_abs_error, mse — per-step error of
                the running initial-sample estimate against the input
Prints both strategies' final max abs errors to stdout.)";

constexpr const char* kMetricsFooter =
    R"(Compares two latent files.

Additional config keys: input_a, input_b (latent file paths, required),
psnr_max (peak signal value for the signal-to-noise ratio, default 1.0).

Writes metrics.json into out_dir and prints the same JSON to stdout; fields:
schema (= 1), command ("metrics"), input_a, input_b, shape, mse, psnr_max,
psnr (a number, or the string "inf" when the inputs are identical), ssim
(present only when both inputs are 2-D with both dims >= 8; mean local
similarity over non-overlapping 8x8 windows).)";

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "infedit - inversion-free latent editing workbench: exact re-noising\n"
        "reconstruction, dual-branch editing with attention control, sampler\n"
        "comparison, and latent metrics."};
    app.require_subcommand(1);
    app.footer(kTopFooter);

    SubArgs reconstruct_args;
    SubArgs edit_args;
    SubArgs compare_args;
    SubArgs metrics_args;
    setup_sub(app, reconstruct_args, "reconstruct",
              "Exact re-noising reconstruction of an input latent", kReconstructFooter);
    setup_sub(app, edit_args, "edit", "Dual-branch edit between two conditions", kEditFooter);
    setup_sub(app, compare_args, "compare-samplers",
              "Per-step reconstruction error of exact re-noising vs an explicit inversion",
              kCompareFooter);
    setup_sub(app, metrics_args, "metrics", "MSE / PSNR / SSIM between two latent files",
              kMetricsFooter);

    CLI11_PARSE(app, argc, argv);

    const SubArgs* chosen = nullptr;
    for (const SubArgs* args : {&reconstruct_args, &edit_args, &compare_args, &metrics_args}) {
        if (args->sub->parsed()) {
            chosen = args;
            break;
        }
    }

    try {
        infedit::cli::ExperimentConfig cfg = infedit::cli::load_config(chosen->config);
        if (chosen->seed_opt->count() > 0) {
            cfg.seed = chosen->seed;
        }
        if (chosen->out_opt->count() > 0) {
            cfg.out_dir = chosen->out;
        }
        if (chosen == &reconstruct_args) {
            return infedit::cli::cmd_reconstruct(cfg);
        }
        if (chosen == &edit_args) {
            return infedit::cli::cmd_edit(cfg);
        }
        if (chosen == &compare_args) {
            return infedit::cli::cmd_compare_samplers(cfg);
        }
        return infedit::cli::cmd_metrics(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
