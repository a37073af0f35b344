#include "cli/commands.hpp"

#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "infedit/ddim_reference.hpp"
#include "infedit/engine.hpp"
#include "infedit/inversion.hpp"
#include "infedit/latent_io.hpp"
#include "infedit/metrics.hpp"
#include "infedit/oracles.hpp"
#include "infedit/toy_attention.hpp"
#include "infedit/uac.hpp"

namespace infedit::cli {
namespace {

using json = nlohmann::ordered_json;

VarianceSchedule build_schedule(const ExperimentConfig& cfg) {
    // load_config already restricted the name; keep the check for configs
    // built in code.
    if (cfg.schedule != "linear") {
        throw std::runtime_error("schedule: unknown schedule '" + cfg.schedule + "'");
    }
    return make_linear_schedule(cfg.total_steps, cfg.beta_start, cfg.beta_end);
}

TimestepSequence build_taus(const ExperimentConfig& cfg) {
    if (cfg.steps > cfg.total_steps) {
        std::ostringstream msg;
        msg << "steps: " << cfg.steps << " exceeds total_steps = " << cfg.total_steps;
        throw std::runtime_error(msg.str());
    }
    return make_timesteps(cfg.total_steps, cfg.steps + 1);
}

std::unique_ptr<ConditionalDenoiser> build_denoiser(const ExperimentConfig& cfg,
                                                    const VarianceSchedule& schedule,
                                                    const Shape& shape) {
    if (cfg.denoiser == "gaussian") {
        const auto means = parse_double_list(cfg.oracle_means, "oracle_means");
        if (means.size() != 1) {
            throw std::runtime_error("oracle_means: the gaussian denoiser takes exactly one mean");
        }
        return gaussian_oracle(Latent::full(shape, means[0]), cfg.oracle_stddev, schedule);
    }
    if (cfg.denoiser == "mixture") {
        std::vector<GaussianComponent> components;
        for (const double mean : parse_double_list(cfg.oracle_means, "oracle_means")) {
            components.push_back({Latent::full(shape, mean), cfg.oracle_stddev});
        }
        return conditional_mixture_oracle(std::move(components), schedule);
    }
    if (cfg.denoiser == "toy_attention") {
        const std::size_t pixels =
            static_cast<std::size_t>(cfg.grid_h) * static_cast<std::size_t>(cfg.grid_w);
        if (shape_numel(shape) != pixels) {
            std::ostringstream msg;
            msg << "shape: toy_attention works on grid_h x grid_w = " << pixels
                << " values, but shape '" << cfg.shape << "' has " << shape_numel(shape);
            throw std::runtime_error(msg.str());
        }
        return std::make_unique<ToyAttentionDenoiser>(
            cfg.toy_seed, static_cast<std::size_t>(cfg.grid_h),
            static_cast<std::size_t>(cfg.grid_w), static_cast<std::size_t>(cfg.token_dim),
            static_cast<std::size_t>(cfg.num_tokens_max), schedule);
    }
    throw std::runtime_error("denoiser: unknown kind '" + cfg.denoiser + "'");
}

// The initial latent of an experiment.  For input = file the file's own shape
// wins (the shape key only describes synthetic inputs).
Latent build_input(const ExperimentConfig& cfg, const StreamFactory& rng) {
    if (cfg.input == "random") {
        auto stream = rng.stream("input");
        return stream.normal_latent(parse_shape(cfg.shape));
    }
    if (cfg.input == "constant") {
        return Latent::full(parse_shape(cfg.shape), cfg.input_value);
    }
    if (cfg.input == "file") {
        if (cfg.input_latent.empty()) {
            throw std::runtime_error("input_latent: required when input = file");
        }
        return read_latent(cfg.input_latent);
    }
    throw std::runtime_error("input: unknown kind '" + cfg.input + "'");
}

Condition build_condition(const std::string& text, const std::string& context) {
    return Condition(parse_token_list(text, context));
}

std::vector<std::size_t> parse_index_list(const std::string& text, const std::string& context,
                                          std::size_t bound) {
    std::vector<std::size_t> indices;
    for (const std::int64_t value : parse_token_list(text, context)) {
        if (value < 0 || static_cast<std::size_t>(value) >= bound) {
            std::ostringstream msg;
            msg << context << ": index " << value << " outside [0, " << bound << ")";
            throw std::runtime_error(msg.str());
        }
        indices.push_back(static_cast<std::size_t>(value));
    }
    return indices;
}

std::filesystem::path prepare_out_dir(const ExperimentConfig& cfg) {
    const std::filesystem::path dir = cfg.out_dir.empty() ? "." : cfg.out_dir;
    std::filesystem::create_directories(dir);
    return dir;
}

json shape_json(const Shape& shape) {
    json dims = json::array();
    for (const std::size_t d : shape) {
        dims.push_back(d);
    }
    return dims;
}

void write_json_report(const std::filesystem::path& path, const json& report) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("report '" + path.string() + "': cannot open for writing");
    }
    out << report.dump(2) << '\n';
    if (!out.good()) {
        throw std::runtime_error("report '" + path.string() + "': write error");
    }
}

std::ofstream open_csv(const std::filesystem::path& path, const std::string& columns) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("csv '" + path.string() + "': cannot open for writing");
    }
    out << "# schema: 1\n" << columns << '\n';
    out << std::setprecision(17);
    return out;
}

// Runs body(0..count-1), concurrently when several hardware threads exist.
// The first exception wins and is rethrown on the caller's thread.
void run_indexed(std::size_t count, const std::function<void(std::size_t)>& body) {
    const unsigned hw = std::thread::hardware_concurrency();
    const std::size_t workers = std::min<std::size_t>({count, hw == 0 ? 1 : hw, 8});
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            body(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    const auto loop = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) {
                return;
            }
            try {
                body(i);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) {
                    first_error = std::current_exception();
                }
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) {
        pool.emplace_back(loop);
    }
    loop();
    for (std::thread& t : pool) {
        t.join();
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
}

}  // namespace

int cmd_reconstruct(const ExperimentConfig& cfg) {
    const VarianceSchedule schedule = build_schedule(cfg);
    const TimestepSequence taus = build_taus(cfg);
    const std::filesystem::path out_dir = prepare_out_dir(cfg);

    // A file input is identical across sweep seeds; read it once.
    std::optional<Latent> file_input;
    if (cfg.input == "file") {
        file_input = build_input(cfg, StreamFactory(cfg.seed));
    }
    const auto make_input = [&](const StreamFactory& rng) {
        return file_input ? *file_input : build_input(cfg, rng);
    };

    json report;
    report["schema"] = 1;
    report["command"] = "reconstruct";
    report["total_steps"] = cfg.total_steps;
    report["steps"] = taus.taus.size();
    report["tolerance"] = kReconstructTolerance;

    double worst = 0.0;
    if (cfg.sweep_seeds == 1) {
        const StreamFactory rng(cfg.seed);
        const Latent z0 = make_input(rng);
        auto noise = rng.stream("inversion");
        const InversionResult result = virtual_invert(z0, taus, schedule, noise, cfg.trace_stride);
        worst = max_abs_diff(result.z, z0);

        write_latent((out_dir / "input.dlt").string(), z0);
        write_latent((out_dir / "reconstructed.dlt").string(), result.z);

        auto csv = open_csv(out_dir / "trace.csv", "step,timestep,max_abs_error");
        json trace = json::array();
        for (const InversionTraceStep& step : result.trace.steps) {
            const double err = max_abs_diff(step.z, z0);
            csv << step.step_index << ',' << step.timestep << ',' << err << '\n';
            trace.push_back(
                {{"step", step.step_index}, {"timestep", step.timestep}, {"max_abs_error", err}});
        }
        report["seed"] = cfg.seed;
        report["shape"] = shape_json(z0.shape);
        report["max_abs_error"] = worst;
        report["trace_stride"] = cfg.trace_stride;
        report["trace"] = std::move(trace);
    } else {
        const std::size_t count = static_cast<std::size_t>(cfg.sweep_seeds);
        std::vector<double> errors(count, 0.0);
        run_indexed(count, [&](std::size_t i) {
            const StreamFactory rng(cfg.seed + i);
            const Latent z0 = make_input(rng);
            auto noise = rng.stream("inversion");
            const InversionResult result =
                virtual_invert(z0, taus, schedule, noise, cfg.trace_stride);
            errors[i] = max_abs_diff(result.z, z0);
        });
        json per_seed = json::array();
        for (std::size_t i = 0; i < count; ++i) {
            worst = std::max(worst, errors[i]);
            per_seed.push_back({{"seed", cfg.seed + i}, {"max_abs_error", errors[i]}});
        }
        report["sweep"] = {{"base_seed", cfg.seed}, {"count", count}};
        report["max_abs_error"] = worst;
        report["errors"] = std::move(per_seed);
    }

    const bool passed = worst <= kReconstructTolerance;
    report["passed"] = passed;
    write_json_report(out_dir / "report.json", report);

    std::cout << std::setprecision(17) << "reconstruct: max abs error " << worst << " (tolerance "
              << kReconstructTolerance << ", " << (passed ? "ok" : "EXCEEDED") << ")\n";
    return passed ? kExitOk : kExitToleranceExceeded;
}

int cmd_edit(const ExperimentConfig& cfg) {
    const VarianceSchedule schedule = build_schedule(cfg);
    const TimestepSequence taus = build_taus(cfg);
    const std::filesystem::path out_dir = prepare_out_dir(cfg);

    const StreamFactory rng(cfg.seed);
    const Latent z0_src = build_input(cfg, rng);
    const auto denoiser = build_denoiser(cfg, schedule, z0_src.shape);
    const Condition c_src = build_condition(cfg.source_tokens, "source_tokens");
    const Condition c_tgt = build_condition(cfg.target_tokens, "target_tokens");

    std::unique_ptr<NoiseRefiner> refiner;
    if (cfg.control == "uac") {
        UacConfig uac;
        uac.control = ControlSchedule{cfg.tau_c, cfg.tau_s};
        uac.align = parse_alignment(cfg.align, c_tgt.size(), c_src.size());
        uac.blend.target_tokens = parse_index_list(cfg.blend_tgt_tokens, "blend_tgt_tokens",
                                                   c_tgt.size());
        uac.blend.source_tokens = parse_index_list(cfg.blend_src_tokens, "blend_src_tokens",
                                                   c_src.size());
        uac.blend.threshold_tgt = cfg.a_tgt;
        uac.blend.threshold_src = cfg.a_src;
        refiner = std::make_unique<UacRefiner>(std::move(uac));
    } else {
        refiner = std::make_unique<TrivialRefiner>();
    }

    const EditResult result =
        infedit_run(z0_src, c_src, c_tgt, *denoiser, taus, schedule, *refiner, rng);

    write_latent((out_dir / "source.dlt").string(), z0_src);
    write_latent((out_dir / "edited.dlt").string(), result.z0_tgt);

    auto csv = open_csv(out_dir / "steps.csv", "step,timestep,max_abs_z0_diff,max_abs_eps_diff");
    for (const EditStepStats& s : result.stats) {
        csv << s.step_index << ',' << s.timestep << ',' << s.max_abs_z0_diff << ','
            << s.max_abs_eps_diff << '\n';
    }

    json report;
    report["schema"] = 1;
    report["command"] = "edit";
    report["seed"] = cfg.seed;
    report["denoiser"] = denoiser->name();
    report["control"] = cfg.control;
    report["total_steps"] = cfg.total_steps;
    report["steps"] = taus.taus.size();
    report["shape"] = shape_json(z0_src.shape);
    report["source_tokens"] = json(c_src.tokens);
    report["target_tokens"] = json(c_tgt.tokens);
    if (cfg.control == "uac") {
        report["uac"] = {{"tau_c", cfg.tau_c},
                         {"tau_s", cfg.tau_s},
                         {"a_src", cfg.a_src},
                         {"a_tgt", cfg.a_tgt}};
    }
    report["final_max_abs_z0_diff"] = result.stats.back().max_abs_z0_diff;
    report["final_max_abs_eps_diff"] = result.stats.back().max_abs_eps_diff;
    report["edited_mean"] = mean_value(result.z0_tgt);
    write_json_report(out_dir / "report.json", report);

    std::cout << std::setprecision(17) << "edit: final max abs z0 deviation "
              << result.stats.back().max_abs_z0_diff << ", edited mean "
              << mean_value(result.z0_tgt) << '\n';
    return kExitOk;
}

int cmd_compare_samplers(const ExperimentConfig& cfg) {
    if (cfg.denoiser != "gaussian" && cfg.denoiser != "mixture") {
        throw std::runtime_error(
            "compare-samplers needs an analytic oracle denoiser (gaussian or mixture), got '" +
            cfg.denoiser + "'");
    }
    const VarianceSchedule schedule = build_schedule(cfg);
    const TimestepSequence taus = build_taus(cfg);
    const std::filesystem::path out_dir = prepare_out_dir(cfg);

    const StreamFactory rng(cfg.seed);
    const Latent z0 = build_input(cfg, rng);
    const auto denoiser = build_denoiser(cfg, schedule, z0.shape);
    const Condition cond = build_condition(cfg.source_tokens, "source_tokens");

    auto noise = rng.stream("inversion");
    const InversionResult ddcm = virtual_invert(z0, taus, schedule, noise, /*trace_stride=*/1);
    const DdimRoundTrip ddim = ddim_round_trip(z0, cond, *denoiser, taus, schedule);

    auto csv = open_csv(out_dir / "samplers.csv", "strategy,step,timestep,max_abs_error,mse");
    for (const InversionTraceStep& step : ddcm.trace.steps) {
        csv << "ddcm," << step.step_index << ',' << step.timestep << ','
            << max_abs_diff(step.z, z0) << ',' << mse(step.z, z0) << '\n';
    }
    for (const DdimTraceStep& step : ddim.down) {
        csv << "ddim," << step.step_index << ',' << step.timestep << ','
            << max_abs_diff(step.x0_pred, z0) << ',' << mse(step.x0_pred, z0) << '\n';
    }

    const double ddcm_final = max_abs_diff(ddcm.z, z0);
    const double ddim_final = max_abs_diff(ddim.z0_recovered, z0);
    std::cout << std::setprecision(17) << "compare-samplers: final max abs error ddcm "
              << ddcm_final << ", ddim " << ddim_final << '\n';
    return kExitOk;
}

int cmd_metrics(const ExperimentConfig& cfg) {
    if (cfg.input_a.empty() || cfg.input_b.empty()) {
        throw std::runtime_error("metrics needs both input_a and input_b");
    }
    const std::filesystem::path out_dir = prepare_out_dir(cfg);
    const Latent a = read_latent(cfg.input_a);
    const Latent b = read_latent(cfg.input_b);

    json report;
    report["schema"] = 1;
    report["command"] = "metrics";
    report["input_a"] = cfg.input_a;
    report["input_b"] = cfg.input_b;
    report["shape"] = shape_json(a.shape);
    report["mse"] = mse(a, b);
    const double p = psnr(a, b, cfg.psnr_max);
    report["psnr_max"] = cfg.psnr_max;
    if (std::isinf(p)) {
        report["psnr"] = "inf";
    } else {
        report["psnr"] = p;
    }
    const bool ssim_applicable =
        a.shape.size() == 2 && b.shape.size() == 2 && a.shape[0] >= 8 && a.shape[1] >= 8;
    if (ssim_applicable) {
        report["ssim"] = ssim(a, b);
    }

    write_json_report(out_dir / "metrics.json", report);
    std::cout << report.dump(2) << '\n';
    return kExitOk;
}

}  // namespace infedit::cli
