// Command-line surface over the sparselaw library: fitting, prediction,
// optimal-sparsity queries, contour/frontier export, sweep simulation and
// pruning demos. All numeric stdout is printed with 17 significant digits so
// pipelines are reproducible bit for bit.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sparselaw/sparselaw.hpp"

namespace sl = sparselaw;

namespace {

void print_value(double v) { std::printf("%.17g\n", v); }

std::uint64_t default_seed() {
  if (const char* env = std::getenv("SPARSELAW_SEED"))
    return std::strtoull(env, nullptr, 10);
  return 0;
}

sl::ScalingLawCoefficients load_coeffs_arg(const std::string& arg) {
  if (arg.rfind("builtin:", 0) == 0) {
    const std::string name = arg.substr(8);
    if (name == "t5-c4") return sl::presets::t5_c4();
    if (name == "vit-jft") return sl::presets::vit_jft();
    if (name == "t5-c4-nm") return sl::presets::t5_c4_nm();
    sl::raise(sl::errc::invalid_argument,
              "unknown builtin coefficient set '" + name +
                  "' (use t5-c4, vit-jft or t5-c4-nm)");
  }
  return sl::load_coefficients(arg);
}

std::string read_table_input(const std::string& path) {
  if (path == "-") {
    std::ostringstream buf;
    buf << std::cin.rdbuf();
    return buf.str();
  }
  return sl::read_file(path);
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-")
    std::cout << content;
  else
    sl::write_file(path, content);
}

sl::NmPattern parse_nm(const std::string& text) {
  const auto colon = text.find(':');
  sl::require(colon != std::string::npos, sl::errc::invalid_argument,
              "n:m pattern must look like '2:4'");
  sl::NmPattern p;
  p.n = std::atoi(text.substr(0, colon).c_str());
  p.m = std::atoi(text.substr(colon + 1).c_str());
  p.validate();
  return p;
}

std::vector<double> logspace(double lo, double hi, int points) {
  sl::require(lo > 0.0 && hi > lo && points >= 2, sl::errc::invalid_argument,
              "range must satisfy 0 < min < max with at least 2 points");
  std::vector<double> out(points);
  for (int i = 0; i < points; ++i)
    out[i] = lo * std::exp(std::log(hi / lo) * i / (points - 1));
  return out;
}

struct FitArgs {
  std::string table;
  std::string out;
  std::string residuals_path;
  std::string result_json_path;
  std::string config_path;
  std::string dense_coeffs;
  bool sparsity_only = false;
  bool log_loss = false;
  bool raw_loss = false;
  double delta = -1.0;
  int starts = -1;
  int max_iterations = -1;
  std::int64_t seed = -1;
};

int run_fit_command(const FitArgs& args, bool seed_given) {
  const sl::SweepDataset data =
      sl::parse_run_table_text(read_table_input(args.table));
  sl::FitConfig config;
  if (!args.config_path.empty()) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(sl::read_file(args.config_path));
    } catch (const nlohmann::json::exception& e) {
      sl::raise(sl::errc::invalid_argument,
                std::string("bad fit config JSON: ") + e.what());
    }
    config = sl::fit_config_from_json(doc);
  }
  if (args.delta > 0.0) config.huber_delta = args.delta;
  if (args.log_loss) config.log_loss = true;
  if (args.raw_loss) config.log_loss = false;
  if (args.starts > 0) config.num_starts = args.starts;
  if (args.max_iterations > 0) config.max_iterations = args.max_iterations;
  config.seed = seed_given ? static_cast<std::uint64_t>(args.seed)
                           : default_seed();

  sl::FitResult result;
  if (args.sparsity_only) {
    sl::require(!args.dense_coeffs.empty(), sl::errc::invalid_argument,
                "--sparsity-only needs --dense-coeffs");
    result = sl::fit_sparsity_only(data, load_coeffs_arg(args.dense_coeffs),
                                   config);
  } else {
    result = sl::fit_full(data, config);
  }

  write_output(args.out, sl::coefficients_to_json(result.coefficients).dump(2) + "\n");
  if (!args.residuals_path.empty())
    sl::write_file(args.residuals_path,
                   sl::write_residuals_csv(data, result.residuals));
  if (!args.result_json_path.empty())
    sl::write_file(args.result_json_path,
                   sl::fit_result_to_json(result).dump(2) + "\n");
  if (!result.converged)
    std::cerr << "{\"warning\":\"non-convergence\",\"message\":\"no start met "
                 "the termination tolerance\"}\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scaling laws for weight-sparse transformer training"};
  app.require_subcommand(1);

  // --- fit ------------------------------------------------------------
  FitArgs fit_args;
  auto* fit = app.add_subcommand("fit", "fit law coefficients to a run table");
  fit->add_option("--table", fit_args.table,
                  "run table CSV/JSON path, '-' for stdin")
      ->required();
  fit->add_option("--out", fit_args.out, "coefficients JSON path (default stdout)");
  fit->add_option("--residuals", fit_args.residuals_path, "residuals CSV path");
  fit->add_option("--result-json", fit_args.result_json_path,
                  "full fit result JSON path");
  fit->add_option("--config", fit_args.config_path, "fit config JSON path");
  fit->add_option("--delta", fit_args.delta, "huber delta");
  auto* log_flag = fit->add_flag("--log-loss", fit_args.log_loss,
                                 "fit on log of loss (default)");
  auto* raw_flag =
      fit->add_flag("--raw-loss", fit_args.raw_loss, "fit on raw loss");
  log_flag->excludes(raw_flag);
  fit->add_option("--starts", fit_args.starts, "number of random starts");
  fit->add_option("--max-iter", fit_args.max_iterations,
                  "optimizer iteration cap");
  auto* fit_seed = fit->add_option("--seed", fit_args.seed, "random-start seed");
  fit->add_flag("--sparsity-only", fit_args.sparsity_only,
                "fit only a_S, b_S, c_S against frozen dense terms");
  fit->add_option("--dense-coeffs", fit_args.dense_coeffs,
                  "dense coefficients (path or builtin:NAME) for --sparsity-only");

  // --- predict ----------------------------------------------------------
  std::string coeffs_arg;
  double arg_sparsity = 0.0, arg_params = 0.0, arg_data = 0.0;
  auto* predict = app.add_subcommand("predict", "evaluate the law at (S, N, D)");
  predict->add_option("--coeffs", coeffs_arg, "coefficients path or builtin:NAME")
      ->required();
  predict->add_option("--sparsity", arg_sparsity, "sparsity in [0,1)")->required();
  predict->add_option("--nonzero-params", arg_params, "non-zero parameter count")
      ->required();
  predict->add_option("--data", arg_data, "training data amount")->required();

  // --- gain -------------------------------------------------------------
  auto* gain_cmd = app.add_subcommand("gain", "equivalent dense size multiplier");
  gain_cmd->add_option("--coeffs", coeffs_arg, "coefficients path or builtin:NAME")
      ->required();
  gain_cmd->add_option("--sparsity", arg_sparsity, "sparsity in [0,1)")->required();

  // --- cmul -------------------------------------------------------------
  double cmul_start = 0.25, cmul_end = 0.75;
  int cmul_exponent = 3;
  auto* cmul_cmd = app.add_subcommand("cmul", "sparse training-cost multiplier");
  cmul_cmd->add_option("--sparsity", arg_sparsity, "sparsity in [0,1)")->required();
  cmul_cmd->add_option("--schedule-start", cmul_start, "pruning window start");
  cmul_cmd->add_option("--schedule-end", cmul_end, "pruning window end");
  cmul_cmd->add_option("--cubic-exponent", cmul_exponent, "schedule exponent");

  // --- optimal-sparsity ---------------------------------------------------
  std::string method = "closed", cost_mode = "dense";
  double arg_compute = 0.0, flops_per = 6.0;
  auto* opt_cmd = app.add_subcommand(
      "optimal-sparsity", "sparsity minimizing loss at fixed N and compute");
  opt_cmd->add_option("--coeffs", coeffs_arg, "coefficients path or builtin:NAME")
      ->required();
  opt_cmd->add_option("--nonzero-params", arg_params, "non-zero parameter count")
      ->required();
  opt_cmd->add_option("--compute", arg_compute, "training FLOP budget")->required();
  opt_cmd->add_option("--method", method, "closed | numeric")
      ->check(CLI::IsMember({"closed", "numeric"}));
  opt_cmd->add_option("--cost-mode", cost_mode, "dense | sparse")
      ->check(CLI::IsMember({"dense", "sparse"}));
  opt_cmd->add_option("--flops-per-param-datum", flops_per,
                      "FLOPs per parameter and datum (6, or 3 for enc-dec)");

  // --- contour ------------------------------------------------------------
  std::vector<double> contour_sparsities;
  double n_min = 1e6, n_max = 1e9;
  int points = 16;
  std::string out_path, svg_path;
  auto* contour_cmd =
      app.add_subcommand("contour", "iso-sparsity contours over a size range");
  contour_cmd->add_option("--coeffs", coeffs_arg, "coefficients path or builtin:NAME")
      ->required();
  contour_cmd
      ->add_option("--sparsity", contour_sparsities,
                   "sparsity level(s), e.g. --sparsity 0.5 0.75")
      ->required()
      ->delimiter(',');
  contour_cmd->add_option("--n-min", n_min, "smallest size");
  contour_cmd->add_option("--n-max", n_max, "largest size");
  contour_cmd->add_option("--points", points, "sizes per contour");
  contour_cmd->add_option("--cost-mode", cost_mode, "dense | sparse")
      ->check(CLI::IsMember({"dense", "sparse"}));
  contour_cmd->add_option("--flops-per-param-datum", flops_per,
                          "FLOPs per parameter and datum");
  contour_cmd->add_option("--out", out_path, "contour CSV path (default stdout)");
  contour_cmd->add_option("--svg", svg_path, "also emit a log-log SVG plot");

  // --- chinchilla -----------------------------------------------------------
  double compute_min = 0.0, compute_max = 0.0;
  auto* chin_cmd = app.add_subcommand(
      "chinchilla", "dense compute-optimal allocation (N, D) for a budget");
  chin_cmd->add_option("--coeffs", coeffs_arg, "coefficients path or builtin:NAME")
      ->required();
  auto* chin_c = chin_cmd->add_option("--compute", arg_compute,
                                      "single training FLOP budget");
  chin_cmd->add_option("--compute-min", compute_min, "frontier range start");
  chin_cmd->add_option("--compute-max", compute_max, "frontier range end");
  chin_cmd->add_option("--points", points, "frontier samples");
  chin_cmd->add_option("--flops-per-param-datum", flops_per,
                       "FLOPs per parameter and datum");
  chin_cmd->add_option("--out", out_path, "frontier CSV path (default stdout)");

  // --- simulate ---------------------------------------------------------
  std::string preset = "t5";
  double noise = 0.0;
  bool reduced = false;
  std::int64_t sim_seed = -1;
  auto* sim_cmd = app.add_subcommand(
      "simulate", "generate a synthetic sweep run table from a law");
  sim_cmd->add_option("--preset", preset, "grid preset: vit | t5")
      ->check(CLI::IsMember({"vit", "t5"}));
  sim_cmd->add_option("--coeffs", coeffs_arg,
                      "truth coefficients (default: builtin for the preset)");
  sim_cmd->add_option("--noise", noise, "log-normal noise sigma");
  auto* sim_seed_opt = sim_cmd->add_option("--seed", sim_seed, "noise seed");
  sim_cmd->add_flag("--reduced", reduced,
                    "only smallest-model and fewest-step runs");
  sim_cmd->add_option("--sparsities", contour_sparsities,
                      "override sparsity levels")
      ->delimiter(',');
  std::string sim_pattern;
  bool sim_json = false;
  sim_cmd->add_option("--pattern", sim_pattern, "record pattern label");
  sim_cmd->add_flag("--json", sim_json, "emit a JSON array instead of CSV");
  sim_cmd->add_option("--out", out_path, "run table path (default stdout)");

  // --- prune ----------------------------------------------------------
  std::string input_path, nm_text;
  auto* prune_cmd = app.add_subcommand(
      "prune", "magnitude-prune a binary tensor to a target sparsity");
  prune_cmd->add_option("--input", input_path, "masked-tensor binary path")
      ->required();
  prune_cmd->add_option("--out", out_path, "output masked-tensor path")
      ->required();
  prune_cmd->add_option("--sparsity", arg_sparsity, "target sparsity")->required();
  prune_cmd->add_option("--nm", nm_text, "structured pattern, e.g. 2:4");

  // --- train-toy -----------------------------------------------------------
  int dim = 64, samples = 128, steps = 1000, update_every = 100;
  double final_sparsity = 0.75, start_frac = 0.25, end_frac = 0.75;
  double base_lr = 0.002, rms_epsilon = 1e-8, rms_clip = 1.0;
  std::string trace_path, weights_path;
  std::int64_t toy_seed = -1;
  auto* toy_cmd = app.add_subcommand(
      "train-toy", "gradient descent with gradual pruning on a convex problem");
  toy_cmd->add_option("--dim", dim, "weight dimension");
  toy_cmd->add_option("--samples", samples, "regression sample count");
  toy_cmd->add_option("--steps", steps, "training steps");
  toy_cmd->add_option("--final-sparsity", final_sparsity, "schedule target");
  toy_cmd->add_option("--start-frac", start_frac, "pruning window start");
  toy_cmd->add_option("--end-frac", end_frac, "pruning window end");
  toy_cmd->add_option("--update-every", update_every, "steps between masks");
  toy_cmd->add_option("--base-lr", base_lr, "relative learning rate base");
  toy_cmd->add_option("--rms-epsilon", rms_epsilon, "relative LR floor");
  toy_cmd->add_option("--rms-clip", rms_clip, "update RMS clip (0 disables)");
  toy_cmd->add_option("--nm", nm_text, "structured pattern, e.g. 2:4");
  auto* toy_seed_opt = toy_cmd->add_option("--seed", toy_seed, "problem seed");
  toy_cmd->add_option("--trace", trace_path, "trace CSV path (default stdout)");
  toy_cmd->add_option("--save-weights", weights_path,
                      "save final weights as a masked-tensor binary");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    nlohmann::json err = {{"error", "usage"}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 2;
  }

  try {
    if (*fit) return run_fit_command(fit_args, fit_seed->count() > 0);
    if (*predict) {
      const auto k = load_coeffs_arg(coeffs_arg);
      print_value(sl::eval_law(k, arg_sparsity, arg_params, arg_data));
      return 0;
    }
    if (*gain_cmd) {
      const auto k = load_coeffs_arg(coeffs_arg);
      print_value(sl::gain(k, arg_sparsity));
      return 0;
    }
    if (*cmul_cmd) {
      print_value(sl::schedule_cost_multiplier(arg_sparsity, cmul_start,
                                               cmul_end, cmul_exponent));
      return 0;
    }
    if (*opt_cmd) {
      const auto k = load_coeffs_arg(coeffs_arg);
      sl::CostModel model;
      model.flops_per_param_datum = flops_per;
      model.cost_mode = sl::parse_cost_mode(cost_mode);
      const double s =
          method == "closed"
              ? sl::optimal_sparsity_closed(k, model, arg_params, arg_compute)
              : sl::optimal_sparsity_numeric(k, model, arg_params, arg_compute);
      print_value(s);
      return 0;
    }
    if (*contour_cmd) {
      const auto k = load_coeffs_arg(coeffs_arg);
      sl::CostModel model;
      model.flops_per_param_datum = flops_per;
      model.cost_mode = sl::parse_cost_mode(cost_mode);
      const std::vector<double> sizes = logspace(n_min, n_max, points);

      std::vector<std::vector<sl::ContourPoint>> series;
      std::vector<sl::PlotSeries> plot_series;
      for (double s : contour_sparsities) {
        auto pts = sl::sparsity_contour(k, model, s, sizes);
        plot_series.push_back({"S=" + sl::format_g17(s).substr(0, 5), pts});
        series.push_back(std::move(pts));
      }
      write_output(out_path, sl::write_contour_csv(series));
      if (!svg_path.empty()) {
        double c_lo = 1e300, c_hi = 0.0;
        for (const auto& pts : series) {
          for (const auto& p : pts) {
            c_lo = std::min(c_lo, p.compute);
            c_hi = std::max(c_hi, p.compute);
          }
        }
        const auto frontier = sl::chinchilla_frontier(
            k, model, logspace(c_lo, c_hi, points));
        sl::emit_contour_plot(plot_series, {"chinchilla", frontier}, svg_path);
      }
      return 0;
    }
    if (*chin_cmd) {
      const auto k = load_coeffs_arg(coeffs_arg);
      sl::CostModel model;
      model.flops_per_param_datum = flops_per;
      if (chin_c->count() > 0) {
        const auto opt = sl::chinchilla_optimal(k, model, arg_compute);
        std::printf("%.17g %.17g\n", opt.nonzero_params, opt.data);
        return 0;
      }
      sl::require(compute_min > 0.0 && compute_max > compute_min,
                  sl::errc::invalid_argument,
                  "need --compute or --compute-min/--compute-max");
      const auto frontier = sl::chinchilla_frontier(
          k, model, logspace(compute_min, compute_max, points));
      const std::vector<std::vector<sl::ContourPoint>> series = {frontier};
      write_output(out_path, sl::write_contour_csv(series));
      return 0;
    }
    if (*sim_cmd) {
      sl::ScalingLawCoefficients truth =
          coeffs_arg.empty()
              ? (preset == "vit" ? sl::presets::vit_jft() : sl::presets::t5_c4())
              : load_coeffs_arg(coeffs_arg);
      sl::SweepGrid grid =
          preset == "vit" ? sl::presets::vit_grid() : sl::presets::t5_grid();
      if (!contour_sparsities.empty()) grid.sparsity_levels = contour_sparsities;
      if (!sim_pattern.empty()) grid.pattern = sim_pattern;
      const std::uint64_t seed = sim_seed_opt->count() > 0
                                     ? static_cast<std::uint64_t>(sim_seed)
                                     : default_seed();
      sl::SweepDataset data = sl::simulate_sweep(truth, grid, noise, seed);
      if (reduced) data = sl::reduced_sweep(data);
      write_output(out_path, sim_json ? sl::run_table_to_json(data).dump(2) + "\n"
                                      : sl::write_run_table_csv(data));
      return 0;
    }
    if (*prune_cmd) {
      sl::MaskedTensor t = sl::load_masked_tensor(input_path);
      if (!nm_text.empty()) t.group = parse_nm(nm_text);
      t.mask = t.group ? sl::nm_gradual_mask(t.values, *t.group, arg_sparsity)
                       : sl::gmp_mask(t.values, arg_sparsity);
      t = sl::apply_mask(std::move(t));
      sl::save_masked_tensor(out_path, t);
      print_value(sl::mask_sparsity(t.mask));
      return 0;
    }
    if (*toy_cmd) {
      const std::uint64_t seed = toy_seed_opt->count() > 0
                                     ? static_cast<std::uint64_t>(toy_seed)
                                     : default_seed();
      const auto problem = sl::make_regression(samples, dim, seed);
      sl::PruneSchedule sched;
      sched.start_frac = start_frac;
      sched.end_frac = end_frac;
      sched.update_every = update_every;
      sched.final_sparsity = final_sparsity;
      sl::ToyOptimizer opt;
      opt.steps = steps;
      opt.base_lr = base_lr;
      opt.rms_epsilon = rms_epsilon;
      opt.rms_clip = rms_clip;
      std::optional<sl::NmPattern> pattern;
      if (!nm_text.empty()) pattern = parse_nm(nm_text);

      const auto trace = sl::toy_train(problem, sched, opt, pattern);
      write_output(trace_path, sl::write_trace_csv(trace));
      if (!weights_path.empty()) {
        sl::MaskedTensor final_weights;
        final_weights.values = trace.final_weights;
        final_weights.mask = trace.masks.back();
        final_weights.group = pattern;
        sl::save_masked_tensor(weights_path, final_weights);
      }
      return 0;
    }
  } catch (const sl::error& e) {
    nlohmann::json err = {{"error", e.code_name()}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    nlohmann::json err = {{"error", "internal"}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 3;
  }
  return 0;
}
