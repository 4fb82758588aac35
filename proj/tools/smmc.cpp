#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "smmc/bounds.hpp"
#include "smmc/channel.hpp"
#include "smmc/config_io.hpp"
#include "smmc/csv.hpp"
#include "smmc/optimizer.hpp"
#include "smmc/reproduce.hpp"
#include "smmc/simulator.hpp"

namespace {

using nlohmann::json;

json config_to_json(const smmc::SystemConfig& cfg) {
  return json{
      {"bandwidth_hz", cfg.bandwidth()},
      {"tx_power_w", cfg.tx_power()},
      {"noise_power_w", cfg.noise_power()},
      {"path_loss_exponent", cfg.path_loss_exponent()},
      {"slot_duration_s", cfg.slot_duration()},
      {"coverage_radius_m", cfg.coverage_radius()},
      {"file_size_bits", cfg.file_size()},
      {"arrival_rate_per_slot", cfg.arrival_rate()},
  };
}

json plan_to_json(const smmc::RatePlan& plan) {
  return json{{"r_uc", plan.r_uc}, {"r_mc", plan.r_mc}, {"t_set", plan.t_set}};
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << content;
  if (!out.flush()) throw std::runtime_error("failed to write '" + path.string() + "'");
}

void write_run_manifest(const std::filesystem::path& dir, json manifest) {
  write_text_file(dir / "run.json", manifest.dump(2) + "\n");
}

std::string plan_file_text(const smmc::RatePlan& plan) {
  // Bare numbers are SI base units, so this file round-trips through the
  // plan loader: rates in bits/s, the window in slots.
  return "# delivery plan\nr_uc = " + smmc::csv_double(plan.r_uc) +
         "\nr_mc = " + smmc::csv_double(plan.r_mc) +
         "\nt_set = " + std::to_string(plan.t_set) + "\n";
}

smmc::DeliveryMode parse_mode(const std::string& name) {
  if (name == "smmc") return smmc::DeliveryMode::smmc;
  if (name == "ft" || name == "finetuned" || name == "smmc_finetuned") {
    return smmc::DeliveryMode::finetuned;
  }
  if (name == "unicast") return smmc::DeliveryMode::unicast;
  throw std::invalid_argument("unknown mode '" + name + "' (expected smmc, ft, or unicast)");
}

struct OptimizeArgs {
  std::string config_path;
  double lambda_override = -1.0;
  double delta = 1e-8;
  bool full_scan = false;
  std::string out_dir;
};

int run_optimize(const OptimizeArgs& args) {
  smmc::SystemConfig cfg = smmc::load_config(args.config_path);
  if (args.lambda_override >= 0.0) {
    cfg = smmc::with_arrival_rate(cfg, args.lambda_override);
  }
  const smmc::OptimizationResult result =
      smmc::joint_optimize(cfg, args.delta, args.full_scan);

  if (!args.out_dir.empty()) {
    const std::filesystem::path dir(args.out_dir);
    std::filesystem::create_directories(dir);
    smmc::CsvWriter trace(dir / "trace.csv", {"t_set", "r_mc", "t_avg_ub"});
    for (const smmc::TraceRow& row : result.trace) {
      trace.row({smmc::csv_int(row.t_set), smmc::csv_double(row.r_mc),
                 smmc::csv_double(row.t_avg)});
    }
    trace.close();
    write_text_file(dir / "plan.txt", plan_file_text(result.plan));
    write_run_manifest(dir, json{{"command", "optimize"},
                                 {"config", config_to_json(cfg)},
                                 {"delta", args.delta},
                                 {"full_scan", args.full_scan},
                                 {"plan", plan_to_json(result.plan)}});
  }

  const json output{{"plan", plan_to_json(result.plan)},
                    {"t_avg_upper", result.objective},
                    {"k_max", result.k_max},
                    {"trace_points", result.trace.size()}};
  std::cout << output.dump(2) << "\n";
  return 0;
}

struct BoundsArgs {
  std::string config_path;
  double r_uc = 0.0;
  double r_mc = 0.0;
  std::int64_t t_set = 0;
  int k = 0;
  double delta = 1e-8;
};

int run_bounds(const BoundsArgs& args) {
  const smmc::SystemConfig cfg = smmc::load_config(args.config_path);
  const smmc::RatePlan plan{args.r_uc, args.r_mc, args.t_set};
  int k = args.k;
  if (k <= 0) {
    // Default to the most likely group size for this window and load.
    const double mu = static_cast<double>(plan.t_set) * cfg.arrival_rate();
    k = static_cast<int>(std::floor(mu)) + 1;
  }
  const smmc::BoundsReport report = smmc::make_bounds_report(k, plan, cfg, args.delta);
  const json output{{"plan", plan_to_json(plan)},
                    {"k", report.k},
                    {"mc_outage_upper", report.mc_outage_upper},
                    {"mc_outage_lower", report.mc_outage_lower},
                    {"smin_upper", report.smin_upper},
                    {"smin_lower", report.smin_lower},
                    {"tau_upper", report.tau_upper},
                    {"tau_lower", report.tau_lower},
                    {"t_avg_upper", report.t_avg_upper},
                    {"k_max", report.k_max}};
  std::cout << output.dump(2) << "\n";
  return 0;
}

struct SimulateArgs {
  std::string config_path;
  std::string plan_path;
  double r_uc = 0.0;
  double r_mc = 0.0;
  std::int64_t t_set = 0;
  std::string mode = "smmc";
  std::int64_t episodes = 1000;
  std::uint64_t seed = 1;
  std::string out_dir;
};

int run_simulate(const SimulateArgs& args) {
  const smmc::SystemConfig cfg = smmc::load_config(args.config_path);
  const smmc::DeliveryMode mode = parse_mode(args.mode);
  smmc::RatePlan plan;
  if (!args.plan_path.empty()) {
    plan = smmc::load_plan(args.plan_path);
  } else {
    plan = smmc::RatePlan{args.r_uc, args.r_mc, args.t_set};
    if (!(plan.r_uc > 0)) {
      throw std::invalid_argument("--r-uc (or --plan) is required");
    }
    if (mode != smmc::DeliveryMode::unicast && !(plan.r_mc > 0)) {
      throw std::invalid_argument("--r-mc (or --plan) is required for merged modes");
    }
  }

  const std::vector<smmc::EpisodeResult> results =
      smmc::run_episodes(mode, plan, cfg, args.episodes, args.seed);
  const smmc::MonteCarloSummary summary = smmc::summarize(mode, results);

  if (!args.out_dir.empty()) {
    const std::filesystem::path dir(args.out_dir);
    std::filesystem::create_directories(dir);

    smmc::CsvWriter episodes_csv(dir / "episodes.csv",
                                 {"episode", "k", "s_min", "s_last", "setup_slots", "mc_slots",
                                  "mc_rate", "mean_delivery"});
    for (std::size_t i = 0; i < results.size(); ++i) {
      const smmc::EpisodeResult& r = results[i];
      episodes_csv.row({smmc::csv_int(static_cast<std::int64_t>(i)),
                        smmc::csv_int(r.group_size), smmc::csv_double(r.s_min),
                        smmc::csv_double(r.s_last), smmc::csv_int(r.setup_slots),
                        smmc::csv_int(r.mc_slots), smmc::csv_double(r.mc_rate),
                        smmc::csv_double(r.mean_delivery)});
    }
    episodes_csv.close();

    smmc::CsvWriter summary_csv(dir / "summary.csv",
                                {"episodes", "mode", "mean_delivery", "std_delivery",
                                 "ci95_half_width", "mean_smin", "mean_slast"});
    summary_csv.row({smmc::csv_int(summary.episodes), smmc::to_string(summary.mode),
                     smmc::csv_double(summary.mean_delivery),
                     smmc::csv_double(summary.std_delivery),
                     smmc::csv_double(summary.ci95_half_width),
                     smmc::csv_double(summary.mean_smin),
                     smmc::csv_double(summary.mean_slast)});
    summary_csv.close();

    smmc::CsvWriter k_csv(dir / "k_dist.csv", {"k", "probability", "count", "mean_delivery"});
    for (const auto& [k, bin] : summary.by_k) {
      k_csv.row({smmc::csv_int(k), smmc::csv_double(summary.k_probability.at(k)),
                 smmc::csv_int(bin.count), smmc::csv_double(bin.mean_delivery)});
    }
    k_csv.close();

    write_run_manifest(dir, json{{"command", "simulate"},
                                 {"config", config_to_json(cfg)},
                                 {"plan", plan_to_json(plan)},
                                 {"mode", smmc::to_string(mode)},
                                 {"episodes", args.episodes},
                                 {"seed", args.seed}});
  }

  const json output{{"mode", smmc::to_string(mode)},
                    {"episodes", summary.episodes},
                    {"mean_delivery", summary.mean_delivery},
                    {"std_delivery", summary.std_delivery},
                    {"ci95_half_width", summary.ci95_half_width},
                    {"mean_smin", summary.mean_smin},
                    {"mean_slast", summary.mean_slast}};
  std::cout << output.dump(2) << "\n";
  return 0;
}

struct ReproduceArgs {
  std::string figure;
  std::string config_path;
  std::int64_t episodes = 0;  // 0 picks the per-figure default
  std::uint64_t seed = 1;
  std::string out_dir;
};

int run_reproduce(const ReproduceArgs& args) {
  const smmc::SystemConfig cfg = smmc::load_config(args.config_path);
  const std::filesystem::path dir(args.out_dir);
  std::filesystem::create_directories(dir);

  std::int64_t episodes = args.episodes;
  if (args.figure == "fig3") {
    if (episodes <= 0) episodes = 1000;
    const auto rows = smmc::run_cache_study(cfg, episodes, args.seed);
    smmc::CsvWriter csv(dir / "fig3.csv", {"lambda", "r_uc", "mean_smin", "mean_slast"});
    for (const auto& row : rows) {
      csv.row({smmc::csv_double(row.arrival_rate), smmc::csv_double(row.r_uc),
               smmc::csv_double(row.mean_smin), smmc::csv_double(row.mean_slast)});
    }
    csv.close();
  } else if (args.figure == "fig4") {
    if (episodes <= 0) episodes = 500;
    const auto rows = smmc::run_bound_sandwich(cfg, episodes, args.seed);
    smmc::CsvWriter csv(dir / "fig4.csv",
                        {"r_mc", "t_avg_ub", "t_avg_lb", "sim_mean", "sim_ci"});
    for (const auto& row : rows) {
      csv.row({smmc::csv_double(row.r_mc), smmc::csv_double(row.t_avg_ub),
               smmc::csv_double(row.t_avg_lb), smmc::csv_double(row.sim_mean),
               smmc::csv_double(row.sim_ci)});
    }
    csv.close();
  } else if (args.figure == "fig5") {
    const auto rows = smmc::run_window_scan(cfg);
    smmc::CsvWriter csv(dir / "fig5.csv", {"lambda", "t_set", "r_mc_opt", "t_avg_ub"});
    for (const auto& row : rows) {
      csv.row({smmc::csv_double(row.arrival_rate), smmc::csv_int(row.t_set),
               smmc::csv_double(row.r_mc_opt), smmc::csv_double(row.t_avg_ub)});
    }
    csv.close();
    episodes = 0;
  } else if (args.figure == "fig6") {
    if (episodes <= 0) episodes = 10000;
    const auto rows = smmc::run_group_size_study(cfg, episodes, args.seed);
    smmc::CsvWriter csv(dir / "fig6.csv",
                        {"k", "prob_k", "t_unicast", "t_smmc", "t_ft_smmc"});
    for (const auto& row : rows) {
      csv.row({smmc::csv_int(row.k), smmc::csv_double(row.probability),
               smmc::csv_double(row.unicast_mean), smmc::csv_double(row.plain_mean),
               smmc::csv_double(row.finetuned_mean)});
    }
    csv.close();
  } else {
    throw std::invalid_argument("unknown figure '" + args.figure +
                                "' (expected fig3, fig4, fig5, or fig6)");
  }

  write_run_manifest(dir, json{{"command", "reproduce"},
                               {"figure", args.figure},
                               {"config", config_to_json(cfg)},
                               {"episodes", episodes},
                               {"seed", args.seed}});
  std::cout << json{{"figure", args.figure}, {"out", args.out_dir}}.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"delivery-time bounds, rate planning, and slot-level simulation "
               "for set-up based merged multicast"};
  app.require_subcommand(1);

  OptimizeArgs optimize_args;
  CLI::App* optimize = app.add_subcommand("optimize", "find the best rate plan for a config");
  optimize->add_option("--config", optimize_args.config_path, "system config file")
      ->required();
  optimize->add_option("--lambda", optimize_args.lambda_override,
                       "override the arrival rate (requests per slot)");
  optimize->add_option("--delta", optimize_args.delta,
                       "group-size tail mass dropped from the mixture");
  optimize->add_flag("--full-scan", optimize_args.full_scan,
                     "evaluate every window instead of coarse-plus-refine");
  optimize->add_option("--out", optimize_args.out_dir,
                       "directory for trace.csv, plan.txt, run.json");

  BoundsArgs bounds_args;
  CLI::App* bounds = app.add_subcommand("bounds", "closed-form bounds for a given plan");
  bounds->add_option("--config", bounds_args.config_path, "system config file")->required();
  bounds->add_option("--r-uc", bounds_args.r_uc, "unicast rate, bits/s")->required();
  bounds->add_option("--r-mc", bounds_args.r_mc, "multicast rate, bits/s")->required();
  bounds->add_option("--t-set", bounds_args.t_set, "set-up window, slots")->required();
  bounds->add_option("--k", bounds_args.k,
                     "group size for the per-k bounds (default: most likely size)");
  bounds->add_option("--delta", bounds_args.delta,
                     "group-size tail mass dropped from the mixture");

  SimulateArgs simulate_args;
  CLI::App* simulate = app.add_subcommand("simulate", "slot-level Monte Carlo runs");
  simulate->add_option("--config", simulate_args.config_path, "system config file")
      ->required();
  CLI::Option* plan_opt =
      simulate->add_option("--plan", simulate_args.plan_path, "plan file from optimize");
  simulate->add_option("--r-uc", simulate_args.r_uc, "unicast rate, bits/s")
      ->excludes(plan_opt);
  simulate->add_option("--r-mc", simulate_args.r_mc, "multicast rate, bits/s")
      ->excludes(plan_opt);
  simulate->add_option("--t-set", simulate_args.t_set, "set-up window, slots")
      ->excludes(plan_opt);
  simulate->add_option("--mode", simulate_args.mode, "smmc, ft, or unicast");
  simulate->add_option("--episodes", simulate_args.episodes, "number of episodes");
  simulate->add_option("--seed", simulate_args.seed, "master RNG seed");
  simulate->add_option("--out", simulate_args.out_dir,
                       "directory for episodes.csv, summary.csv, k_dist.csv, run.json");

  ReproduceArgs reproduce_args;
  CLI::App* reproduce = app.add_subcommand("reproduce", "canned parameter studies");
  reproduce->add_option("--figure", reproduce_args.figure, "fig3, fig4, fig5, or fig6")
      ->required();
  reproduce->add_option("--config", reproduce_args.config_path, "system config file")
      ->required();
  reproduce->add_option("--episodes", reproduce_args.episodes,
                        "episodes per point (0 = per-figure default)");
  reproduce->add_option("--seed", reproduce_args.seed, "master RNG seed");
  reproduce->add_option("--out", reproduce_args.out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(optimize)) return run_optimize(optimize_args);
    if (app.got_subcommand(bounds)) return run_bounds(bounds_args);
    if (app.got_subcommand(simulate)) return run_simulate(simulate_args);
    if (app.got_subcommand(reproduce)) return run_reproduce(reproduce_args);
    std::cerr << "error: no subcommand selected\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
