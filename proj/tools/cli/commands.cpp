#include "commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "edgeav/config.hpp"
#include "edgeav/errors.hpp"
#include "edgeav/nn_io.hpp"
#include "edgeav/report.hpp"

namespace edgeav::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr const char* kModelFile = "model.txt";
constexpr double kGradTolerance = 1e-5;

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> threads;
  std::optional<int> episodes;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("-c,--config", o.config_path,
                  std::string("JSON run configuration (default: $") + kConfigEnvVar + ", then built-in defaults)");
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--out-dir", o.out_dir, "Output directory");
  cmd->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--episodes", o.episodes, "Episode count for this command")->check(CLI::NonNegativeNumber);
}

RunConfig resolve_config(const CommonOptions& o) {
  std::string path = o.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv(kConfigEnvVar); env != nullptr && *env != '\0') path = env;
  }
  RunConfig config = path.empty() ? parse_run_config("{}") : load_run_config(path);
  if (o.seed) config.seed = *o.seed;
  if (o.out_dir) config.out_dir = *o.out_dir;
  if (o.threads) config.threads = *o.threads;
  config.benchmark.seed = config.seed;
  config.benchmark.threads = config.threads;
  config.validate();
  return config;
}

fs::path prepare_out_dir(const RunConfig& config) {
  const fs::path dir(config.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

template <typename E, typename Parse>
std::vector<E> parse_list(const std::string& text, const char* field, Parse parse, const char* allowed) {
  std::vector<E> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto parsed = parse(item);
    if (!parsed) throw ConfigError(field, "unknown value '" + item + "', allowed: " + allowed);
    if (std::find(out.begin(), out.end(), *parsed) == out.end()) out.push_back(*parsed);
  }
  if (out.empty()) throw ConfigError(field, std::string("empty list, allowed: ") + allowed);
  return out;
}

DatasetConfig dataset_config(const RunConfig& config, int frames) {
  DatasetConfig d;
  d.frames = frames;
  d.weather_intensity = config.pipeline.weather_intensity;
  d.grid = config.pipeline.grid;
  return d;
}

CellDataset training_cells(const RunConfig& config) {
  return make_cell_dataset(config.pipeline.env.scenario, config.pipeline.env.sensors,
                           dataset_config(config, config.perception.train_frames),
                           derive_seed(config.seed, stream::kDataset, 0));
}

CellDataset heldout_cells(const RunConfig& config) {
  return make_cell_dataset(config.pipeline.env.scenario, config.pipeline.env.sensors,
                           dataset_config(config, config.perception.eval_frames),
                           derive_seed(config.seed, stream::kDataset, 1));
}

nn::Mlp train_perception(const RunConfig& config) {
  return train_cell_classifier(training_cells(config), config.perception.training,
                               derive_seed(config.seed, stream::kModelInit, 1));
}

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

// ---------------------------------------------------------------- train

int cmd_train(const CommonOptions& opts, std::ostream& out) {
  RunConfig config = resolve_config(opts);
  if (opts.episodes) config.train.episodes = *opts.episodes;
  const fs::path dir = prepare_out_dir(config);

  out << "training cell classifier on " << config.perception.train_frames << " frames\n";
  nn::ModelSnapshot snapshot;
  snapshot.perception = train_perception(config);

  out << "training agent for " << config.train.episodes << " episodes (seed " << config.seed << ")\n";
  const int report_every = std::max(1, config.train.episodes / 10);
  const TrainResult result = train_agent(config.pipeline.env, config.agent, config.train, config.seed,
                                         [&](const CurvePoint& p) {
                                           if ((p.episode + 1) % report_every == 0) {
                                             out << "  episode " << p.episode + 1 << "  reward "
                                                 << fixed(p.cumulative_reward, 1) << "  epsilon "
                                                 << fixed(p.epsilon, 3) << '\n';
                                           }
                                         });
  snapshot.qnet = result.qnet;

  nn::save_snapshot(dir / kModelFile, snapshot);
  write_text_file(dir / "convergence.csv", curve_to_csv(result.curve));
  write_text_file(dir / "config.resolved.json", run_config_to_json(config));
  out << "wrote " << (dir / kModelFile).string() << ", " << (dir / "convergence.csv").string() << '\n';
  return kOk;
}

// ------------------------------------------------------------ benchmark

struct BenchmarkOptions {
  std::string modes;
  std::string weathers;
  std::string model;
  bool random_policy = false;
};

nn::ModelSnapshot load_model_or_usage_error(const RunConfig& config, const std::string& model_path) {
  const fs::path path = model_path.empty() ? fs::path(config.out_dir) / kModelFile : fs::path(model_path);
  if (!fs::exists(path)) {
    throw ConfigError("model", "no trained model at '" + path.string() +
                                   "'; run 'train' first or pass --random-policy");
  }
  try {
    return nn::load_snapshot(path);
  } catch (const FormatError& e) {
    throw ConfigError("model", e.what());
  }
}

int cmd_benchmark(const CommonOptions& opts, const BenchmarkOptions& bopts, std::ostream& out) {
  RunConfig config = resolve_config(opts);
  BenchmarkPlan plan = config.benchmark;
  if (opts.episodes) plan.episodes = *opts.episodes;
  if (plan.episodes < 1) throw ConfigError("episodes", "must be >= 1");
  if (!bopts.modes.empty()) {
    plan.modes = parse_list<DeploymentMode>(bopts.modes, "modes", parse_mode, "edge, cloud");
  }
  if (!bopts.weathers.empty()) {
    plan.weathers = parse_list<WeatherKind>(bopts.weathers, "weathers", parse_weather, "clear, fog, rain, snow");
  }

  nn::ModelSnapshot snapshot;
  Policy policy;
  if (bopts.random_policy) {
    if (!bopts.model.empty()) snapshot = load_model_or_usage_error(config, bopts.model);
    else snapshot.perception = train_perception(config);
  } else {
    snapshot = load_model_or_usage_error(config, bopts.model);
    policy.qnet = &snapshot.qnet;
  }
  const nn::QuantizedMlp quantized = nn::quantize_model(snapshot.perception);
  const PerceptionModels perception{&snapshot.perception, &quantized};

  const fs::path dir = prepare_out_dir(config);
  const std::vector<EpisodeMetrics> episodes = run_benchmark(config.pipeline, policy, perception, plan);

  std::vector<CellKey> cells;
  for (DeploymentMode m : plan.modes) {
    for (WeatherKind w : plan.weathers) cells.emplace_back(m, w);
  }
  const BenchmarkReport report = aggregate_report(episodes, cells);
  ReportMetadata meta;
  meta.seed = config.seed;
  meta.episodes_per_cell = plan.episodes;
  meta.policy = bopts.random_policy ? "random" : "trained";
  meta.tool_version = kVersion;
  write_text_file(dir / "report.json", report_to_json(report, meta));
  write_text_file(dir / "episodes.csv", episodes_to_csv(episodes));

  out << "mode   weather  episodes  accuracy%  latency_ms  collision%  lane_dep%\n";
  for (const CellReport& c : report.cells) {
    char line[160];
    std::snprintf(line, sizeof line, "%-6s %-8s %8lld  %9s  %10.1f  %10.1f  %9.2f\n",
                  std::string(to_string(c.mode)).c_str(), std::string(to_string(c.weather)).c_str(),
                  static_cast<long long>(c.episodes), c.accuracy_pct ? fixed(*c.accuracy_pct).c_str() : "n/a",
                  c.mean_latency_ms, c.collision_rate_pct, c.lane_departure_rate_pct);
    out << line;
  }
  out << "wrote " << (dir / "report.json").string() << ", " << (dir / "episodes.csv").string() << '\n';
  return kOk;
}

// ------------------------------------------------------------- evaluate

int cmd_evaluate(const CommonOptions& opts, const std::string& model_path, std::ostream& out) {
  RunConfig config = resolve_config(opts);
  if (opts.episodes) config.evaluate_episodes = *opts.episodes;
  if (config.evaluate_episodes < 1) throw ConfigError("episodes", "must be >= 1");
  const nn::ModelSnapshot snapshot = load_model_or_usage_error(config, model_path);
  const fs::path dir = prepare_out_dir(config);

  nlohmann::ordered_json policy_rows = nlohmann::ordered_json::array();
  out << "weather  trained_collision%  random_collision%  reduction%\n";
  EpisodeOptions direct;
  direct.direct_control = true;
  for (WeatherKind w : config.benchmark.weathers) {
    std::int64_t trained = 0;
    std::int64_t random = 0;
    const WeatherCondition weather = weather_preset(w, config.pipeline.weather_intensity);
    for (int e = 0; e < config.evaluate_episodes; ++e) {
      const std::uint64_t seed = derive_seed(derive_seed(config.seed, stream::kEvalEpisode, static_cast<std::uint64_t>(w)),
                                             stream::kEvalEpisode, static_cast<std::uint64_t>(e));
      trained += run_pipeline_episode(config.pipeline, Policy{&snapshot.qnet}, {}, DeploymentMode::Edge,
                                      weather, seed, direct).collided;
      random += run_pipeline_episode(config.pipeline, Policy{}, {}, DeploymentMode::Edge, weather, seed, direct)
                    .collided;
    }
    const double tr = compute_collision_rate(trained, config.evaluate_episodes);
    const double rr = compute_collision_rate(random, config.evaluate_episodes);
    const std::optional<double> reduction =
        rr > 0.0 ? std::optional<double>(100.0 * (rr - tr) / rr) : std::nullopt;
    policy_rows.push_back({{"weather", to_string(w)},
                           {"episodes", config.evaluate_episodes},
                           {"trained_collision_rate_pct", tr},
                           {"random_collision_rate_pct", rr},
                           {"reduction_pct", reduction ? nlohmann::ordered_json(*reduction) : nlohmann::ordered_json(nullptr)}});
    char line[128];
    std::snprintf(line, sizeof line, "%-8s %18.1f  %17.1f  %10s\n", std::string(to_string(w)).c_str(), tr, rr,
                  reduction ? fixed(*reduction, 1).c_str() : "n/a");
    out << line;
  }

  const CellDataset heldout = heldout_cells(config);
  const double acc_full = 100.0 * cell_accuracy(snapshot.perception, heldout);
  const double acc_int8 = 100.0 * cell_accuracy(nn::quantize_model(snapshot.perception), heldout);
  const nn::PruneResult pruned = nn::prune_by_magnitude(snapshot.perception, config.perception.prune_fraction);
  const double acc_pruned = 100.0 * cell_accuracy(pruned.model, heldout);
  out << "cell accuracy  float " << fixed(acc_full) << "%  int8 " << fixed(acc_int8) << "%  pruned("
      << fixed(config.perception.prune_fraction) << ") " << fixed(acc_pruned) << "%  mac_reduction "
      << fixed(pruned.mac_reduction, 4) << '\n';

  nlohmann::ordered_json root;
  root["format"] = "edgeav-evaluation";
  root["format_version"] = 1;
  root["metadata"] = {{"seed", config.seed}, {"tool_version", kVersion}};
  root["policy"] = std::move(policy_rows);
  root["compression"] = {{"heldout_cells", heldout.labels.size()},
                         {"accuracy_float_pct", acc_full},
                         {"accuracy_int8_pct", acc_int8},
                         {"prune_fraction", config.perception.prune_fraction},
                         {"accuracy_pruned_pct", acc_pruned},
                         {"mac_reduction", pruned.mac_reduction},
                         {"weights_pruned", pruned.pruned},
                         {"weights_total", pruned.total}};
  write_text_file(dir / "evaluation.json", root.dump(2) + "\n");
  out << "wrote " << (dir / "evaluation.json").string() << '\n';
  return kOk;
}

// ------------------------------------------------------------ gradcheck

struct GradcheckOptions {
  int seeds = 100;
  std::uint64_t seed = 42;
  double inject_fault = 0.0;
};

nn::Vector random_input(std::size_t n, Rng& rng) {
  nn::Vector x(n);
  for (double& v : x) v = rng.standard_normal();
  return x;
}

// Redraws the input until every ReLU pre-activation is clear of its kink.
nn::Vector input_off_kinks(const nn::Mlp& model, Rng& rng) {
  nn::Vector x = random_input(model.input_dim(), rng);
  for (int attempt = 0; attempt < 1000 && nn::relu_margin(model, x) < 1e-3; ++attempt) {
    x = random_input(model.input_dim(), rng);
  }
  return x;
}

int cmd_gradcheck(const GradcheckOptions& g, std::ostream& out) {
  if (g.seeds < 1) throw ConfigError("seeds", "must be >= 1");
  nn::GradCheckOptions options;
  options.inject_fault = g.inject_fault;

  struct Row {
    std::string name;
    double max_error = 0.0;
    std::string worst;
    std::size_t checked = 0;
  };
  Row rows[3];
  rows[0].name = "dense 8-16-4 relu";
  rows[1].name = "recurrent h4 x3 t5";
  rows[2].name = "q-network 8-64-64-5";
  auto note = [](Row& row, const nn::GradCheckResult& r, int seed) {
    row.checked += r.parameters_checked;
    if (r.max_relative_error >= row.max_error) {
      row.max_error = r.max_relative_error;
      row.worst = r.worst_parameter + " (seed " + std::to_string(seed) + ")";
    }
  };

  for (int s = 0; s < g.seeds; ++s) {
    Rng rng(derive_seed(g.seed, stream::kModelInit, static_cast<std::uint64_t>(s)));
    {
      const std::size_t sizes[] = {8, 16, 4};
      const nn::Activation acts[] = {nn::Activation::ReLU, nn::Activation::Linear};
      const nn::Mlp model = nn::Mlp::create(sizes, acts, rng);
      const nn::Vector x = input_off_kinks(model, rng);
      const nn::Vector t = random_input(4, rng);
      note(rows[0], nn::gradient_check(model, x, t, options), s);
    }
    {
      const nn::RecurrentCell cell = nn::RecurrentCell::create(4, 3, rng);
      std::vector<nn::Vector> xs, ts;
      for (int k = 0; k < 5; ++k) {
        xs.push_back(random_input(3, rng));
        nn::Vector t(4);
        for (double& v : t) v = rng.uniform01();
        ts.push_back(t);
      }
      const nn::Vector h0(4, 0.0);
      note(rows[1], nn::gradient_check_rnn(cell, h0, xs, ts, options), s);
    }
    {
      AgentConfig agent;
      const nn::Mlp qnet = make_qnetwork(8, 5, agent, rng);
      const nn::Vector x = input_off_kinks(qnet, rng);
      const int action = rng.uniform_int(0, 4);
      note(rows[2], nn::gradient_check_q(qnet, x, action, rng.normal(0.0, 2.0), options), s);
    }
  }

  bool ok = true;
  out << "layer                  seeds  params     max_rel_error  status  worst\n";
  for (const Row& r : rows) {
    const bool pass = r.max_error < kGradTolerance;
    ok = ok && pass;
    char line[256];
    std::snprintf(line, sizeof line, "%-22s %5d  %8zu  %14s  %-6s  %s\n", r.name.c_str(), g.seeds, r.checked,
                  sci(r.max_error).c_str(), pass ? "ok" : "FAIL", r.worst.c_str());
    out << line;
  }
  out << (ok ? "gradient check passed" : "gradient check FAILED") << " (tolerance " << sci(kGradTolerance)
      << ")\n";
  return ok ? kOk : kCheckFailed;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Edge-vs-cloud driving pipeline simulator", "edgeav"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  CommonOptions train_opts, bench_opts, eval_opts;
  BenchmarkOptions bench;
  std::string eval_model;
  GradcheckOptions grad;

  CLI::App* train = app.add_subcommand("train", "Train the cell classifier and the driving agent");
  add_common(train, train_opts);

  CLI::App* benchmark = app.add_subcommand("benchmark", "Run the edge/cloud pipeline benchmark");
  add_common(benchmark, bench_opts);
  benchmark->add_option("--modes", bench.modes, "Comma-separated: edge,cloud");
  benchmark->add_option("--weathers", bench.weathers, "Comma-separated: clear,fog,rain,snow");
  benchmark->add_option("--model", bench.model, "Model file (default: <out-dir>/model.txt)");
  benchmark->add_flag("--random-policy", bench.random_policy, "Drive with the uniform-random policy");

  CLI::App* evaluate = app.add_subcommand("evaluate", "Compare the trained policy with a random one and report compression accuracy");
  add_common(evaluate, eval_opts);
  evaluate->add_option("--model", eval_model, "Model file (default: <out-dir>/model.txt)");

  CLI::App* gradcheck = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
  gradcheck->add_option("--seeds", grad.seeds, "Random models per layer type");
  gradcheck->add_option("--seed", grad.seed, "Master seed");
  gradcheck->add_option("--inject-fault", grad.inject_fault, "Offset added to one analytic gradient")
      ->group("");  // test fixture, not advertised

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }

  try {
    if (train->parsed()) return cmd_train(train_opts, out);
    if (benchmark->parsed()) return cmd_benchmark(bench_opts, bench, out);
    if (evaluate->parsed()) return cmd_evaluate(eval_opts, eval_model, out);
    if (gradcheck->parsed()) return cmd_gradcheck(grad, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kUsageError;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kIoError;
  } catch (const fs::filesystem_error& e) {
    err << "i/o error: " << e.what() << '\n';
    return kIoError;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kCheckFailed;
  }
  return kUsageError;
}

}  // namespace edgeav::cli
