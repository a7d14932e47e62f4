#include "edgeav/config.hpp"

#include <set>
#include <string_view>
#include <type_traits>

#include <nlohmann/json.hpp>

#include "edgeav/errors.hpp"
#include "edgeav/report.hpp"

namespace edgeav {

using nlohmann::ordered_json;

namespace {

std::string join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

std::string weather_names() { return "clear, fog, rain, snow"; }

/// Reads present keys into the config and rejects keys it never asked for.
class Reader {
 public:
  explicit Reader(const ordered_json& root) { stack_.push_back({&root, "", {}}); }

  template <typename T>
  void field(std::string_view key, T& value) {
    const ordered_json* j = take(key);
    if (j == nullptr) return;
    const std::string path = join(top().path, key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!j->is_boolean()) throw ConfigError(path, "expected true or false");
        value = j->get<bool>();
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!j->is_string()) throw ConfigError(path, "expected a string");
        value = j->get<std::string>();
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!j->is_number()) throw ConfigError(path, "expected a number");
        value = j->get<T>();
      } else if constexpr (std::is_integral_v<T>) {
        if (!j->is_number_integer()) throw ConfigError(path, "expected an integer");
        if constexpr (std::is_unsigned_v<T>) {
          if (j->is_number_integer() && !j->is_number_unsigned() && j->get<std::int64_t>() < 0) {
            throw ConfigError(path, "must be >= 0");
          }
        }
        value = j->get<T>();
      } else {
        // std::vector of numbers
        if (!j->is_array()) throw ConfigError(path, "expected an array");
        T out;
        for (const auto& e : *j) {
          if (!e.is_number()) throw ConfigError(path, "expected an array of numbers");
          if constexpr (std::is_unsigned_v<typename T::value_type>) {
            if (!e.is_number_unsigned()) throw ConfigError(path, "expected non-negative integers");
          }
          out.push_back(e.get<typename T::value_type>());
        }
        value = std::move(out);
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path, e.what());
    }
  }

  template <std::size_t N>
  void array(std::string_view key, std::array<double, N>& value) {
    std::vector<double> v(value.begin(), value.end());
    const bool present = top().json->contains(std::string(key));
    field(key, v);
    if (!present) return;
    if (v.size() != N) throw ConfigError(join(top().path, key), "expected " + std::to_string(N) + " numbers");
    std::copy(v.begin(), v.end(), value.begin());
  }

  void by_weather(std::string_view key, std::array<double, 4>& value) {
    object(key, [&] {
      for (WeatherKind k : kAllWeather) field(to_string(k), value[static_cast<std::size_t>(k)]);
    });
  }

  void weather_list(std::string_view key, std::vector<WeatherKind>& value) {
    names(key, value, [](std::string_view n) { return parse_weather(n); }, weather_names());
  }

  void mode_list(std::string_view key, std::vector<DeploymentMode>& value) {
    names(key, value, [](std::string_view n) { return parse_mode(n); }, "edge, cloud");
  }

  template <typename F>
  void object(std::string_view key, F&& body) {
    const ordered_json* j = take(key);
    if (j == nullptr) return;
    const std::string path = join(top().path, key);
    if (!j->is_object()) throw ConfigError(path, "expected an object");
    stack_.push_back({j, path, {}});
    body();
    close();
  }

  void finish() { close(); }

 private:
  struct Frame {
    const ordered_json* json;
    std::string path;
    std::set<std::string> seen;
  };

  Frame& top() { return stack_.back(); }

  const ordered_json* take(std::string_view key) {
    Frame& f = top();
    f.seen.insert(std::string(key));
    auto it = f.json->find(std::string(key));
    return it == f.json->end() ? nullptr : &*it;
  }

  void close() {
    const Frame& f = top();
    for (const auto& item : f.json->items()) {
      if (!f.seen.count(item.key())) throw ConfigError(join(f.path, item.key()), "unknown key");
    }
    stack_.pop_back();
  }

  template <typename E, typename Parse>
  void names(std::string_view key, std::vector<E>& value, Parse parse, const std::string& allowed) {
    const ordered_json* j = take(key);
    if (j == nullptr) return;
    const std::string path = join(top().path, key);
    if (!j->is_array()) throw ConfigError(path, "expected an array of names");
    std::vector<E> out;
    for (const auto& e : *j) {
      if (!e.is_string()) throw ConfigError(path, "expected an array of names");
      const auto parsed = parse(e.get<std::string>());
      if (!parsed) throw ConfigError(path, "unknown name '" + e.get<std::string>() + "', allowed: " + allowed);
      out.push_back(*parsed);
    }
    value = std::move(out);
  }

  std::vector<Frame> stack_;
};

/// Mirror of Reader that emits every field.
class Writer {
 public:
  template <typename T>
  void field(std::string_view key, T& value) {
    top()[std::string(key)] = value;
  }

  template <std::size_t N>
  void array(std::string_view key, std::array<double, N>& value) {
    top()[std::string(key)] = value;
  }

  void by_weather(std::string_view key, std::array<double, 4>& value) {
    object(key, [&] {
      for (WeatherKind k : kAllWeather) field(to_string(k), value[static_cast<std::size_t>(k)]);
    });
  }

  void weather_list(std::string_view key, std::vector<WeatherKind>& value) {
    ordered_json a = ordered_json::array();
    for (WeatherKind k : value) a.push_back(to_string(k));
    top()[std::string(key)] = a;
  }

  void mode_list(std::string_view key, std::vector<DeploymentMode>& value) {
    ordered_json a = ordered_json::array();
    for (DeploymentMode m : value) a.push_back(to_string(m));
    top()[std::string(key)] = a;
  }

  template <typename F>
  void object(std::string_view key, F&& body) {
    stack_.emplace_back(ordered_json::object());
    body();
    ordered_json done = std::move(stack_.back());
    stack_.pop_back();
    top()[std::string(key)] = std::move(done);
  }

  ordered_json result() { return stack_.front(); }

 private:
  ordered_json& top() { return stack_.back(); }
  std::vector<ordered_json> stack_{ordered_json::object()};
};

void visit_sensor(auto& v, SensorSpec& s) {
  v.field("base_variance", s.base_variance);
  v.field("max_range", s.max_range);
  v.by_weather("variance_multiplier", s.variance_multiplier);
  v.by_weather("range_multiplier", s.range_multiplier);
  v.field("intensity_slope", s.intensity_slope);
}

void visit_latency(auto& v, LatencyModel& m) {
  v.field("compute_ms", m.compute_ms);
  v.field("rtt_ms", m.rtt_ms);
  v.by_weather("weather_penalty_ms", m.weather_penalty_ms);
  v.field("jitter", m.jitter);
}

void visit(auto& v, RunConfig& c) {
  v.field("seed", c.seed);
  v.field("out_dir", c.out_dir);
  v.field("threads", c.threads);

  EpisodeConfig& s = c.pipeline.env.scenario;
  v.object("scenario", [&] {
    v.field("dt", s.dt);
    v.field("max_ticks", s.max_ticks);
    v.field("lane_half_width", s.lane_half_width);
    v.field("road_length", s.road_length);
    v.field("num_obstacles", s.num_obstacles);
    v.field("spawn_x_min", s.spawn_x_min);
    v.field("spawn_x_max", s.spawn_x_max);
    v.field("spawn_y_spread", s.spawn_y_spread);
    v.field("obstacle_speed_min", s.obstacle_speed_min);
    v.field("obstacle_speed_max", s.obstacle_speed_max);
    v.field("obstacle_half_extent", s.obstacle_half_extent);
    v.field("ego_speed", s.ego_speed);
    v.field("v_max", s.v_max);
    v.field("ego_half_length", s.ego.half_length);
    v.field("ego_half_width", s.ego.half_width);
    v.field("lateral_rate", s.lateral_rate);
    v.field("accel", s.accel);
    v.field("brake_decel", s.brake_decel);
  });

  SensorSuite& sensors = c.pipeline.env.sensors;
  v.object("sensors", [&] {
    for (SensorKind k : kAllSensors) v.object(to_string(k), [&] { visit_sensor(v, sensors[k]); });
  });

  TrackerConfig& t = c.pipeline.env.tracker;
  v.object("fusion", [&] {
    v.array("process_noise", t.process_noise);
    v.field("no_target_distance", t.no_target_distance);
    v.field("lost_variance", t.lost_variance);
    v.field("odometry_variance", t.odometry_variance);
    v.field("lidar_uses_ekf", t.lidar_uses_ekf);
  });

  AgentConfig& a = c.agent;
  v.object("agent", [&] {
    v.field("learning_rate", a.learning_rate);
    v.field("gamma", a.gamma);
    v.object("epsilon", [&] {
      v.field("start", a.epsilon.start);
      v.field("end", a.epsilon.end);
      v.field("decay_ticks", a.epsilon.decay_ticks);
    });
    v.field("batch_size", a.batch_size);
    v.field("target_sync", a.target_sync);
    v.field("replay_capacity", a.replay_capacity);
    v.field("warmup", a.warmup);
    v.field("train_every", a.train_every);
    v.field("hidden", a.hidden);
    v.field("max_grad_norm", a.max_grad_norm);
    v.object("reward", [&] {
      v.field("alive", a.reward.alive);
      v.field("departure", a.reward.departure);
      v.field("collision", a.reward.collision);
      v.field("steering", a.reward.steering);
      v.field("progress", a.reward.progress);
    });
  });

  v.object("train", [&] {
    v.field("episodes", c.train.episodes);
    v.field("weather_intensity", c.train.weather_intensity);
    v.weather_list("weathers", c.train.weathers);
    v.field("curve_discount", c.train.curve_discount);
    v.field("final_lr_fraction", c.train.final_lr_fraction);
    v.field("conventional_return", c.train.conventional_return);
  });

  v.object("perception", [&] {
    v.field("train_frames", c.perception.train_frames);
    v.field("eval_frames", c.perception.eval_frames);
    v.field("hidden", c.perception.training.hidden);
    v.field("epochs", c.perception.training.epochs);
    v.field("learning_rate", c.perception.training.learning_rate);
    v.field("prune_fraction", c.perception.prune_fraction);
    v.object("grid", [&] {
      v.field("width", c.pipeline.grid.width);
      v.field("height", c.pipeline.grid.height);
      v.field("cell_size", c.pipeline.grid.cell_size);
    });
    v.field("detection_threshold", c.pipeline.detection_threshold);
    v.field("iou_threshold", c.pipeline.iou_threshold);
  });

  v.object("deployment", [&] {
    v.object("edge", [&] { visit_latency(v, c.pipeline.edge); });
    v.object("cloud", [&] { visit_latency(v, c.pipeline.cloud); });
    v.field("edge_uses_quantized", c.pipeline.edge_uses_quantized);
    v.field("weather_intensity", c.pipeline.weather_intensity);
    v.field("reward_discount", c.pipeline.reward_discount);
  });

  v.object("benchmark", [&] {
    v.mode_list("modes", c.benchmark.modes);
    v.weather_list("weathers", c.benchmark.weathers);
    v.field("episodes", c.benchmark.episodes);
  });

  v.object("evaluate", [&] { v.field("episodes", c.evaluate_episodes); });
}

}  // namespace

void RunConfig::validate() const {
  if (out_dir.empty()) throw ConfigError("out_dir", "must not be empty");
  if (threads < 1) throw ConfigError("threads", "must be >= 1");
  pipeline.validate();
  agent.validate();
  train.validate();
  if (perception.train_frames < 1) throw ConfigError("perception.train_frames", "must be >= 1");
  if (perception.eval_frames < 1) throw ConfigError("perception.eval_frames", "must be >= 1");
  if (perception.training.hidden == 0) throw ConfigError("perception.hidden", "must be > 0");
  if (perception.training.epochs < 0) throw ConfigError("perception.epochs", "must be >= 0");
  if (!(perception.training.learning_rate >= 0.0)) throw ConfigError("perception.learning_rate", "must be >= 0");
  if (!(perception.prune_fraction >= 0.0 && perception.prune_fraction < 1.0)) {
    throw ConfigError("perception.prune_fraction", "must be in [0, 1)");
  }
  if (benchmark.episodes < 1) throw ConfigError("benchmark.episodes", "must be >= 1");
  if (benchmark.modes.empty()) throw ConfigError("benchmark.modes", "must list at least one mode");
  if (benchmark.weathers.empty()) throw ConfigError("benchmark.weathers", "must list at least one weather");
  if (evaluate_episodes < 1) throw ConfigError("evaluate.episodes", "must be >= 1");
}

RunConfig parse_run_config(const std::string& json_text) {
  ordered_json root;
  try {
    root = ordered_json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config", "top level must be a JSON object");

  RunConfig config;
  Reader reader(root);
  visit(reader, config);
  reader.finish();
  config.pipeline.env.reward = config.agent.reward;
  config.benchmark.seed = config.seed;
  config.benchmark.threads = config.threads;
  config.validate();
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const IoError& e) {
    throw ConfigError("config", e.what());
  }
  return parse_run_config(text);
}

std::string run_config_to_json(const RunConfig& config) {
  RunConfig copy = config;
  Writer writer;
  visit(writer, copy);
  return writer.result().dump(2) + "\n";
}

}  // namespace edgeav
