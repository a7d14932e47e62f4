#include "edgeav/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "edgeav/errors.hpp"

namespace edgeav {

double compute_accuracy(const DetectionCounts& c) {
  const std::int64_t total = c.tp + c.tn + c.fp + c.fn;
  if (c.tp < 0 || c.tn < 0 || c.fp < 0 || c.fn < 0) throw DomainError("compute_accuracy: negative count");
  if (total == 0) throw UndefinedMetricError("compute_accuracy: all counts are zero");
  return 100.0 * static_cast<double>(c.tp + c.tn) / static_cast<double>(total);
}

double compute_collision_rate(std::int64_t collisions, std::int64_t runs) {
  if (runs < 1) throw UndefinedMetricError("compute_collision_rate: no runs");
  if (collisions < 0 || collisions > runs) throw DomainError("compute_collision_rate: collisions outside [0, runs]");
  return 100.0 * static_cast<double>(collisions) / static_cast<double>(runs);
}

double compute_lane_departure_rate(std::int64_t departure_ticks, std::int64_t total_ticks) {
  if (total_ticks < 1) throw UndefinedMetricError("compute_lane_departure_rate: no ticks");
  if (departure_ticks < 0 || departure_ticks > total_ticks) {
    throw DomainError("compute_lane_departure_rate: departure ticks outside [0, total]");
  }
  return 100.0 * static_cast<double>(departure_ticks) / static_cast<double>(total_ticks);
}

const CellReport& BenchmarkReport::cell(DeploymentMode mode, WeatherKind weather) const {
  for (const CellReport& c : cells) {
    if (c.mode == mode && c.weather == weather) return c;
  }
  throw MissingCellError("report has no cell (" + std::string(to_string(mode)) + ", " +
                         std::string(to_string(weather)) + ")");
}

BenchmarkReport aggregate_report(std::span<const EpisodeMetrics> episodes, std::span<const CellKey> requested) {
  std::map<CellKey, std::vector<const EpisodeMetrics*>> groups;
  for (const EpisodeMetrics& e : episodes) groups[{e.mode, e.weather}].push_back(&e);

  BenchmarkReport report;
  for (const CellKey& key : requested) {
    auto it = groups.find(key);
    if (it == groups.end() || it->second.empty()) {
      throw MissingCellError("no episodes for cell (" + std::string(to_string(key.first)) + ", " +
                             std::string(to_string(key.second)) + ")");
    }
    std::vector<const EpisodeMetrics*> group = it->second;
    // Fixed reduction order makes floating-point sums order independent.
    std::sort(group.begin(), group.end(), [](const EpisodeMetrics* a, const EpisodeMetrics* b) {
      return std::tie(a->seed, a->total_ticks, a->latency_sum_ms, a->cumulative_reward, a->iou_sum) <
             std::tie(b->seed, b->total_ticks, b->latency_sum_ms, b->cumulative_reward, b->iou_sum);
    });

    CellReport cell;
    cell.mode = key.first;
    cell.weather = key.second;
    double latency_sum = 0.0;
    double reward_sum = 0.0;
    double iou_sum = 0.0;
    std::int64_t matched = 0;
    for (const EpisodeMetrics* e : group) {
      ++cell.episodes;
      cell.collisions += e->collided ? 1 : 0;
      cell.total_ticks += e->total_ticks;
      cell.lane_departure_ticks += e->lane_departure_ticks;
      cell.counts += e->counts;
      latency_sum += e->latency_sum_ms;
      reward_sum += e->cumulative_reward;
      iou_sum += e->iou_sum;
      matched += e->matched;
    }
    const DetectionCounts& c = cell.counts;
    if (c.tp + c.tn + c.fp + c.fn > 0) cell.accuracy_pct = compute_accuracy(c);
    cell.mean_latency_ms = latency_sum / static_cast<double>(cell.total_ticks);
    cell.collision_rate_pct = compute_collision_rate(cell.collisions, cell.episodes);
    cell.lane_departure_rate_pct = compute_lane_departure_rate(cell.lane_departure_ticks, cell.total_ticks);
    cell.mean_iou = matched > 0 ? iou_sum / static_cast<double>(matched) : 0.0;
    cell.mean_cumulative_reward = reward_sum / static_cast<double>(cell.episodes);
    report.total_episodes += cell.episodes;
    report.cells.push_back(cell);
  }
  return report;
}

std::string report_to_json(const BenchmarkReport& report, const ReportMetadata& metadata) {
  using nlohmann::ordered_json;
  ordered_json cells = ordered_json::array();
  for (const CellReport& c : report.cells) {
    ordered_json j;
    j["mode"] = to_string(c.mode);
    j["weather"] = to_string(c.weather);
    j["episodes"] = c.episodes;
    j["accuracy_pct"] = c.accuracy_pct ? ordered_json(*c.accuracy_pct) : ordered_json(nullptr);
    j["mean_latency_ms"] = c.mean_latency_ms;
    j["collision_rate_pct"] = c.collision_rate_pct;
    j["lane_departure_rate_pct"] = c.lane_departure_rate_pct;
    j["mean_iou"] = c.mean_iou;
    j["mean_cumulative_reward"] = c.mean_cumulative_reward;
    j["collisions"] = c.collisions;
    j["total_ticks"] = c.total_ticks;
    j["lane_departure_ticks"] = c.lane_departure_ticks;
    j["counts"] = {{"tp", c.counts.tp}, {"tn", c.counts.tn}, {"fp", c.counts.fp}, {"fn", c.counts.fn}};
    cells.push_back(std::move(j));
  }
  ordered_json root;
  root["format"] = "edgeav-report";
  root["format_version"] = 1;
  root["metadata"] = {{"seed", metadata.seed},
                      {"episodes_per_cell", metadata.episodes_per_cell},
                      {"policy", metadata.policy},
                      {"tool_version", metadata.tool_version},
                      {"true_negatives", "cell level"}};
  root["total_episodes"] = report.total_episodes;
  root["cells"] = std::move(cells);
  return root.dump(2) + "\n";
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string episodes_to_csv(std::span<const EpisodeMetrics> episodes) {
  std::ostringstream out;
  out << "mode,weather,seed,collided,reached_goal,lane_departure_ticks,total_ticks,mean_latency_ms,"
         "tp,tn,fp,fn,mean_iou,cumulative_reward\n";
  for (const EpisodeMetrics& e : episodes) {
    out << to_string(e.mode) << ',' << to_string(e.weather) << ',' << e.seed << ',' << (e.collided ? 1 : 0)
        << ',' << (e.reached_goal ? 1 : 0) << ',' << e.lane_departure_ticks << ',' << e.total_ticks << ','
        << fmt(e.mean_latency_ms) << ',' << e.counts.tp << ',' << e.counts.tn << ',' << e.counts.fp << ','
        << e.counts.fn << ',' << fmt(e.mean_iou) << ',' << fmt(e.cumulative_reward) << '\n';
  }
  return out.str();
}

std::string curve_to_csv(std::span<const CurvePoint> curve) {
  std::ostringstream out;
  out << "episode,cumulative_reward,epsilon,collided,ticks,weather\n";
  for (const CurvePoint& p : curve) {
    out << p.episode << ',' << fmt(p.cumulative_reward) << ',' << fmt(p.epsilon) << ','
        << (p.collided ? 1 : 0) << ',' << p.ticks << ',' << to_string(p.weather) << '\n';
  }
  return out.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << content;
  if (!out.flush()) throw IoError("failed writing '" + path.string() + "'");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
  return buf.str();
}

}  // namespace edgeav
