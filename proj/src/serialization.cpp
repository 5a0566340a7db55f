#include "mvnbv/serialization.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace mvnbv {

namespace {

[[noreturn]] void bad_field(const std::string& field, const std::string& why) {
  throw InvalidConfiguration("config field '" + field + "': " + why);
}

template <typename T>
T get_as(const Json& j, const std::string& field) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    bad_field(field, "wrong type");
  }
}

Vec3 vec3_from_json(const Json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 3) bad_field(field, "expected an array of 3 numbers");
  Vec3 v;
  for (int a = 0; a < 3; ++a) {
    if (!j[a].is_number()) bad_field(field, "expected an array of 3 numbers");
    v[a] = j[a].get<double>();
  }
  return v;
}

Json vec3_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

void check_keys(const Json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) bad_field(where.empty() ? "<root>" : where, "expected an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) bad_field(where.empty() ? key : where + "." + key, "unknown field");
  }
}

// Shortest text that parses back to the same double.
std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

GainKind gain_from_string(const std::string& s) {
  if (s == "entropy") return GainKind::entropy;
  if (s == "unknown_indicator") return GainKind::unknown_indicator;
  bad_field("score.gain", "unknown gain '" + s + "'");
}

WeightKind weight_from_string(const std::string& s) {
  if (s == "unit") return WeightKind::unit;
  if (s == "occlusion_aware") return WeightKind::occlusion_aware;
  if (s == "roi_masked") return WeightKind::roi_masked;
  bad_field("score.weight", "unknown weight '" + s + "'");
}

const char* gain_name(GainKind g) { return g == GainKind::entropy ? "entropy" : "unknown_indicator"; }

const char* weight_name(WeightKind w) {
  switch (w) {
    case WeightKind::unit: return "unit";
    case WeightKind::occlusion_aware: return "occlusion_aware";
    case WeightKind::roi_masked: return "roi_masked";
  }
  return "unit";
}

}  // namespace

Json to_json(const Aabb& box) { return Json{{"min", vec3_json(box.min)}, {"max", vec3_json(box.max)}}; }

Aabb aabb_from_json(const Json& j, const std::string& field) {
  // Flat [x0, y0, z0, x1, y1, z1] is accepted as shorthand.
  if (j.is_array()) {
    if (j.size() != 6) bad_field(field, "expected [x0, y0, z0, x1, y1, z1]");
    std::array<double, 6> v;
    for (std::size_t i = 0; i < 6; ++i) v[i] = get_as<double>(j[i], field);
    return {Vec3(v[0], v[1], v[2]), Vec3(v[3], v[4], v[5])};
  }
  check_keys(j, field, {"min", "max"});
  if (!j.contains("min") || !j.contains("max")) bad_field(field, "needs min and max");
  return {vec3_from_json(j["min"], field + ".min"), vec3_from_json(j["max"], field + ".max")};
}

Json to_json(const ViewPose& pose) {
  Json rot = Json::array();
  for (int r = 0; r < 3; ++r) rot.push_back(Json::array({pose.rotation(r, 0), pose.rotation(r, 1), pose.rotation(r, 2)}));
  return Json{{"translation", vec3_json(pose.translation)}, {"rotation", rot}};
}

ViewPose pose_from_json(const Json& j, const std::string& field) {
  check_keys(j, field, {"translation", "rotation", "eye", "target", "up"});
  if (j.contains("eye")) {
    if (!j.contains("target")) bad_field(field, "eye needs a target");
    const Vec3 up = j.contains("up") ? vec3_from_json(j["up"], field + ".up") : Vec3::UnitZ();
    return ViewPose::look_at(vec3_from_json(j["eye"], field + ".eye"), vec3_from_json(j["target"], field + ".target"),
                             up);
  }
  if (!j.contains("translation") || !j.contains("rotation")) bad_field(field, "needs translation and rotation");
  ViewPose pose;
  pose.translation = vec3_from_json(j["translation"], field + ".translation");
  const Json& rot = j["rotation"];
  if (!rot.is_array() || rot.size() != 3) bad_field(field + ".rotation", "expected a 3x3 array");
  for (int r = 0; r < 3; ++r) pose.rotation.row(r) = vec3_from_json(rot[r], field + ".rotation").transpose();
  try {
    pose.validate();
  } catch (const InvalidArgument& e) {
    bad_field(field + ".rotation", e.what());
  }
  return pose;
}

Json to_json(const SceneSpec& spec) {
  Json boxes = Json::array();
  for (const Aabb& b : spec.boxes) boxes.push_back(to_json(b));
  return Json{{"bounds", to_json(spec.bounds)}, {"seed", spec.seed}, {"room_count", spec.room_count}, {"boxes", boxes}};
}

SceneSpec scene_spec_from_json(const Json& j) {
  check_keys(j, "", {"bounds", "seed", "room_count", "boxes"});
  SceneSpec spec;
  if (!j.contains("bounds") || !j.contains("boxes")) bad_field("scene", "needs bounds and boxes");
  spec.bounds = aabb_from_json(j["bounds"], "bounds");
  if (j.contains("seed")) spec.seed = get_as<std::uint64_t>(j["seed"], "seed");
  if (j.contains("room_count")) spec.room_count = get_as<int>(j["room_count"], "room_count");
  if (!j["boxes"].is_array()) bad_field("boxes", "expected an array");
  for (std::size_t i = 0; i < j["boxes"].size(); ++i) {
    spec.boxes.push_back(aabb_from_json(j["boxes"][i], "boxes[" + std::to_string(i) + "]"));
  }
  spec.validate();
  return spec;
}

ExperimentConfig config_from_json(const Json& j) {
  check_keys(j, "", {"preset", "sensors", "candidates_per_sensor", "rounds", "initial_random_views", "p_hit", "p_miss",
                     "clamp", "resolution", "max_range", "ray_fraction", "camera", "coverage_tolerance",
                     "consume_views", "layout", "candidates", "scene_options", "score", "methods", "run_seeds", "scenes"});
  ExperimentConfig c;
  if (j.contains("preset")) {
    const auto preset = get_as<std::string>(j["preset"], "preset");
    if (preset == "tabletop") {
      c = ExperimentConfig::tabletop();
    } else if (preset != "synthetic") {
      bad_field("preset", "expected 'synthetic' or 'tabletop'");
    }
  }
  auto num = [&](const char* key, double& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_number()) bad_field(key, "expected a number");
    out = j[key].get<double>();
  };
  auto integer = [&](const Json& obj, const std::string& path, const char* key, int& out) {
    if (!obj.contains(key)) return;
    if (!obj[key].is_number_integer()) bad_field(path, "expected an integer");
    out = obj[key].get<int>();
  };
  integer(j, "sensors", "sensors", c.sensors);
  integer(j, "candidates_per_sensor", "candidates_per_sensor", c.candidates_per_sensor);
  integer(j, "rounds", "rounds", c.rounds);
  integer(j, "initial_random_views", "initial_random_views", c.initial_random_views);
  num("p_hit", c.sensor.p_hit);
  num("p_miss", c.sensor.p_miss);
  num("clamp", c.sensor.clamp);
  num("resolution", c.resolution);
  num("max_range", c.max_range);
  num("ray_fraction", c.ray_fraction);
  num("coverage_tolerance", c.coverage_tolerance);
  if (j.contains("consume_views")) c.consume_views = get_as<bool>(j["consume_views"], "consume_views");
  if (j.contains("layout")) {
    const auto layout = get_as<std::string>(j["layout"], "layout");
    if (layout == "ring") {
      c.layout = ViewLayout::ring;
    } else if (layout == "hemisphere") {
      c.layout = ViewLayout::hemisphere;
    } else {
      bad_field("layout", "expected 'ring' or 'hemisphere'");
    }
  }
  if (j.contains("camera")) {
    const Json& cam = j["camera"];
    check_keys(cam, "camera", {"hfov_deg", "width", "height"});
    if (cam.contains("hfov_deg")) c.hfov_deg = get_as<double>(cam["hfov_deg"], "camera.hfov_deg");
    integer(cam, "camera.width", "width", c.image_width);
    integer(cam, "camera.height", "height", c.image_height);
  }
  if (j.contains("candidates")) {
    const Json& cand = j["candidates"];
    check_keys(cand, "candidates",
               {"radius_fraction", "height", "target_height", "target_jitter", "clearance", "max_retries"});
    auto cnum = [&](const char* key, double& out) {
      if (cand.contains(key)) out = get_as<double>(cand[key], std::string("candidates.") + key);
    };
    cnum("radius_fraction", c.candidates.radius_fraction);
    cnum("height", c.candidates.height);
    cnum("target_height", c.candidates.target_height);
    cnum("target_jitter", c.candidates.target_jitter);
    cnum("clearance", c.candidates.clearance);
    integer(cand, "candidates.max_retries", "max_retries", c.candidates.max_retries);
  }
  if (j.contains("scene_options")) {
    const Json& so = j["scene_options"];
    check_keys(so, "scene_options",
               {"min_obstacles", "max_obstacles", "obstacle_min_size", "obstacle_max_size", "obstacle_max_height"});
    auto snum = [&](const char* key, double& out) {
      if (so.contains(key)) out = get_as<double>(so[key], std::string("scene_options.") + key);
    };
    integer(so, "scene_options.min_obstacles", "min_obstacles", c.scene.min_obstacles);
    integer(so, "scene_options.max_obstacles", "max_obstacles", c.scene.max_obstacles);
    snum("obstacle_min_size", c.scene.obstacle_min_size);
    snum("obstacle_max_size", c.scene.obstacle_max_size);
    snum("obstacle_max_height", c.scene.obstacle_max_height);
  }
  if (j.contains("score")) {
    const Json& s = j["score"];
    check_keys(s, "score", {"gain", "weight", "roi"});
    if (s.contains("gain")) c.score.gain = gain_from_string(get_as<std::string>(s["gain"], "score.gain"));
    if (s.contains("weight")) c.score.weight = weight_from_string(get_as<std::string>(s["weight"], "score.weight"));
    if (s.contains("roi")) c.score.roi = aabb_from_json(s["roi"], "score.roi");
  }
  if (j.contains("methods")) {
    if (!j["methods"].is_array()) bad_field("methods", "expected an array");
    c.methods.clear();
    for (const auto& m : j["methods"]) {
      try {
        c.methods.push_back(method_from_string(get_as<std::string>(m, "methods")));
      } catch (const InvalidConfiguration& e) {
        bad_field("methods", e.what());
      }
    }
  }
  if (j.contains("run_seeds")) {
    if (!j["run_seeds"].is_array()) bad_field("run_seeds", "expected an array");
    c.run_seeds.clear();
    for (const auto& s : j["run_seeds"]) c.run_seeds.push_back(get_as<std::uint64_t>(s, "run_seeds"));
  }
  if (j.contains("scenes")) {
    if (!j["scenes"].is_array()) bad_field("scenes", "expected an array");
    c.scenes.clear();
    for (std::size_t i = 0; i < j["scenes"].size(); ++i) {
      const Json& s = j["scenes"][i];
      const std::string path = "scenes[" + std::to_string(i) + "]";
      check_keys(s, path, {"seed", "room_count", "bounds"});
      SceneEntry e;
      if (s.contains("seed")) e.seed = get_as<std::uint64_t>(s["seed"], path + ".seed");
      integer(s, path + ".room_count", "room_count", e.room_count);
      if (s.contains("bounds")) e.bounds = aabb_from_json(s["bounds"], path + ".bounds");
      c.scenes.push_back(e);
    }
  }
  c.validate();
  return c;
}

Json to_json(const ExperimentConfig& c) {
  Json methods = Json::array();
  for (Method m : c.methods) methods.push_back(to_string(m));
  Json scenes = Json::array();
  for (const SceneEntry& s : c.scenes) {
    scenes.push_back(Json{{"seed", s.seed}, {"room_count", s.room_count}, {"bounds", to_json(s.bounds)}});
  }
  Json score{{"gain", gain_name(c.score.gain)}, {"weight", weight_name(c.score.weight)}};
  if (c.score.roi) score["roi"] = to_json(*c.score.roi);
  return Json{{"sensors", c.sensors},
              {"candidates_per_sensor", c.candidates_per_sensor},
              {"rounds", c.rounds},
              {"initial_random_views", c.initial_random_views},
              {"p_hit", c.sensor.p_hit},
              {"p_miss", c.sensor.p_miss},
              {"clamp", c.sensor.clamp},
              {"resolution", c.resolution},
              {"max_range", c.max_range},
              {"ray_fraction", c.ray_fraction},
              {"camera", {{"hfov_deg", c.hfov_deg}, {"width", c.image_width}, {"height", c.image_height}}},
              {"coverage_tolerance", c.coverage_tolerance},
              {"consume_views", c.consume_views},
              {"layout", c.layout == ViewLayout::ring ? "ring" : "hemisphere"},
              {"candidates",
               {{"radius_fraction", c.candidates.radius_fraction},
                {"height", c.candidates.height},
                {"target_height", c.candidates.target_height},
                {"target_jitter", c.candidates.target_jitter},
                {"clearance", c.candidates.clearance},
                {"max_retries", c.candidates.max_retries}}},
              {"scene_options",
               {{"min_obstacles", c.scene.min_obstacles},
                {"max_obstacles", c.scene.max_obstacles},
                {"obstacle_min_size", c.scene.obstacle_min_size},
                {"obstacle_max_size", c.scene.obstacle_max_size},
                {"obstacle_max_height", c.scene.obstacle_max_height}}},
              {"score", score},
              {"methods", methods},
              {"run_seeds", c.run_seeds},
              {"scenes", scenes}};
}

Json plan_to_json(const PlanResult& plan, int round, const std::string& method, const std::vector<ViewPose>& poses) {
  Json selections = Json::array();
  for (const Selection& s : plan.chosen.by_block().selections) {
    Json entry{{"sensor", s.block}, {"view_id", to_index(s.view)}};
    if (to_index(s.view) < poses.size()) entry["pose"] = to_json(poses[to_index(s.view)]);
    selections.push_back(entry);
  }
  return Json{{"round", round},         {"method", method},         {"selections", selections},
              {"utility", plan.utility}, {"marginals", plan.marginals}, {"elapsed_s", plan.elapsed_s}};
}

const char* const kMetricsCsvHeader =
    "scene_seed,method,run_seed,round,views_per_sensor,explored_frac,surface_cov,unknown_cm3,plan_time_s,"
    "explored_frac_grid,room_count";

std::vector<MetricsRow> metrics_rows(const EpisodeResult& ep) {
  std::vector<MetricsRow> rows;
  for (const RoundMetrics& r : ep.rounds) {
    rows.push_back({ep.scene_seed, to_string(ep.method), ep.run_seed, r.round, r.views_per_sensor, r.explored_frac,
                    r.surface_cov, r.unknown_cm3, r.plan_time_s, r.explored_frac_grid, ep.room_count});
  }
  return rows;
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  out << kMetricsCsvHeader << '\n';
  for (const MetricsRow& r : rows) {
    out << r.scene_seed << ',' << r.method << ',' << r.run_seed << ',' << r.round << ',' << r.views_per_sensor << ','
        << format_number(r.explored_frac) << ',' << format_number(r.surface_cov) << ','
        << format_number(r.unknown_cm3) << ',' << format_number(r.plan_time_s) << ','
        << format_number(r.explored_frac_grid) << ',' << r.room_count << '\n';
  }
}

std::vector<MetricsRow> read_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kMetricsCsvHeader) throw InvalidArgument("metrics CSV header mismatch");
  std::vector<MetricsRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 11) throw InvalidArgument("metrics CSV line " + std::to_string(lineno) + ": expected 11 columns");
    try {
      MetricsRow r;
      r.scene_seed = std::stoull(cells[0]);
      r.method = cells[1];
      r.run_seed = std::stoull(cells[2]);
      r.round = std::stoi(cells[3]);
      r.views_per_sensor = std::stoi(cells[4]);
      r.explored_frac = std::stod(cells[5]);
      r.surface_cov = std::stod(cells[6]);
      r.unknown_cm3 = std::stod(cells[7]);
      r.plan_time_s = std::stod(cells[8]);
      r.explored_frac_grid = std::stod(cells[9]);
      r.room_count = std::stoi(cells[10]);
      rows.push_back(r);
    } catch (const std::logic_error&) {
      throw InvalidArgument("metrics CSV line " + std::to_string(lineno) + ": bad number");
    }
  }
  return rows;
}

namespace {

struct EpisodeSeries {
  std::vector<double> explored;
  std::vector<double> surface;
  double final_unknown = 0.0;
  int room_count = 0;
};

struct MethodPool {
  std::vector<double> explored_rounds;
  std::vector<double> surface_rounds;
  std::vector<double> explored_auc;
  std::vector<double> surface_auc;
  std::vector<double> final_unknown;
};

Json interval_json(double micro_mean, std::span<const double> per_episode) {
  const MeanInterval ci = mean_confidence_95(per_episode);
  return Json{{"mean", micro_mean}, {"ci95", ci.half_width}, {"episodes", ci.count}};
}

Json pool_json(const MethodPool& p) {
  return Json{{"explored_auc", interval_json(auc(p.explored_rounds), p.explored_auc)},
              {"surface_auc", interval_json(auc(p.surface_rounds), p.surface_auc)},
              {"final_unknown_cm3", interval_json(mean_confidence_95(p.final_unknown).mean, p.final_unknown)}};
}

}  // namespace

Json summarize(const std::vector<MetricsRow>& rows) {
  // Episodes keyed by (method, scene_seed, run_seed), rounds in file order.
  std::map<std::tuple<std::string, std::uint64_t, std::uint64_t>, EpisodeSeries> episodes;
  std::vector<std::string> method_order;
  for (const MetricsRow& r : rows) {
    auto& ep = episodes[{r.method, r.scene_seed, r.run_seed}];
    ep.explored.push_back(r.explored_frac);
    ep.surface.push_back(r.surface_cov);
    ep.final_unknown = r.unknown_cm3;
    ep.room_count = r.room_count;
    if (std::find(method_order.begin(), method_order.end(), r.method) == method_order.end()) {
      method_order.push_back(r.method);
    }
  }
  std::map<std::string, MethodPool> pools;
  std::map<int, std::map<std::string, MethodPool>> by_rooms;
  for (const auto& [key, ep] : episodes) {
    for (MethodPool* pool : {&pools[std::get<0>(key)], &by_rooms[ep.room_count][std::get<0>(key)]}) {
      pool->explored_rounds.insert(pool->explored_rounds.end(), ep.explored.begin(), ep.explored.end());
      pool->surface_rounds.insert(pool->surface_rounds.end(), ep.surface.begin(), ep.surface.end());
      pool->explored_auc.push_back(auc(ep.explored));
      pool->surface_auc.push_back(auc(ep.surface));
      pool->final_unknown.push_back(ep.final_unknown);
    }
  }
  Json out;
  Json methods = Json::object();
  for (const auto& m : method_order) methods[m] = pool_json(pools[m]);
  out["methods"] = methods;
  Json rooms = Json::object();
  for (const auto& [count, per_method] : by_rooms) {
    Json entry = Json::object();
    for (const auto& m : method_order) {
      if (per_method.count(m)) entry[m] = pool_json(per_method.at(m));
    }
    rooms[std::to_string(count)] = entry;
  }
  out["by_room_count"] = rooms;
  Json comparisons = Json::array();
  for (std::size_t a = 0; a < method_order.size(); ++a) {
    for (std::size_t b = a + 1; b < method_order.size(); ++b) {
      const MethodPool& pa = pools[method_order[a]];
      const MethodPool& pb = pools[method_order[b]];
      Json cmp{{"a", method_order[a]},
               {"b", method_order[b]},
               {"explored_auc_diff", auc(pa.explored_rounds) - auc(pb.explored_rounds)}};
      if (pa.explored_auc.size() >= 2 && pb.explored_auc.size() >= 2) {
        cmp["pooled_ci95"] = pooled_difference_half_width_95(pa.explored_auc, pb.explored_auc);
      }
      comparisons.push_back(cmp);
    }
  }
  out["comparisons"] = comparisons;
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace mvnbv
