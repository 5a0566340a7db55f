#ifndef MVNBV_SERIALIZATION_HPP_
#define MVNBV_SERIALIZATION_HPP_

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvnbv/experiment.hpp"

namespace mvnbv {

using Json = nlohmann::ordered_json;

Json to_json(const Aabb& box);
Aabb aabb_from_json(const Json& j, const std::string& field);

Json to_json(const ViewPose& pose);
/// Accepts {translation, rotation} or {eye, target[, up]}.
ViewPose pose_from_json(const Json& j, const std::string& field);

Json to_json(const SceneSpec& spec);
SceneSpec scene_spec_from_json(const Json& j);

/// Every field optional; unknown keys and bad values throw InvalidConfiguration naming the field.
ExperimentConfig config_from_json(const Json& j);
Json to_json(const ExperimentConfig& config);

/// {round, method, selections:[{sensor, view_id, pose}], utility, marginals, elapsed_s}
Json plan_to_json(const PlanResult& plan, int round, const std::string& method, const std::vector<ViewPose>& poses);

/// One CSV line per (episode, round).
struct MetricsRow {
  std::uint64_t scene_seed = 0;
  std::string method;
  std::uint64_t run_seed = 0;
  int round = 0;
  int views_per_sensor = 0;
  double explored_frac = 0.0;
  double surface_cov = 0.0;
  double unknown_cm3 = 0.0;
  double plan_time_s = 0.0;
  double explored_frac_grid = 0.0;
  int room_count = 0;
};

extern const char* const kMetricsCsvHeader;

std::vector<MetricsRow> metrics_rows(const EpisodeResult& episode);
void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows);
/// Throws InvalidArgument on a malformed file.
std::vector<MetricsRow> read_metrics_csv(std::istream& in);

/// Per-method AUC means (micro-averaged over pooled rounds) with 95% Student-t intervals over
/// episodes, a per-room-count breakdown, and pairwise explored-volume AUC differences.
Json summarize(const std::vector<MetricsRow>& rows);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace mvnbv

#endif  // MVNBV_SERIALIZATION_HPP_
