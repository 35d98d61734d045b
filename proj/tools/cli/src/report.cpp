#include "report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "viewcal/error.hpp"

namespace viewcal::cli {

using nlohmann::json;

namespace {

json summary_json(const calib::PoseErrorSummary& s, const std::vector<int>& ids) {
  json per_pose = json::array();
  for (std::size_t k = 0; k < s.per_pose.size(); ++k) {
    per_pose.push_back({{"id", ids[k]}, {"rot_deg", s.per_pose[k].rot_deg}, {"trans", s.per_pose[k].trans}});
  }
  return {{"mean_rot_deg", s.mean_rot_deg}, {"mean_trans", s.mean_trans}, {"per_pose", per_pose}};
}

// Shortest text that reads back to the same double.
std::string number(double x) {
  char buf[32];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

}  // namespace

json manifest_json(const PoseManifest& manifest) {
  json poses = json::array();
  for (const PoseEntry& e : manifest.entries) {
    json entry = {{"id", e.id}, {"matrix", e.pose.to_row_major()}};
    if (!e.image.empty()) entry["image"] = e.image;
    poses.push_back(std::move(entry));
  }
  return {{"config_hash", manifest.meta.config_hash}, {"seed", manifest.meta.seed}, {"poses", poses}};
}

PoseManifest read_manifest(const std::filesystem::path& path) {
  const json doc = read_json(path);
  const auto bad = [&](const std::string& what) { return InvalidInput(path.string() + ": " + what); };
  if (!doc.is_object() || !doc.contains("poses") || !doc["poses"].is_array()) {
    throw bad("expected an object with a \"poses\" array");
  }
  PoseManifest m;
  if (doc.contains("config_hash") && doc["config_hash"].is_string()) m.meta.config_hash = doc["config_hash"];
  if (doc.contains("seed") && doc["seed"].is_number_unsigned()) m.meta.seed = doc["seed"];
  for (std::size_t k = 0; k < doc["poses"].size(); ++k) {
    const json& p = doc["poses"][k];
    const std::string where = "poses[" + std::to_string(k) + "]";
    if (!p.is_object() || !p.contains("id") || !p["id"].is_number_integer()) throw bad(where + ".id: expected an integer");
    if (!p.contains("matrix") || !p["matrix"].is_array() || p["matrix"].size() != 16) {
      throw bad(where + ".matrix: expected 16 numbers");
    }
    std::array<double, 16> values{};
    for (std::size_t i = 0; i < 16; ++i) {
      if (!p["matrix"][i].is_number()) throw bad(where + ".matrix: expected 16 numbers");
      values[i] = p["matrix"][i].get<double>();
    }
    PoseEntry e{p["id"].get<int>(), geometry::Pose::from_row_major(values), {}};
    if (p.contains("image")) {
      if (!p["image"].is_string()) throw bad(where + ".image: expected a string");
      e.image = p["image"].get<std::string>();
    }
    m.entries.push_back(std::move(e));
  }
  return m;
}

void require_same_ids(const PoseManifest& a, const PoseManifest& b, const std::string& what) {
  if (a.entries.size() != b.entries.size()) {
    throw InvalidInput(what + ": " + std::to_string(a.entries.size()) + " poses against " +
                       std::to_string(b.entries.size()));
  }
  for (std::size_t k = 0; k < a.entries.size(); ++k) {
    if (a.entries[k].id != b.entries[k].id) {
      throw InvalidInput(what + ": pose " + std::to_string(k) + " has id " + std::to_string(a.entries[k].id) +
                         " but " + std::to_string(b.entries[k].id) + " was expected");
    }
  }
}

ErrorReport evaluate_manifests(const PoseManifest& estimates, const PoseManifest& truths,
                               const PoseManifest* initial, const io::RunMetadata& meta) {
  require_same_ids(estimates, truths, "estimates vs truths");
  const auto poses = [](const PoseManifest& m) {
    std::vector<geometry::Pose> out;
    for (const auto& e : m.entries) out.push_back(e.pose);
    return out;
  };
  const auto truth_poses = poses(truths);
  ErrorReport report;
  report.meta = meta;
  for (const auto& e : truths.entries) report.ids.push_back(e.id);
  report.final = calib::evaluate(poses(estimates), truth_poses);
  if (initial) {
    require_same_ids(*initial, truths, "initial vs truths");
    report.initial = calib::evaluate(poses(*initial), truth_poses);
  }
  return report;
}

json report_json(const ErrorReport& report) {
  json doc = {{"config_hash", report.meta.config_hash}, {"seed", report.meta.seed}, {"ids", report.ids},
              {"final", summary_json(report.final, report.ids)}};
  doc["initial"] = report.initial ? summary_json(*report.initial, report.ids) : json(nullptr);
  return doc;
}

std::string report_csv(const ErrorReport& report) {
  std::ostringstream out;
  out << "id,rot_init_deg,trans_init,rot_final_deg,trans_final\n";
  for (std::size_t k = 0; k < report.ids.size(); ++k) {
    out << report.ids[k] << ',';
    if (report.initial) {
      out << number(report.initial->per_pose[k].rot_deg) << ',' << number(report.initial->per_pose[k].trans);
    } else {
      out << ',';
    }
    out << ',' << number(report.final.per_pose[k].rot_deg) << ',' << number(report.final.per_pose[k].trans) << '\n';
  }
  return out.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

void write_json(const std::filesystem::path& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

}  // namespace viewcal::cli
