#include "viewcal_cli/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "viewcal/serialization.hpp"

namespace viewcal::cli {

namespace {

using nlohmann::json;
using geometry::Vec3;

// Walks one JSON object, remembering which keys were consumed so leftovers can be reported.
class Section {
 public:
  Section(const json& node, std::string path, std::string_view source)
      : node_(node), path_(std::move(path)), source_(source) {
    if (!node_.is_object()) fail(path_.empty() ? "top level" : path_, "expected an object");
  }

  [[noreturn]] void fail(const std::string& where, const std::string& what) const {
    throw ConfigError(std::string(source_) + ": " + where + ": " + what);
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  double number(const std::string& key, double fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number()) fail(field(key), "expected a number");
    const double x = v->get<double>();
    if (!std::isfinite(x)) fail(field(key), "expected a finite number");
    return x;
  }

  double positive(const std::string& key, double fallback) {
    const double x = number(key, fallback);
    if (!(x > 0.0)) fail(field(key), "must be positive");
    return x;
  }

  long integer(const std::string& key, long fallback, long lo = std::numeric_limits<long>::min()) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number_integer()) fail(field(key), "expected an integer");
    const long x = v->get<long>();
    if (x < lo) fail(field(key), "must be at least " + std::to_string(lo));
    return x;
  }

  std::uint64_t unsigned64(const std::string& key, std::uint64_t fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number_unsigned()) fail(field(key), "expected a nonnegative integer");
    return v->get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_boolean()) fail(field(key), "expected true or false");
    return v->get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_string()) fail(field(key), "expected a string");
    return v->get<std::string>();
  }

  Vec3 vec3(const std::string& key, const Vec3& fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_array() || v->size() != 3) fail(field(key), "expected an array of 3 numbers");
    Vec3 out;
    for (int k = 0; k < 3; ++k) {
      if (!(*v)[static_cast<std::size_t>(k)].is_number()) fail(field(key), "expected an array of 3 numbers");
      out[k] = (*v)[static_cast<std::size_t>(k)].get<double>();
    }
    return out;
  }

  std::array<double, 2> range(const std::string& key, const std::array<double, 2>& fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number() || !(*v)[1].is_number()) {
      fail(field(key), "expected [lo, hi]");
    }
    const std::array<double, 2> out{(*v)[0].get<double>(), (*v)[1].get<double>()};
    if (out[0] > out[1]) fail(field(key), "lo must not exceed hi");
    return out;
  }

  Section child(const std::string& key) {
    static const json kEmpty = json::object();
    const json* v = find(key);
    return Section(v ? *v : kEmpty, field(key), source_);
  }

  const json* array(const std::string& key) {
    const json* v = find(key);
    if (v && !v->is_array()) fail(field(key), "expected an array");
    return v;
  }

  std::string_view source() const { return source_; }

  /// Rejects keys nobody asked for (usually typos).
  void finish() const {
    for (const auto& [key, value] : node_.items()) {
      if (!seen_.count(key)) fail(field(key), "unknown key");
    }
  }

 private:
  const json& node_;
  std::string path_;
  std::string_view source_;
  std::set<std::string> seen_;
};

json vec3_json(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }

render::SceneSpec parse_scene(Section s) {
  render::SceneSpec spec;
  if (const json* res = s.find("resolution")) {
    if (!res->is_array() || res->size() != 3) s.fail(s.field("resolution"), "expected 3 positive integers");
    for (std::size_t k = 0; k < 3; ++k) {
      if (!(*res)[k].is_number_integer() || (*res)[k].get<long>() < 1 || (*res)[k].get<long>() > 1024) {
        s.fail(s.field("resolution"), "expected 3 integers in [1, 1024]");
      }
      spec.resolution[k] = (*res)[k].get<int>();
    }
  }
  spec.box_min = s.vec3("box_min", spec.box_min);
  spec.box_max = s.vec3("box_max", spec.box_max);
  if (!(spec.box_min.array() < spec.box_max.array()).all()) s.fail(s.field("box_max"), "must exceed box_min on every axis");
  spec.light = s.vec3("light", spec.light);
  spec.ambient = s.number("ambient", spec.ambient);
  if (spec.ambient < 0.0 || spec.ambient > 1.0) s.fail(s.field("ambient"), "must lie in [0, 1]");

  auto color_of = [&](Section& p, const std::string& where) {
    const Vec3 c = p.vec3("color", Vec3::Ones());
    if ((c.array() < 0.0).any() || (c.array() > 1.0).any()) p.fail(where + ".color", "components must lie in [0, 1]");
    return c;
  };
  auto density_of = [&](Section& p, const std::string& where) {
    const double d = p.number("density", 10.0);
    if (d < 0.0) p.fail(where + ".density", "must be nonnegative");
    return d;
  };
  if (const json* spheres = s.array("spheres")) {
    for (std::size_t i = 0; i < spheres->size(); ++i) {
      const std::string where = s.field("spheres") + "[" + std::to_string(i) + "]";
      Section p((*spheres)[i], where, s.source());
      render::SpherePrimitive sp;
      sp.center = p.vec3("center", sp.center);
      sp.radius = p.positive("radius", sp.radius);
      sp.color = color_of(p, where);
      sp.density = density_of(p, where);
      p.finish();
      spec.spheres.push_back(sp);
    }
  }
  if (const json* boxes = s.array("boxes")) {
    for (std::size_t i = 0; i < boxes->size(); ++i) {
      const std::string where = s.field("boxes") + "[" + std::to_string(i) + "]";
      Section p((*boxes)[i], where, s.source());
      render::BoxPrimitive bx;
      bx.min = p.vec3("min", bx.min);
      bx.max = p.vec3("max", bx.max);
      if (!(bx.min.array() <= bx.max.array()).all()) p.fail(where + ".max", "must not be below min");
      bx.color = color_of(p, where);
      bx.density = density_of(p, where);
      p.finish();
      spec.boxes.push_back(bx);
    }
  }
  s.finish();
  return spec;
}

geometry::PoseDistribution parse_distribution(Section s) {
  geometry::PoseDistribution d;
  d.radius = s.positive("radius", d.radius);
  d.azimuth_deg = s.range("azimuth_deg", d.azimuth_deg);
  d.elevation_deg = s.range("elevation_deg", d.elevation_deg);
  d.lookat_mean = s.vec3("lookat_mean", d.lookat_mean);
  d.lookat_stddev = s.number("lookat_stddev", d.lookat_stddev);
  if (d.lookat_stddev < 0.0) s.fail(s.field("lookat_stddev"), "must be nonnegative");
  d.up = s.vec3("up", d.up);
  if (std::abs(d.up.norm() - 1.0) > 1e-9) s.fail(s.field("up"), "must be a unit vector");
  s.finish();
  return d;
}

json distribution_json(const geometry::PoseDistribution& d) {
  return {{"radius", d.radius},
          {"azimuth_deg", d.azimuth_deg},
          {"elevation_deg", d.elevation_deg},
          {"lookat_mean", vec3_json(d.lookat_mean)},
          {"lookat_stddev", d.lookat_stddev},
          {"up", vec3_json(d.up)}};
}

json scene_json(const render::SceneSpec& spec) {
  json spheres = json::array(), boxes = json::array();
  for (const auto& s : spec.spheres) {
    spheres.push_back({{"center", vec3_json(s.center)}, {"radius", s.radius},
                       {"color", vec3_json(s.color)}, {"density", s.density}});
  }
  for (const auto& b : spec.boxes) {
    boxes.push_back({{"min", vec3_json(b.min)}, {"max", vec3_json(b.max)},
                     {"color", vec3_json(b.color)}, {"density", b.density}});
  }
  return {{"resolution", spec.resolution}, {"box_min", vec3_json(spec.box_min)},
          {"box_max", vec3_json(spec.box_max)}, {"light", vec3_json(spec.light)},
          {"ambient", spec.ambient}, {"spheres", spheres}, {"boxes", boxes}};
}

}  // namespace

ExperimentConfig parse_config(std::string_view text, std::string_view source) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    // The message carries the line and column of the syntax error.
    throw ConfigError(std::string(source) + ": " + e.what());
  }

  ExperimentConfig cfg;
  Section top(root, "", source);
  if (!top.find("seed")) top.fail("seed", "is required (no unseeded runs)");
  cfg.seed = top.unsigned64("seed", 0);
  cfg.output_dir = top.string("output_dir", cfg.output_dir);
  cfg.scene = parse_scene(top.child("scene"));
  cfg.pose_distribution = parse_distribution(top.child("pose_distribution"));

  {
    Section s = top.child("intrinsics");
    cfg.view.intrinsics.focal = s.positive("focal", cfg.view.intrinsics.focal);
    cfg.view.intrinsics.width = static_cast<int>(s.integer("width", cfg.view.intrinsics.width, 1));
    cfg.view.intrinsics.height = static_cast<int>(s.integer("height", cfg.view.intrinsics.height, 1));
    s.finish();
  }
  {
    Section s = top.child("render");
    auto& r = cfg.view.render;
    r.n_samples = static_cast<int>(s.integer("n_samples", r.n_samples, 1));
    r.near = s.positive("near", r.near);
    r.far = s.positive("far", r.far);
    if (!(r.near < r.far)) s.fail(s.field("far"), "must exceed near");
    r.stratified = s.boolean("stratified", r.stratified);
    r.background = s.vec3("background", r.background);
    if ((r.background.array() < 0.0).any() || (r.background.array() > 1.0).any()) {
      s.fail(s.field("background"), "components must lie in [0, 1]");
    }
    s.finish();
  }
  {
    Section s = top.child("uot");
    auto& u = cfg.view.uot;
    u.eta = s.positive("eta", u.eta);
    const bool balanced = s.boolean("balanced", false);
    u.epsilon = s.positive("epsilon", u.epsilon);
    if (balanced) u.epsilon = ot::UotConfig::kBalanced;
    u.max_iter = static_cast<int>(s.integer("max_iter", u.max_iter, 1));
    u.tol = s.positive("tol", u.tol);
    s.finish();
  }
  {
    Section s = top.child("matching");
    cfg.view.match.grid = static_cast<int>(s.integer("grid", cfg.view.match.grid, 1));
    cfg.view.match.dim = static_cast<int>(s.integer("dim", cfg.view.match.dim, 1));
    cfg.top_k = static_cast<int>(s.integer("top_k", cfg.top_k, 0));
    s.finish();
    if (cfg.view.intrinsics.width < cfg.view.match.grid || cfg.view.intrinsics.height < cfg.view.match.grid) {
      throw ConfigError(std::string(source) + ": matching.grid: larger than the image");
    }
  }
  {
    Section s = top.child("training");
    auto& t = cfg.training;
    t.pairs_per_epoch = static_cast<int>(s.integer("pairs_per_epoch", t.pairs_per_epoch, 1));
    t.epochs = static_cast<int>(s.integer("epochs", t.epochs, 1));
    t.learning_rate = s.number("learning_rate", t.learning_rate);
    if (t.learning_rate < 0.0) s.fail(s.field("learning_rate"), "must be nonnegative");
    t.hidden_width = s.integer("hidden_width", t.hidden_width, 1);
    t.max_relative_angle_deg = s.number("max_relative_angle_deg", t.max_relative_angle_deg);
    t.max_relative_translation = s.number("max_relative_translation", t.max_relative_translation);
    if (t.max_relative_angle_deg < 0.0 || t.max_relative_translation < 0.0) {
      s.fail(s.field("max_relative_angle_deg"), "perturbation bounds must be nonnegative");
    }
    s.finish();
    t.pose_distribution = cfg.pose_distribution;
    // The training stream is derived from the master seed, never configured separately.
    t.seed = CounterRng::derive(cfg.seed, 3);
  }
  {
    Section s = top.child("calibration");
    auto& c = cfg.calibration;
    c.views = static_cast<int>(s.integer("views", c.views, 0));
    const std::string init = s.string("initial", "perturb");
    if (init == "perturb") {
      c.initial = InitialPoses::kPerturb;
    } else if (init == "sample") {
      c.initial = InitialPoses::kSample;
    } else {
      s.fail(s.field("initial"), "expected \"perturb\" or \"sample\"");
    }
    c.initial_max_angle_deg = s.number("initial_max_angle_deg", c.initial_max_angle_deg);
    c.initial_max_translation = s.number("initial_max_translation", c.initial_max_translation);
    if (c.initial_max_angle_deg < 0.0 || c.initial_max_translation < 0.0) {
      s.fail(s.field("initial_max_angle_deg"), "perturbation bounds must be nonnegative");
    }
    Section r = s.child("refine");
    c.refine = r.boolean("enabled", c.refine);
    c.refine_cfg.steps = static_cast<int>(r.integer("steps", c.refine_cfg.steps, 0));
    c.refine_cfg.step_size = r.positive("step_size", c.refine_cfg.step_size);
    c.refine_cfg.fd_step = r.positive("fd_step", c.refine_cfg.fd_step);
    c.refine_cfg.max_halvings = static_cast<int>(r.integer("max_halvings", c.refine_cfg.max_halvings, 0));
    c.refine_cfg.damping = r.positive("damping", c.refine_cfg.damping);
    r.finish();
    s.finish();
  }
  top.finish();

  try {
    cfg.view.intrinsics.validate();
    cfg.view.render.validate();
    cfg.view.uot.validate();
    cfg.pose_distribution.validate();
    cfg.training.validate();
    cfg.calibration.refine_cfg.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string(source) + ": " + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.string());
}

std::string ExperimentConfig::canonical() const {
  const auto& u = view.uot;
  const json doc = {
      {"seed", seed},
      {"scene", scene_json(scene)},
      {"pose_distribution", distribution_json(pose_distribution)},
      {"intrinsics", {{"focal", view.intrinsics.focal}, {"width", view.intrinsics.width},
                      {"height", view.intrinsics.height}}},
      {"render", {{"n_samples", view.render.n_samples}, {"near", view.render.near},
                  {"far", view.render.far}, {"stratified", view.render.stratified},
                  {"background", vec3_json(view.render.background)}}},
      {"uot", {{"eta", u.eta}, {"balanced", u.balanced()},
               {"epsilon", u.balanced() ? json(nullptr) : json(u.epsilon)},
               {"max_iter", u.max_iter}, {"tol", u.tol}}},
      {"matching", {{"grid", view.match.grid}, {"dim", view.match.dim}, {"top_k", top_k}}},
      {"training", {{"pairs_per_epoch", training.pairs_per_epoch}, {"epochs", training.epochs},
                    {"learning_rate", training.learning_rate},
                    {"hidden_width", training.hidden_width},
                    {"max_relative_angle_deg", training.max_relative_angle_deg},
                    {"max_relative_translation", training.max_relative_translation}}},
      {"calibration", {{"views", calibration.views},
                       {"initial", calibration.initial == InitialPoses::kPerturb ? "perturb" : "sample"},
                       {"initial_max_angle_deg", calibration.initial_max_angle_deg},
                       {"initial_max_translation", calibration.initial_max_translation},
                       {"refine", {{"enabled", calibration.refine},
                                   {"steps", calibration.refine_cfg.steps},
                                   {"step_size", calibration.refine_cfg.step_size},
                                   {"fd_step", calibration.refine_cfg.fd_step},
                                   {"max_halvings", calibration.refine_cfg.max_halvings},
                                   {"damping", calibration.refine_cfg.damping}}}}},
  };
  return doc.dump();
}

std::string ExperimentConfig::hash() const { return io::fnv1a_hex(canonical()); }

}  // namespace viewcal::cli
