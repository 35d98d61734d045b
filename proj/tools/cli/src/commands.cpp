#include "commands.hpp"

#include <chrono>
#include <cstdio>
#include <iomanip>

#include "report.hpp"
#include "viewcal/image.hpp"
#include "viewcal/matching.hpp"
#include "viewcal/rng.hpp"
#include "viewcal_cli/config.hpp"

namespace viewcal::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Sub-streams of the master seed.
constexpr std::uint64_t kTruthStream = 1;
constexpr std::uint64_t kInitialStream = 2;
constexpr std::uint64_t kRenderStream = 4;

struct Context {
  ExperimentConfig cfg;
  io::RunMetadata meta;
  fs::path out;

  fs::path path_or(const fs::path& given, const char* fallback) const {
    return given.empty() ? out / fallback : given;
  }
};

Context load_context(const CommandOptions& opts) {
  if (opts.config.empty()) throw ConfigError("--config is required for this command");
  Context ctx{load_config(opts.config), {}, {}};
  if (opts.seed) {
    ctx.cfg.seed = *opts.seed;
    ctx.cfg.training.seed = CounterRng::derive(ctx.cfg.seed, 3);
  }
  ctx.meta = {ctx.cfg.hash(), ctx.cfg.seed};
  ctx.out = opts.out.empty() ? fs::path(ctx.cfg.output_dir) : opts.out;
  std::error_code ec;
  fs::create_directories(ctx.out, ec);
  if (ec) throw IoError("cannot create " + ctx.out.string() + ": " + ec.message());
  return ctx;
}

std::string view_name(int id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "view_%03d.ppm", id);
  return std::string("views/") + buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Ground-truth pose k. Draws that land on a degenerate look-at simply continue the stream.
geometry::Pose truth_pose(const ExperimentConfig& cfg, int k) {
  CounterRng rng(CounterRng::derive(CounterRng::derive(cfg.seed, kTruthStream), static_cast<std::uint64_t>(k)));
  for (int attempt = 0; attempt < 100; ++attempt) {
    try {
      return geometry::sample_pose(cfg.pose_distribution, rng);
    } catch (const DegenerateInput&) {
    }
  }
  throw NumericError("pose distribution keeps producing degenerate look-at frames");
}

geometry::Pose initial_pose(const ExperimentConfig& cfg, const PoseEntry& truth) {
  CounterRng rng(CounterRng::derive(CounterRng::derive(cfg.seed, kInitialStream),
                                    static_cast<std::uint64_t>(truth.id)));
  const auto& c = cfg.calibration;
  if (c.initial == InitialPoses::kPerturb) {
    return geometry::perturb_pose(truth.pose, c.initial_max_angle_deg, c.initial_max_translation, rng);
  }
  for (int attempt = 0; attempt < 100; ++attempt) {
    try {
      return geometry::sample_pose(cfg.pose_distribution, rng);
    } catch (const DegenerateInput&) {
    }
  }
  throw NumericError("pose distribution keeps producing degenerate look-at frames");
}

render::VoxelField load_scene(const Context& ctx, const fs::path& path) {
  render::VoxelField field = io::read_voxel_field(path);
  const auto& s = ctx.cfg.scene;
  if (field.resolution() != s.resolution || field.box_min() != s.box_min || field.box_max() != s.box_max) {
    throw ConfigError(path.string() + ": scene grid does not match the config");
  }
  return field;
}

ImageGrid load_view(const Context& ctx, const fs::path& path) {
  ImageGrid img = read_ppm(path);
  const auto& intr = ctx.cfg.view.intrinsics;
  if (img.width() != intr.width || img.height() != intr.height) {
    throw ConfigError(path.string() + ": image is " + std::to_string(img.width()) + "x" +
                      std::to_string(img.height()) + " but the config expects " +
                      std::to_string(intr.width) + "x" + std::to_string(intr.height));
  }
  return img;
}

}  // namespace

void cmd_gen_scene(const CommandOptions& opts, std::ostream& log) {
  const Context ctx = load_context(opts);
  const fs::path path = ctx.path_or(opts.scene, "scene.vox");
  io::write_voxel_field(path, render::build_voxel_field(ctx.cfg.scene), ctx.meta);
  log << "wrote " << path.string() << '\n';
}

void cmd_render_views(const CommandOptions& opts, std::ostream& log) {
  const Context ctx = load_context(opts);
  const render::VoxelField field = load_scene(ctx, ctx.path_or(opts.scene, "scene.vox"));

  PoseManifest manifest;
  manifest.meta = ctx.meta;
  if (!opts.poses.empty()) {
    if (opts.count) throw ConfigError("--poses and --count are mutually exclusive");
    for (PoseEntry& e : read_manifest(opts.poses).entries) manifest.entries.push_back({e.id, e.pose, {}});
  } else {
    const int n = opts.count.value_or(ctx.cfg.calibration.views);
    if (n < 0) throw ConfigError("--count must be nonnegative");
    for (int k = 0; k < n; ++k) manifest.entries.push_back({k, truth_pose(ctx.cfg, k), {}});
  }

  fs::create_directories(ctx.out / "views");
  for (PoseEntry& e : manifest.entries) {
    e.image = view_name(e.id);
    const std::uint64_t seed = CounterRng::derive(CounterRng::derive(ctx.cfg.seed, kRenderStream),
                                                  static_cast<std::uint64_t>(e.id));
    write_ppm(ctx.out / e.image,
              render::render(field, e.pose, ctx.cfg.view.intrinsics, ctx.cfg.view.render, seed));
  }
  const fs::path path = ctx.out / "poses.json";
  write_json(path, manifest_json(manifest));
  log << "rendered " << manifest.entries.size() << " views, manifest " << path.string() << '\n';
}

void cmd_match(const CommandOptions& opts, std::ostream& log) {
  const Context ctx = load_context(opts);
  if (opts.image_a.empty() || opts.image_b.empty()) throw ConfigError("match needs --image-a and --image-b");
  const ImageGrid a = load_view(ctx, opts.image_a);
  const ImageGrid b = load_view(ctx, opts.image_b);
  const auto& m = ctx.cfg.view.match;
  const auto& u = ctx.cfg.view.uot;

  const matching::FeatureSet fa = matching::extract_features(a, m.grid, m.dim);
  const matching::FeatureSet fb = matching::extract_features(b, m.grid, m.dim);
  const ot::CostMatrix cost = matching::cosine_cost(fa, fb);
  const ot::MassVector mu_a = matching::uniform_masses(fa.count());
  const ot::MassVector mu_b = matching::uniform_masses(fb.count());
  const ot::UotSolution sol = u.balanced() ? ot::solve_balanced(cost, mu_a, mu_b, u.eta, u.max_iter, u.tol)
                                           : ot::solve_uot(cost, mu_a, mu_b, u);

  json rows = json::array();
  for (Eigen::Index i = 0; i < sol.plan.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < sol.plan.cols(); ++j) row.push_back(sol.plan(i, j));
    rows.push_back(std::move(row));
  }
  const Eigen::VectorXd row_sums = sol.plan.row_sums();
  const Eigen::VectorXd col_sums = sol.plan.col_sums();
  write_json(ctx.out / "plan.json",
             {{"config_hash", ctx.meta.config_hash},
              {"seed", ctx.meta.seed},
              {"plan", rows},
              {"row_sums", std::vector<double>(row_sums.begin(), row_sums.end())},
              {"col_sums", std::vector<double>(col_sums.begin(), col_sums.end())},
              {"iterations", sol.iterations},
              {"converged", sol.converged},
              {"objective", sol.objective}});

  json links = json::array();
  for (const matching::MatchLink& link :
       matching::top_matches(sol.plan, fa, fb, static_cast<std::size_t>(ctx.cfg.top_k))) {
    links.push_back({{"row", link.row}, {"col", link.col},
                     {"si", link.source.y}, {"sj", link.source.x},
                     {"ti", link.target.y}, {"tj", link.target.x}, {"w", link.weight}});
  }
  write_json(ctx.out / "links.json", {{"config_hash", ctx.meta.config_hash}, {"seed", ctx.meta.seed}, {"links", links}});
  log << "matched in " << sol.iterations << " iterations" << (sol.converged ? "" : " (not converged)") << ", "
      << links.size() << " links\n";
}

void cmd_calibrate(const CommandOptions& opts, std::ostream& log) {
  const Context ctx = load_context(opts);
  const auto& cfg = ctx.cfg;
  const render::VoxelField field = load_scene(ctx, ctx.path_or(opts.scene, "scene.vox"));
  const fs::path manifest_path = ctx.path_or(opts.views, "poses.json");
  const PoseManifest truths = read_manifest(manifest_path);

  std::vector<ImageGrid> real;
  for (const PoseEntry& e : truths.entries) {
    if (e.image.empty()) throw InvalidInput(manifest_path.string() + ": pose " + std::to_string(e.id) + " has no image");
    real.push_back(load_view(ctx, manifest_path.parent_path() / e.image));
  }

  PoseManifest initial;
  initial.meta = ctx.meta;
  if (!opts.initial.empty()) {
    for (PoseEntry& e : read_manifest(opts.initial).entries) initial.entries.push_back({e.id, e.pose, {}});
    require_same_ids(initial, truths, "initial vs views");
  } else {
    for (const PoseEntry& e : truths.entries) initial.entries.push_back({e.id, initial_pose(cfg, e), {}});
  }

  const Eigen::Index l = cfg.view.match.feature_count();
  std::vector<double> training_curve;
  calib::Regressor reg(1, 1);
  auto t0 = std::chrono::steady_clock::now();
  if (!opts.regressor.empty()) {
    reg = io::read_regressor(opts.regressor).regressor;
    if (reg.input_width() != l * l) {
      throw ConfigError(opts.regressor.string() + ": regressor takes " + std::to_string(reg.input_width()) +
                        " inputs but the matching config gives " + std::to_string(l * l));
    }
    log << "loaded regressor " << opts.regressor.string() << '\n';
  } else {
    calib::TrainResult trained = calib::train_regressor(field, cfg.training, cfg.view);
    reg = std::move(trained.regressor);
    training_curve = std::move(trained.epoch_mean_loss);
    const long steps = static_cast<long>(cfg.training.pairs_per_epoch) * cfg.training.epochs;
    io::write_regressor(ctx.out / "regressor.bin", {reg, cfg.training.seed, steps}, ctx.meta);
    log << "trained regressor: " << steps << " steps, epoch loss " << std::setprecision(4)
        << training_curve.front() << " -> " << training_curve.back() << " (" << std::setprecision(3)
        << seconds_since(t0) << " s)\n";
  }

  PoseManifest estimates;
  estimates.meta = ctx.meta;
  json views = json::array();
  const calib::CalibrationOptions copts{cfg.calibration.refine, cfg.calibration.refine_cfg};
  for (std::size_t k = 0; k < truths.entries.size(); ++k) {
    t0 = std::chrono::steady_clock::now();
    const calib::ViewCalibration vc =
        calib::calibrate_view(field, reg, initial.entries[k].pose, real[k], cfg.view, copts);
    const int id = truths.entries[k].id;
    estimates.entries.push_back({id, vc.final, {}});
    views.push_back({{"id", id},
                     {"calibration_accepted", vc.calibration_accepted},
                     {"loss_initial", vc.loss_initial},
                     {"loss_calibrated", vc.loss_calibrated},
                     {"loss_final", vc.loss_final},
                     {"refine_curve", vc.refine_curve}});
    const auto before = geometry::pose_error(vc.initial, truths.entries[k].pose);
    const auto after = geometry::pose_error(vc.final, truths.entries[k].pose);
    log << "view " << id << ": rot " << std::setprecision(4) << before.rot_deg << " -> " << after.rot_deg
        << " deg, trans " << before.trans << " -> " << after.trans << " (" << std::setprecision(3)
        << seconds_since(t0) << " s)\n";
  }

  const ErrorReport report = evaluate_manifests(estimates, truths, &initial, ctx.meta);
  json doc = report_json(report);
  doc["training_curve"] = training_curve;
  doc["views"] = views;
  write_json(ctx.out / "initial.json", manifest_json(initial));
  write_json(ctx.out / "estimates.json", manifest_json(estimates));
  write_json(ctx.out / "report.json", doc);
  write_text(ctx.out / "report.csv", report_csv(report));
  log << "mean rotation error " << std::setprecision(4) << report.initial->mean_rot_deg << " -> "
      << report.final.mean_rot_deg << " deg, translation " << report.initial->mean_trans << " -> "
      << report.final.mean_trans << '\n';
}

void cmd_evaluate(const CommandOptions& opts, std::ostream& log) {
  if (opts.estimates.empty() || opts.truths.empty()) throw ConfigError("evaluate needs --estimates and --truths");
  const PoseManifest estimates = read_manifest(opts.estimates);
  const PoseManifest truths = read_manifest(opts.truths);
  std::optional<PoseManifest> initial;
  if (!opts.initial.empty()) initial = read_manifest(opts.initial);

  // Without a config the provenance of the estimates carries over.
  io::RunMetadata meta = estimates.meta;
  fs::path out = opts.out.empty() ? fs::path("out") : opts.out;
  if (!opts.config.empty()) {
    const Context ctx = load_context(opts);
    meta = ctx.meta;
    out = ctx.out;
  } else {
    if (opts.seed) meta.seed = *opts.seed;
    fs::create_directories(out);
  }
  const ErrorReport report = evaluate_manifests(estimates, truths, initial ? &*initial : nullptr, meta);
  write_json(out / "evaluation.json", report_json(report));
  write_text(out / "evaluation.csv", report_csv(report));
  log << "mean rotation error " << report.final.mean_rot_deg << " deg, translation " << report.final.mean_trans
      << " over " << report.ids.size() << " poses\n";
}

void cmd_pipeline(const CommandOptions& opts, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  CommandOptions stage = opts;
  stage.scene.clear();
  stage.views.clear();
  stage.poses.clear();
  cmd_gen_scene(stage, log);
  cmd_render_views(stage, log);
  cmd_calibrate(stage, log);
  log << "pipeline finished in " << std::setprecision(4) << seconds_since(t0) << " s\n";
}

}  // namespace viewcal::cli
