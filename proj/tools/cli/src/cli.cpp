#include "viewcal_cli/cli.hpp"

#include <functional>
#include <ostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "viewcal/error.hpp"

namespace viewcal::cli {

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Camera pose calibration by view matching on synthetic radiance fields", "viewcal"};
  app.require_subcommand(1);

  CommandOptions opts;
  std::uint64_t seed = 0;
  int count = 0;
  const auto common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config, "experiment config (JSON)");
    sub->add_option("--seed", seed, "master seed, overrides the config");
    sub->add_option("--out", opts.out, "output directory, overrides the config");
  };

  std::function<void(const CommandOptions&, std::ostream&)> command;
  const auto add = [&](const char* name, const char* help, auto fn) {
    CLI::App* sub = app.add_subcommand(name, help);
    common(sub);
    sub->callback([&command, fn] { command = fn; });
    return sub;
  };

  add("gen-scene", "build the voxel scene from the config primitives", cmd_gen_scene)
      ->add_option("--scene", opts.scene, "output scene file");

  CLI::App* render = add("render-views", "render ground-truth views and their pose manifest", cmd_render_views);
  render->add_option("--scene", opts.scene, "scene file");
  render->add_option("--poses", opts.poses, "render at these saved poses");
  render->add_option("--count", count, "number of sampled views (default: calibration.views)");

  CLI::App* match = add("match", "match two images and write the plan and top links", cmd_match);
  match->add_option("--image-a", opts.image_a, "source image (PPM)")->required();
  match->add_option("--image-b", opts.image_b, "target image (PPM)")->required();

  CLI::App* calibrate = add("calibrate", "calibrate initial poses against the real views", cmd_calibrate);
  calibrate->add_option("--scene", opts.scene, "scene file");
  calibrate->add_option("--views", opts.views, "pose manifest of the real views");
  calibrate->add_option("--initial", opts.initial, "initial poses instead of generated ones");
  calibrate->add_option("--regressor", opts.regressor, "trained regressor instead of training one");

  CLI::App* evaluate = add("evaluate", "pose errors of estimates against truths", cmd_evaluate);
  evaluate->add_option("--estimates", opts.estimates, "estimated poses")->required();
  evaluate->add_option("--truths", opts.truths, "ground-truth poses")->required();
  evaluate->add_option("--initial", opts.initial, "starting poses for the init columns");

  CLI::App* pipeline = add("pipeline", "gen-scene, render-views and calibrate in one go", cmd_pipeline);
  pipeline->add_option("--initial", opts.initial, "initial poses instead of generated ones");
  pipeline->add_option("--regressor", opts.regressor, "trained regressor instead of training one");

  // CLI11 consumes a reversed argument vector without the program name.
  std::vector<std::string> rest(args.rbegin(), args.rend());
  if (!rest.empty()) rest.pop_back();
  try {
    app.parse(rest);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kConfigError;
  }

  for (CLI::App* sub : app.get_subcommands()) {
    if (sub->count("--seed")) opts.seed = seed;
    if (sub->get_name() == "render-views" && sub->count("--count")) opts.count = count;
  }

  try {
    command(opts, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kNumericError;
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  }
  return kOk;
}

}  // namespace viewcal::cli
