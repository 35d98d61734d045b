#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>

namespace viewcal::cli {

/// Everything the command line can say. Empty paths mean "use the default under the output
/// directory".
struct CommandOptions {
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out;
  std::filesystem::path scene;
  std::filesystem::path views;
  std::filesystem::path poses;
  std::optional<int> count;
  std::filesystem::path image_a;
  std::filesystem::path image_b;
  std::filesystem::path estimates;
  std::filesystem::path truths;
  std::filesystem::path initial;
  std::filesystem::path regressor;
};

// Each command writes its artifacts and prints a short progress log to `log`.
void cmd_gen_scene(const CommandOptions& opts, std::ostream& log);
void cmd_render_views(const CommandOptions& opts, std::ostream& log);
void cmd_match(const CommandOptions& opts, std::ostream& log);
void cmd_calibrate(const CommandOptions& opts, std::ostream& log);
void cmd_evaluate(const CommandOptions& opts, std::ostream& log);
void cmd_pipeline(const CommandOptions& opts, std::ostream& log);

}  // namespace viewcal::cli
