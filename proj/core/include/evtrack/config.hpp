#pragma once

// Flat `key = value` run configuration. Every key has a documented default;
// unknown keys and unparsable values are hard errors.

#include <evtrack/blink.hpp>
#include <evtrack/sim.hpp>
#include <evtrack/tracker.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace evtrack {

struct RunConfig {
  TrackerConfig tracker;
  BlinkConfig blink;
  SceneConfig scene;
  int gaze_degree = 2;

  void validate() const;
};

struct ConfigKey {
  std::string name;
  std::string default_value;
  std::string doc;
};

/// All keys with their defaults, in documentation order.
const std::vector<ConfigKey>& config_keys();

/// Throws Error{config} for an unknown key or a bad value.
void set_config_value(RunConfig& config, std::string_view key, std::string_view value);
std::string get_config_value(const RunConfig& config, std::string_view key);

/// Applies every `key = value` line; '#' starts a comment.
void apply_config_text(RunConfig& config, std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

/// `key = value` dump of the full configuration, one documented key per line.
std::string describe_config(const RunConfig& config);

}  // namespace evtrack
