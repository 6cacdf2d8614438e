#include <evtrack/config.hpp>

#include <evtrack/error.hpp>

#include <array>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <variant>

namespace evtrack {

namespace {

using Ref = std::variant<double*, int*, bool*>;

struct Entry {
  const char* name;
  const char* doc;
  std::function<Ref(RunConfig&)> bind;
};

template <typename T>
std::function<Ref(RunConfig&)> field(T* (*f)(RunConfig&)) {
  return [f](RunConfig& c) -> Ref { return f(c); };
}

#define EVTRACK_KEY(name, doc, expr) \
  Entry { name, doc, field(+[](RunConfig& c) { return &(c.expr); }) }

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      EVTRACK_KEY("gamma", "weight kept on the old fit when a frame arrives", tracker.fit.gamma),
      EVTRACK_KEY("gamma_prime", "weight kept on the old fit per event update", tracker.fit.gamma_prime),
      EVTRACK_KEY("delta", "event gating distance, pixels", tracker.fit.delta),
      EVTRACK_KEY("events_per_fit", "gated events per model update (N)", tracker.fit.events_per_fit),
      EVTRACK_KEY("refresh_period", "rank-1 updates between full re-inversions", tracker.fit.refresh_period),
      EVTRACK_KEY("use_events", "feed events to the tracker (false = frame-only)", tracker.use_events),
      EVTRACK_KEY("theta", "pupil threshold, intensity below", tracker.frames.theta),
      EVTRACK_KEY("sigma", "opening disk radius, pixels", tracker.frames.sigma),
      EVTRACK_KEY("t1", "eyelid clip lower bound", tracker.frames.t1),
      EVTRACK_KEY("t2", "eyelid clip upper bound", tracker.frames.t2),
      EVTRACK_KEY("t3", "glint threshold, intensity above", tracker.frames.t3),
      EVTRACK_KEY("rho_prime", "eyelid candidate radius around the pupil, pixels", tracker.frames.rho_prime),
      EVTRACK_KEY("rho_double_prime", "glint candidate radius around the pupil, pixels",
                  tracker.frames.rho_double_prime),
      EVTRACK_KEY("harris_k", "Harris response constant", tracker.frames.harris_k),
      EVTRACK_KEY("harris_rel_thresh", "Harris response kept above this fraction of the maximum",
                  tracker.frames.harris_rel_thresh),
      EVTRACK_KEY("blink_window", "eccentricity baseline length, frames", blink.window),
      EVTRACK_KEY("blink_lambda", "blink threshold in standard deviations", blink.lambda),
      EVTRACK_KEY("blink_follow_on", "frames flagged after a detected blink", blink.follow_on),
      EVTRACK_KEY("gaze_degree", "gaze polynomial degree", gaze_degree),
      EVTRACK_KEY("sim.width", "sensor width, pixels", scene.sensor.width),
      EVTRACK_KEY("sim.height", "sensor height, pixels", scene.sensor.height),
      EVTRACK_KEY("sim.eye_x", "pupil center column at central gaze", scene.eye_center.x),
      EVTRACK_KEY("sim.eye_y", "pupil center row at central gaze", scene.eye_center.y),
      EVTRACK_KEY("sim.eyeball_radius", "pupil rotation radius, pixels", scene.eyeball_radius),
      EVTRACK_KEY("sim.pupil_radius", "pupil radius, pixels", scene.pupil_radius),
      EVTRACK_KEY("sim.iris_radius", "iris radius, pixels", scene.iris_radius),
      EVTRACK_KEY("sim.pupil_intensity", "pupil gray level", scene.pupil_intensity),
      EVTRACK_KEY("sim.iris_intensity", "iris gray level", scene.iris_intensity),
      EVTRACK_KEY("sim.sclera_intensity", "sclera gray level", scene.sclera_intensity),
      EVTRACK_KEY("sim.glint_intensity", "glint gray level", scene.glint_intensity),
      EVTRACK_KEY("sim.eyelid_intensity", "eyelid skin gray level", scene.eyelid_intensity),
      EVTRACK_KEY("sim.lash_intensity", "eyelash gray level", scene.lash_intensity),
      EVTRACK_KEY("sim.eyelid_a", "eyelid margin row = a col^2 + g col + d", scene.eyelid.a),
      EVTRACK_KEY("sim.eyelid_g", "eyelid margin linear term", scene.eyelid.g),
      EVTRACK_KEY("sim.eyelid_d", "eyelid margin constant term", scene.eyelid.d),
      EVTRACK_KEY("sim.lash_spacing", "eyelash spacing along the margin, pixels", scene.lash_spacing),
      EVTRACK_KEY("sim.lash_size", "eyelash square side, pixels", scene.lash_size),
      EVTRACK_KEY("sim.glint_dx", "glint offset from the pupil center, columns", scene.glint_offset.x),
      EVTRACK_KEY("sim.glint_dy", "glint offset from the pupil center, rows", scene.glint_offset.y),
      EVTRACK_KEY("sim.glint_radius", "glint radius, pixels", scene.glint_radius),
      EVTRACK_KEY("sim.edge_width", "intensity ramp width across edges, pixels", scene.edge_width),
      EVTRACK_KEY("sim.contrast_threshold", "DVS log-intensity threshold", scene.contrast_threshold),
      EVTRACK_KEY("sim.frame_rate", "frame rate, Hz", scene.frame_rate),
      EVTRACK_KEY("sim.sample_rate", "internal event simulation rate, Hz", scene.sample_rate),
      EVTRACK_KEY("sim.event_jitter_us", "uniform event timestamp jitter, microseconds", scene.event_jitter_us),
      EVTRACK_KEY("sim.noise_rate", "background noise events per millisecond", scene.noise_rate),
      EVTRACK_KEY("screen.cx", "screen center column, screen pixels", scene.screen.cx),
      EVTRACK_KEY("screen.cy", "screen center row, screen pixels", scene.screen.cy),
      EVTRACK_KEY("screen.distance", "eye to screen distance, screen pixels", scene.screen.distance),
      EVTRACK_KEY("screen.width", "screen width, screen pixels", scene.screen.width),
      EVTRACK_KEY("screen.height", "screen height, screen pixels", scene.screen.height),
  };
  return table;
}

#undef EVTRACK_KEY

const Entry& find(std::string_view key) {
  for (const Entry& e : entries())
    if (key == e.name) return e;
  throw Error(ErrorCode::config, "unknown config key '" + std::string(key) + "'");
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse(std::string_view key, std::string_view v) {
  T out{};
  const char* end = v.data() + v.size();
  const auto r = std::from_chars(v.data(), end, out);
  if (v.empty() || r.ec != std::errc{} || r.ptr != end)
    throw Error(ErrorCode::config, "bad value '" + std::string(v) + "' for key '" + std::string(key) + "'");
  return out;
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), r.ptr);
}

}  // namespace

void RunConfig::validate() const {
  tracker.validate();
  blink.validate();
  scene.validate();
  if (gaze_degree < 1 || gaze_degree > 8) throw Error(ErrorCode::config, "gaze_degree must lie in [1, 8]");
}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> out;
    const RunConfig defaults;
    for (const Entry& e : entries()) out.push_back({e.name, get_config_value(defaults, e.name), e.doc});
    return out;
  }();
  return keys;
}

void set_config_value(RunConfig& config, std::string_view key, std::string_view value) {
  value = trim(value);
  const Ref ref = find(trim(key)).bind(config);
  std::visit(
      [&](auto* p) {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, bool>) {
          if (value == "true" || value == "1") {
            *p = true;
          } else if (value == "false" || value == "0") {
            *p = false;
          } else {
            throw Error(ErrorCode::config, "bad boolean '" + std::string(value) + "' for key '" + std::string(key) + "'");
          }
        } else {
          *p = parse<T>(key, value);
        }
      },
      ref);
}

std::string get_config_value(const RunConfig& config, std::string_view key) {
  RunConfig copy = config;
  const Ref ref = find(key).bind(copy);
  return std::visit(
      [](auto* p) -> std::string {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, bool>) return *p ? "true" : "false";
        else if constexpr (std::is_same_v<T, int>) return std::to_string(*p);
        else return format_double(*p);
      },
      ref);
}

void apply_config_text(RunConfig& config, std::string_view text) {
  std::size_t pos = 0;
  int line_no = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++line_no;
    if (const std::size_t hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (!line.empty()) {
      const std::size_t eq = line.find('=');
      if (eq == std::string_view::npos)
        throw Error(ErrorCode::config, "config line " + std::to_string(line_no) + " lacks '='");
      set_config_value(config, trim(line.substr(0, eq)), line.substr(eq + 1));
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  RunConfig config;
  apply_config_text(config, ss.str());
  return config;
}

std::string describe_config(const RunConfig& config) {
  std::string out;
  for (const Entry& e : entries()) {
    out += "# ";
    out += e.doc;
    out += "\n";
    out += e.name;
    out += " = ";
    out += get_config_value(config, e.name);
    out += "\n";
  }
  return out;
}

}  // namespace evtrack
