#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "helipad/detect.hpp"
#include "helipad/servo.hpp"
#include "helipad/sim.hpp"
#include "helipad/track.hpp"

namespace helipad {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class KnobType { Real, Integer, Text };

struct Knob {
  std::string key;
  KnobType type;
  std::string default_value;
  std::string help;
};

/// Every configuration key with its default.
const std::vector<Knob>& knobs();

/// Flat key-value configuration. Unknown keys and unparsable values are rejected.
class RunConfig {
 public:
  RunConfig();

  void set(const std::string& key, const std::string& value);
  /// "key=value" form used by --set.
  void set_assignment(const std::string& assignment);
  /// `key = value` lines; '#' starts a comment.
  void load_file(const std::filesystem::path& path);
  void load_text(const std::string& text, const std::string& source = "<text>");

  double real(const std::string& key) const;
  long long integer(const std::string& key) const;
  const std::string& text(const std::string& key) const;

  /// Table of all knobs and defaults, for --help.
  static std::string describe();

 private:
  const Knob& knob(const std::string& key) const;
  std::map<std::string, std::string> values_;
};

DetectConfig detect_config(const RunConfig& c);
TrackParams track_params(const RunConfig& c);
SupervisorConfig supervisor_config(const RunConfig& c);
ServoConfig servo_config(const RunConfig& c);
PinholeCamera camera(const RunConfig& c);
HelipadSpec helipad_spec(const RunConfig& c);
PadPose pad_pose(const RunConfig& c);
SimConfig sim_config(const RunConfig& c);
QuadState initial_state(const RunConfig& c);
/// Complete loop configuration; loads s* from servo.reference when that is set.
LoopConfig loop_config(const RunConfig& c);

}  // namespace helipad
