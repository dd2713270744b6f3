#pragma once

// JSON run configuration: model, solver and oracle settings in one file.
// Parsing is strict -- unknown keys anywhere raise ConfigError -- and
// render_config() emits the canonical form with every default filled in,
// so parse(render(parse(x))) == parse(x).

#include "msgw/hedin.hpp"
#include "msgw/model.hpp"
#include "msgw/oracle.hpp"

namespace msgw {

struct RunConfig {
  ModelSystem model;
  ScfConfig solver;
  OracleOptions oracle;
  bool oracle_audit = false;          // re-run the oracle at boson_cap+1 and report the shift
  std::vector<double> sweep_scales;   // coupling scales visited by the sweep command
};

RunConfig parse_config(const std::string& json_text);
RunConfig load_config_file(const std::string& path);
std::string render_config(const RunConfig& c);

}  // namespace msgw
