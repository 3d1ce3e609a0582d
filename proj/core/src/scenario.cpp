#include "cbi/scenario.hpp"

#include <cstdlib>

#include "cbi/error.hpp"
#include "cbi/json_io.hpp"

namespace cbi {

std::filesystem::path scenario_dir(const std::filesystem::path& fallback) {
  if (const char* env = std::getenv("CBI_SCENARIO_DIR"); env != nullptr && *env != '\0') {
    return env;
  }
  return fallback;
}

Scenario load_scenario(const std::string& name_or_path, const std::filesystem::path& dir) {
  std::filesystem::path path(name_or_path);
  if (!std::filesystem::is_regular_file(path)) {
    path = dir / (name_or_path + ".json");
    if (!std::filesystem::is_regular_file(path)) {
      throw SchemaError("unknown scenario \"" + name_or_path + "\" (looked in " + dir.string() +
                        ")");
    }
  }
  return scenario_from_json(read_json_file(path));
}

}  // namespace cbi
