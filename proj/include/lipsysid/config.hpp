#pragma once

#include <map>
#include <string>

namespace lipsysid {

// Flat key = value file with optional [section] headers; sectioned keys are
// exposed as "section.key". Lines starting with '#' are comments.
std::map<std::string, std::string> load_key_value_file(const std::string& path);

// Writes the resolved configuration next to every output artifact so a run
// can be reproduced from its own directory.
void write_key_value_file(const std::map<std::string, std::string>& kv, const std::string& path);

}  // namespace lipsysid
