#pragma once

#include <iosfwd>
#include <string>

#include "json.hpp"

#include "mmd/design.hpp"
#include "mmd/engine.hpp"

namespace mmd {

using json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

// Shortest decimal that parses back to the same double.
std::string format_double(double v);

json design_to_json(const Design& d);
Design design_from_json(const json& j);
Design read_design_file(const std::string& path);

void write_trajectory_csv(std::ostream& os, const Trajectory& tr);
Trajectory read_trajectory_csv(std::istream& is);
Trajectory read_trajectory_file(const std::string& path);

json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace mmd
