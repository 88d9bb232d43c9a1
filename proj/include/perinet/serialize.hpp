#pragma once

#include <json.hpp>
#include <string>

#include "perinet/model.hpp"

namespace perinet {

using Json = nlohmann::json;

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j, const char* what);

Json network_to_json(const NetworkSpec& net);
NetworkSpec network_from_json(const Json& j);

Json kernel_to_json(const PeriodicKernel& kernel);
PeriodicKernel kernel_from_json(const Json& j);

Json jump_rate_to_json(const JumpRate& rate);
JumpRate jump_rate_from_json(const Json& j);

Json model_to_json(const ModelSpec& spec);
ModelSpec model_from_json(const Json& j);

// Parse helpers that turn nlohmann exceptions into config_error with context.
Json parse_json(const std::string& text, const std::string& what = "input");
Json load_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);

}  // namespace perinet
