#pragma once

// Instance JSON:
//   {"K": int, "M": int, "arm_sets": [[int, ...], ...],
//    "means": [{"client": int, "arm": int, "mu": float}, ...]}
// Indices are 1-based. Unknown fields, duplicate or missing (client, arm)
// entries and means for arms outside S_client are rejected.

#include <filesystem>
#include <string>
#include <string_view>

#include "hetbai/instance.hpp"

namespace hetbai {

std::string instance_to_json(const ProblemInstance& instance, int indent = 2);
ProblemInstance instance_from_json(std::string_view text);

ProblemInstance load_instance(const std::filesystem::path& path);
void save_instance(const ProblemInstance& instance,
                   const std::filesystem::path& path);

}  // namespace hetbai
