// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "json.hpp"
#include "moeplan/trace.hpp"
#include "moeplan/types.hpp"

namespace moeplan {

// Line-delimited trace format, schema 1. The first line is a header object
//   {"schema":1,"num_experts":E,"experts_per_token":e,"batch":B,"layers":L,"iterations":N}
// followed by one record per (iteration, layer, token):
//   {"iter":0,"layer":0,"token":0,"experts":[1,5]}
// A non-null config object is embedded in the header for reproducibility.
void save_trace(const ActivationTrace& trace, const std::string& path,
                const nlohmann::json& config = nullptr);

// Errors carry the offending line number. Duplicate (iter,layer,token) keys,
// missing records, out-of-range or repeated expert ids, and wrong set sizes
// are all rejected.
ActivationTrace load_trace(const std::string& path);

// Placement documents: schema 1, strategy tag plus one dense row-major E x D
// share array per layer.
void save_placement(const Placement& placement, const std::string& path,
                    const nlohmann::json& config = nullptr);
Placement load_placement(const std::string& path);

void save_mapping(const NodeMapping& mapping, const std::string& path,
                  const nlohmann::json& config = nullptr);
NodeMapping load_mapping(const std::string& path);

}  // namespace moeplan
