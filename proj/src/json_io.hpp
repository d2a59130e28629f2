#pragma once

// JSON mapping of configs and tensors, shared by the checkpoint and run-spec
// readers. Config readers start from the struct defaults, so every key is
// optional; unknown keys are rejected to catch typos.

#include <initializer_list>
#include <string>

#include <json.hpp>

#include "ckm/deep.hpp"
#include "ckm/shallow.hpp"

namespace ckm::json_io {

using nlohmann::json;

void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed,
                         const std::string& section);

json tensor_to_json(const Tensor& t);
Tensor tensor_from_json(const json& j);

json mlp_to_json(const Mlp& mlp);
Mlp mlp_from_json(const json& j);

json to_json(const ShallowConfig& cfg);
ShallowConfig shallow_from_json(const json& j, ShallowConfig base = {});

json to_json(const TrainConfig& cfg);
TrainConfig train_from_json(const json& j, TrainConfig base = {});

std::string to_string(AnnealUnit unit);
AnnealUnit anneal_unit_from_string(const std::string& name);

}  // namespace ckm::json_io
