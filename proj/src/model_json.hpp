#pragma once

// JSON helpers shared by the model serializers.

#include <json.hpp>
#include <string>

#include "idsbench/classifiers.hpp"
#include "idsbench/tree.hpp"

namespace idsbench::detail {

using Json = nlohmann::ordered_json;

Json model_header(Algorithm algorithm, std::size_t n_features);
Json nodes_to_json(const NodeList& nodes);
NodeList nodes_from_json(const Json& j);

std::unique_ptr<TrainedModel> tree_from_json(const Json& j);
std::unique_ptr<TrainedModel> forest_from_json(const Json& j);
std::unique_ptr<TrainedModel> boost_from_json(const Json& j);
std::unique_ptr<TrainedModel> gnb_from_json(const Json& j);
std::unique_ptr<TrainedModel> mlp_from_json(const Json& j);

}  // namespace idsbench::detail
