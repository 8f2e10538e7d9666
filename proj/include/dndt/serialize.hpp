#pragma once

// JSON documents for trained models.
//   {"format": "dndt-model", "version": 1, ...}
//   {"format": "dndt-forest", "version": 1, "subsets": [...], "trees": [<dndt-model>...]}
//   {"format": "dndt-cart", "version": 1, ...}
// Doubles are written in shortest round-trip form, so save/load is exact.

#include <string>
#include <variant>

#include "dndt/cart.hpp"
#include "dndt/forest.hpp"
#include "dndt/model.hpp"

namespace dndt {

std::string model_to_json(const DndtModel& model);
DndtModel model_from_json(const std::string& text);

std::string forest_to_json(const ForestModel& forest);
ForestModel forest_from_json(const std::string& text);

std::string cart_to_json(const CartTree& tree);
CartTree cart_from_json(const std::string& text);

using AnyModel = std::variant<DndtModel, ForestModel, CartTree>;

// Dispatches on the "format" field. Throws DataError (Parse / Schema).
AnyModel any_model_from_json(const std::string& text);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace dndt
