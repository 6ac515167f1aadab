#ifndef CONDMALL_MODEL_IO_HPP
#define CONDMALL_MODEL_IO_HPP

#include <string>

#include <json.hpp>

#include "condmall/model.hpp"

namespace condmall {

// Parses {"latent": {"probs": [...], "labels": [...], "payload": [...]},
//         "components": [{"label": "...", "values": [...], "cond_pmf": [[...], ...]}, ...]}.
// The first violation is reported as InvalidModel with a JSON path.
ModelPtr<double> model_from_json(const nlohmann::json& j, ModelOptions options = {});
ModelPtr<double> load_model_file(const std::string& path, ModelOptions options = {});
nlohmann::json model_to_json(const ProductModel& model);

// {"z_free": bool, "table": [...]}
nlohmann::json functional_to_json(const Functional& f);
Functional functional_from_json(const ModelPtr<double>& model, const nlohmann::json& j);

}  // namespace condmall

#endif  // CONDMALL_MODEL_IO_HPP
