#include "condmall/model_io.hpp"

#include <fstream>

namespace condmall {

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& message) {
  throw Error(ErrorCode::InvalidModel, path + ": " + message);
}

const nlohmann::json& field(const nlohmann::json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) bad(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) bad(path + "." + key, "missing");
  return *it;
}

Eigen::VectorXd numbers(const nlohmann::json& arr, const std::string& path) {
  if (!arr.is_array()) bad(path, "expected an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) bad(path + "[" + std::to_string(i) + "]", "expected a number");
    v(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
  }
  return v;
}

}  // namespace

ModelPtr<double> model_from_json(const nlohmann::json& j, ModelOptions options) {
  const auto& lat = field(j, "latent", "$");
  LatentSpace latent;
  latent.probs = numbers(field(lat, "probs", "$.latent"), "$.latent.probs");
  if (lat.contains("labels")) {
    const auto& labels = lat["labels"];
    if (!labels.is_array()) bad("$.latent.labels", "expected an array");
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i].is_string()) latent.labels.push_back(labels[i].get<std::string>());
      else latent.labels.push_back(labels[i].dump());
    }
  } else {
    for (Eigen::Index z = 0; z < latent.probs.size(); ++z) latent.labels.push_back(std::to_string(z));
  }
  if (lat.contains("payload")) {
    Eigen::VectorXd p = numbers(lat["payload"], "$.latent.payload");
    latent.payload.assign(p.data(), p.data() + p.size());
  }
  const auto& comps = field(j, "components", "$");
  if (!comps.is_array()) bad("$.components", "expected an array");
  std::vector<ComponentSpace> components;
  for (std::size_t a = 0; a < comps.size(); ++a) {
    std::string path = "$.components[" + std::to_string(a) + "]";
    ComponentSpace c;
    c.label = comps[a].value("label", std::to_string(a));
    c.values = numbers(field(comps[a], "values", path), path + ".values");
    const auto& rows = field(comps[a], "cond_pmf", path);
    if (!rows.is_array()) bad(path + ".cond_pmf", "expected an array of rows");
    c.cond_pmf.resize(static_cast<Eigen::Index>(rows.size()), c.values.size());
    for (std::size_t z = 0; z < rows.size(); ++z) {
      std::string rp = path + ".cond_pmf[" + std::to_string(z) + "]";
      Eigen::VectorXd row = numbers(rows[z], rp);
      if (row.size() != c.values.size()) {
        bad(rp, "row has " + std::to_string(row.size()) + " entries, expected " + std::to_string(c.values.size()));
      }
      c.cond_pmf.row(static_cast<Eigen::Index>(z)) = row.transpose();
    }
    components.push_back(std::move(c));
  }
  return ProductModel::create(std::move(latent), std::move(components), options);
}

ModelPtr<double> load_model_file(const std::string& path, ModelOptions options) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open model file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidModel, path + ": " + e.what());
  }
  return model_from_json(j, options);
}

nlohmann::json model_to_json(const ProductModel& model) {
  nlohmann::json j;
  const auto& lat = model.latent();
  j["latent"]["probs"] = std::vector<double>(lat.probs.data(), lat.probs.data() + lat.probs.size());
  j["latent"]["labels"] = lat.labels;
  if (!lat.payload.empty()) j["latent"]["payload"] = lat.payload;
  j["components"] = nlohmann::json::array();
  for (const auto& c : model.components()) {
    nlohmann::json cj;
    cj["label"] = c.label;
    cj["values"] = std::vector<double>(c.values.data(), c.values.data() + c.values.size());
    cj["cond_pmf"] = nlohmann::json::array();
    for (Eigen::Index z = 0; z < c.cond_pmf.rows(); ++z) {
      Eigen::VectorXd row = c.cond_pmf.row(z).transpose();
      cj["cond_pmf"].push_back(std::vector<double>(row.data(), row.data() + row.size()));
    }
    j["components"].push_back(std::move(cj));
  }
  return j;
}

nlohmann::json functional_to_json(const Functional& f) {
  const auto& t = f.table();
  return {{"z_free", f.z_free()}, {"table", std::vector<double>(t.data(), t.data() + t.size())}};
}

Functional functional_from_json(const ModelPtr<double>& model, const nlohmann::json& j) {
  Eigen::VectorXd t = numbers(field(j, "table", "$"), "$.table");
  Functional f(model, std::move(t));
  if (j.contains("z_free") && j["z_free"].get<bool>() != f.z_free()) {
    throw Error(ErrorCode::InvalidArgument, "$.z_free: flag disagrees with the table");
  }
  return f;
}

}  // namespace condmall
