#include "afca/models/serialize.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace afca {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "afca-ensemble-1";

json spec_json(const ModelSpec& s) {
  return json{{"family", to_string(s.family)},
              {"layer_kind", to_string(s.layer_kind)},
              {"depth", to_string(s.depth)},
              {"n_assets", s.n_assets},
              {"n_chars", s.n_chars},
              {"n_factors", s.n_factors},
              {"beta_hidden", s.beta_hidden},
              {"factor_hidden", s.factor_hidden},
              {"seq_len", s.seq_len},
              {"batch_norm", s.batch_norm},
              {"hurst_as_characteristic", s.hurst_as_characteristic}};
}

ModelSpec spec_from_json(const json& j) {
  ModelSpec s;
  s.family = family_from_string(j.at("family").get<std::string>());
  s.layer_kind = layer_kind_from_string(j.at("layer_kind").get<std::string>());
  s.depth = depth_from_string(j.at("depth").get<std::string>());
  s.n_assets = j.at("n_assets").get<int>();
  s.n_chars = j.at("n_chars").get<int>();
  s.n_factors = j.at("n_factors").get<int>();
  s.beta_hidden = j.at("beta_hidden").get<std::vector<int>>();
  s.factor_hidden = j.at("factor_hidden").get<std::vector<int>>();
  s.seq_len = j.at("seq_len").get<int>();
  s.batch_norm = j.at("batch_norm").get<bool>();
  s.hurst_as_characteristic = j.at("hurst_as_characteristic").get<bool>();
  s.validate();
  return s;
}

json array_json(const std::string& name, const MatrixXd& m) {
  return json{{"name", name},
              {"shape", {m.rows(), m.cols()}},
              {"values", std::vector<double>(m.data(), m.data() + m.size())}};
}

BatchNormState<Real>& bn_state_of(Model& m) {
  return m.spec().family == Family::Simple ? m.simple().bn_state : m.conditional().bn_state;
}

}  // namespace

std::string to_json(const EnsembleModel& model) {
  if (model.members.size() != model.seeds.size()) throw StateError("ensemble seeds and members differ in count");
  json arrays = json::array();
  for (std::size_t k = 0; k < model.members.size(); ++k) {
    auto member = model.members[k];
    const std::string prefix = "m" + std::to_string(k) + "/";
    for (const auto& p : member.parameters()) arrays.push_back(array_json(prefix + p.name, *p.value));
    const auto& bn = bn_state_of(member);
    if (member.spec().batch_norm && bn.initialized) {
      arrays.push_back(array_json(prefix + "bn_state.running_mean", bn.running_mean));
      arrays.push_back(array_json(prefix + "bn_state.running_var", bn.running_var));
    }
  }
  json doc{{"format", kFormat}, {"spec", spec_json(model.spec)}, {"seeds", model.seeds}, {"arrays", arrays}};
  return doc.dump() + "\n";
}

EnsembleModel ensemble_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != kFormat) throw ParseError("unsupported model format");
    EnsembleModel out;
    out.spec = spec_from_json(doc.at("spec"));
    out.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();

    std::map<std::string, MatrixXd> arrays;
    for (const auto& a : doc.at("arrays")) {
      const auto shape = a.at("shape").get<std::vector<Eigen::Index>>();
      const auto values = a.at("values").get<std::vector<double>>();
      if (shape.size() != 2 || static_cast<std::size_t>(shape[0] * shape[1]) != values.size()) {
        throw ParseError("array '" + a.at("name").get<std::string>() + "' has inconsistent shape");
      }
      MatrixXd m(shape[0], shape[1]);
      std::copy(values.begin(), values.end(), m.data());
      arrays[a.at("name").get<std::string>()] = std::move(m);
    }

    auto take = [&](const std::string& name, MatrixXd& dst) {
      auto it = arrays.find(name);
      if (it == arrays.end()) throw ParseError("model file lacks array '" + name + "'");
      if (it->second.rows() != dst.rows() || it->second.cols() != dst.cols()) {
        throw ParseError("array '" + name + "' is " + shape_str(it->second) + ", expected " + shape_str(dst));
      }
      dst = std::move(it->second);
      arrays.erase(it);
    };

    for (std::size_t k = 0; k < out.seeds.size(); ++k) {
      auto member = Model::build(out.spec, out.seeds[k]);
      const std::string prefix = "m" + std::to_string(k) + "/";
      for (auto& p : member.parameters()) take(prefix + p.name, *p.value);
      auto& bn = bn_state_of(member);
      if (arrays.count(prefix + "bn_state.running_mean")) {
        bn.running_mean = MatrixXd::Zero(1, out.spec.n_factors);
        bn.running_var = MatrixXd::Zero(1, out.spec.n_factors);
        take(prefix + "bn_state.running_mean", bn.running_mean);
        take(prefix + "bn_state.running_var", bn.running_var);
        bn.initialized = true;
      }
      out.members.push_back(std::move(member));
    }
    if (!arrays.empty()) throw ParseError("model file has unexpected array '" + arrays.begin()->first + "'");
    return out;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed model file: ") + e.what());
  }
}

void save_model(const EnsembleModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model file " + path.string());
  out << to_json(model);
}

EnsembleModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read model file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ensemble_from_json(ss.str());
}

}  // namespace afca
