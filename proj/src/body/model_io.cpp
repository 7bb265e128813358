#include "sesdf/body/model_io.hpp"

#include <fstream>

namespace sesdf {

using nlohmann::json;

namespace {

json fields_to_json(const std::vector<std::vector<Vec3>>& basis) {
  json out = json::array();
  for (const auto& field : basis) {
    json flat = json::array();
    for (const Vec3& d : field) {
      flat.push_back(d.x());
      flat.push_back(d.y());
      flat.push_back(d.z());
    }
    out.push_back(std::move(flat));
  }
  return out;
}

const json& require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw Error(std::string("body model file: missing field '") + key + "'");
  return j.at(key);
}

std::vector<std::vector<Vec3>> fields_from_json(const json& j, const char* name) {
  if (!j.is_array()) throw Error(std::string("body model file: '") + name + "' must be an array");
  std::vector<std::vector<Vec3>> out;
  for (const json& flat : j) {
    if (!flat.is_array() || flat.size() % 3 != 0) {
      throw Error(std::string("body model file: '") + name + "' entries must be flat xyz arrays");
    }
    std::vector<Vec3> field(flat.size() / 3);
    for (std::size_t i = 0; i < field.size(); ++i) {
      field[i] = {flat[3 * i].get<double>(), flat[3 * i + 1].get<double>(), flat[3 * i + 2].get<double>()};
    }
    out.push_back(std::move(field));
  }
  return out;
}

}  // namespace

json model_to_json(const BodyModel& model) {
  json j;
  json tv = json::array();
  for (const Vec3& v : model.template_mesh.vertices) tv.push_back({v.x(), v.y(), v.z()});
  j["template_vertices"] = std::move(tv);
  json faces = json::array();
  for (const Face& f : model.template_mesh.faces) faces.push_back({f[0], f[1], f[2]});
  j["faces"] = std::move(faces);
  j["shape_basis"] = fields_to_json(model.shape_basis);
  j["expr_basis"] = fields_to_json(model.expr_basis);
  j["pose_basis"] = fields_to_json(model.pose_basis);
  json reg = json::array();
  for (int r = 0; r < model.num_joints(); ++r) {
    for (const RegressorEntry& e : model.joint_regressor[r]) reg.push_back({r, e.vertex, e.weight});
  }
  j["joint_regressor"] = std::move(reg);
  json sw = json::array();
  for (Eigen::Index v = 0; v < model.skin_weights.rows(); ++v) {
    json row = json::array();
    for (Eigen::Index c = 0; c < model.skin_weights.cols(); ++c) row.push_back(model.skin_weights(v, c));
    sw.push_back(std::move(row));
  }
  j["skin_weights"] = std::move(sw);
  j["parents"] = model.parents;
  if (!model.joint_names.empty()) j["joint_names"] = model.joint_names;
  return j;
}

BodyModel model_from_json(const json& j) {
  BodyModel m;
  try {
    for (const json& v : require(j, "template_vertices")) {
      if (!v.is_array() || v.size() != 3) throw Error("body model file: template vertex must have 3 coordinates");
      m.template_mesh.vertices.emplace_back(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
    }
    for (const json& f : require(j, "faces")) {
      if (!f.is_array() || f.size() != 3) throw Error("body model file: faces must be index triples");
      m.template_mesh.faces.push_back({f[0].get<int>(), f[1].get<int>(), f[2].get<int>()});
    }
    m.shape_basis = fields_from_json(require(j, "shape_basis"), "shape_basis");
    m.expr_basis = fields_from_json(require(j, "expr_basis"), "expr_basis");
    m.pose_basis = fields_from_json(require(j, "pose_basis"), "pose_basis");
    m.parents = require(j, "parents").get<std::vector<int>>();
    const int nj = static_cast<int>(m.parents.size());
    m.joint_regressor.resize(nj);
    for (const json& t : require(j, "joint_regressor")) {
      if (!t.is_array() || t.size() != 3) throw Error("body model file: joint_regressor entries must be [row, vertex, weight]");
      const int row = t[0].get<int>();
      if (row < 0 || row >= nj) throw Error("body model file: joint_regressor row out of range");
      m.joint_regressor[row].push_back({t[1].get<int>(), t[2].get<double>()});
    }
    const json& sw = require(j, "skin_weights");
    m.skin_weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(sw.size()), nj);
    for (std::size_t v = 0; v < sw.size(); ++v) {
      if (!sw[v].is_array() || static_cast<int>(sw[v].size()) != nj) {
        throw Error("body model file: skin weight row " + std::to_string(v) + " has the wrong length");
      }
      for (int c = 0; c < nj; ++c) m.skin_weights(static_cast<Eigen::Index>(v), c) = sw[v][c].get<double>();
    }
    if (j.contains("joint_names")) m.joint_names = j.at("joint_names").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(std::string("body model file: ") + e.what());
  }
  m.validate();
  return m;
}

void save_model(const BodyModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << model_to_json(model).dump();
}

BodyModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

json params_to_json(const BodyParams& p) {
  json j;
  j["beta"] = std::vector<double>(p.beta.data(), p.beta.data() + p.beta.size());
  j["phi"] = std::vector<double>(p.phi.data(), p.phi.data() + p.phi.size());
  json theta = json::array();
  for (const Vec3& t : p.theta) theta.push_back({t.x(), t.y(), t.z()});
  j["theta"] = std::move(theta);
  j["translation"] = {p.translation.x(), p.translation.y(), p.translation.z()};
  return j;
}

BodyParams params_from_json(const json& j) {
  BodyParams p;
  try {
    const auto beta = j.at("beta").get<std::vector<double>>();
    const auto phi = j.at("phi").get<std::vector<double>>();
    p.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
    p.phi = Eigen::Map<const Eigen::VectorXd>(phi.data(), static_cast<Eigen::Index>(phi.size()));
    for (const json& t : j.at("theta")) p.theta.emplace_back(t[0].get<double>(), t[1].get<double>(), t[2].get<double>());
    const json& tr = j.at("translation");
    p.translation = {tr[0].get<double>(), tr[1].get<double>(), tr[2].get<double>()};
  } catch (const json::exception& e) {
    throw Error(std::string("body params: ") + e.what());
  }
  return p;
}

}  // namespace sesdf
