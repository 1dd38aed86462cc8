#pragma once

// Dataset directory: a JSON `manifest` plus one raw little-endian float32
// blob per array under blobs/<sample-id>/<array-name>.f32.

#include "abupt/core/blob.hpp"
#include "abupt/data/sample.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <set>
#include <string>
#include <vector>

namespace abupt::data {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline constexpr const char* kDatasetFormat = "abupt-dataset-1";
inline constexpr const char* kManifestName = "manifest";

struct DatasetConstants {
  double density = 1.0;          // kg / m^3
  double velocity = 1.0;         // m / s
  double reference_area = 1.0;   // m^2
  Vec3 flow_direction = Vec3::UnitX();
  Vec3 lift_direction = Vec3::UnitZ();
  double p_inf = 0.0;            // Pa
};

struct ArrayDescriptor {
  std::string path;  // relative to the dataset root
  std::string dtype = "f32";
  Index rows = 0;
  Index cols = 0;
  Index offset = 0;  // bytes
};

struct DatasetManifest {
  DatasetConstants constants;
  std::map<std::string, std::vector<std::string>> splits;
  std::map<std::string, std::map<std::string, ArrayDescriptor>> samples;

  const std::vector<std::string>& ids(const std::string& split) const {
    auto it = splits.find(split);
    if (it == splits.end()) throw InvalidArgument("dataset has no split '" + split + "'");
    return it->second;
  }

  void validate() const {
    std::set<std::string> seen;
    for (const auto& [split, ids] : splits) {
      for (const auto& id : ids) {
        if (!seen.insert(id).second) throw CorruptData("manifest: sample '" + id + "' appears in more than one split");
        if (!samples.contains(id)) throw CorruptData("manifest: split '" + split + "' references unknown sample '" + id + "'");
      }
    }
    for (const auto& [id, arrays] : samples) {
      for (const auto& [name, d] : arrays) {
        if (d.dtype != "f32") throw CorruptData("manifest: " + id + "/" + name + " has unsupported dtype " + d.dtype);
        if (d.rows < 0 || d.cols < 0 || d.offset < 0) throw CorruptData("manifest: " + id + "/" + name + " has a negative extent");
        if (d.path.empty() || fs::path(d.path).is_absolute() || d.path.find("..") != std::string::npos) {
          throw CorruptData("manifest: " + id + "/" + name + " has an invalid path");
        }
      }
    }
  }
};

inline json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

inline Vec3 json_vec(const json& j) {
  if (!j.is_array() || j.size() != 3) throw CorruptData("manifest: expected a 3-vector");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

inline json to_json(const DatasetManifest& m) {
  json j;
  j["format"] = kDatasetFormat;
  j["constants"] = {{"density", m.constants.density},
                    {"velocity", m.constants.velocity},
                    {"reference_area", m.constants.reference_area},
                    {"flow_direction", vec_json(m.constants.flow_direction)},
                    {"lift_direction", vec_json(m.constants.lift_direction)},
                    {"p_inf", m.constants.p_inf}};
  j["splits"] = m.splits;
  json samples = json::object();
  for (const auto& [id, arrays] : m.samples) {
    json a = json::object();
    for (const auto& [name, d] : arrays) {
      a[name] = {{"path", d.path}, {"dtype", d.dtype}, {"shape", {d.rows, d.cols}}, {"offset", d.offset}};
    }
    samples[id] = {{"arrays", a}};
  }
  j["samples"] = samples;
  return j;
}

inline DatasetManifest manifest_from_json(const json& j) {
  try {
    if (j.value("format", std::string()) != kDatasetFormat) throw CorruptData("manifest: unknown format");
    DatasetManifest m;
    const json& c = j.at("constants");
    m.constants.density = c.at("density").get<double>();
    m.constants.velocity = c.at("velocity").get<double>();
    m.constants.reference_area = c.at("reference_area").get<double>();
    m.constants.flow_direction = json_vec(c.at("flow_direction"));
    m.constants.lift_direction = json_vec(c.at("lift_direction"));
    m.constants.p_inf = c.at("p_inf").get<double>();
    m.splits = j.at("splits").get<std::map<std::string, std::vector<std::string>>>();
    for (const auto& [id, s] : j.at("samples").items()) {
      auto& arrays = m.samples[id];
      for (const auto& [name, d] : s.at("arrays").items()) {
        ArrayDescriptor ad;
        ad.path = d.at("path").get<std::string>();
        ad.dtype = d.at("dtype").get<std::string>();
        const auto shape = d.at("shape").get<std::vector<Index>>();
        if (shape.size() != 2) throw CorruptData("manifest: " + id + "/" + name + " shape must be 2-D");
        ad.rows = shape[0];
        ad.cols = shape[1];
        ad.offset = d.at("offset").get<Index>();
        arrays[name] = ad;
      }
    }
    m.validate();
    return m;
  } catch (const json::exception& e) {
    throw CorruptData(std::string("manifest: ") + e.what());
  }
}

inline DatasetManifest read_manifest(const fs::path& root) {
  const std::string text = io::read_file<IoError>(root / kManifestName);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw CorruptData(std::string("manifest is not valid JSON: ") + e.what());
  }
  return manifest_from_json(j);
}

inline void write_manifest(const fs::path& root, const DatasetManifest& m) {
  m.validate();
  io::write_file(root / kManifestName, to_json(m).dump(2) + "\n");
}

/// Writes the sample's blobs under `root` and returns their descriptors.
/// Optional arrays that are empty are omitted.
inline std::map<std::string, ArrayDescriptor> save_sample(const fs::path& root, const SimulationSample& s) {
  s.validate();
  std::map<std::string, ArrayDescriptor> out;
  for (const auto& [name, a] : s.arrays()) {
    if (a->empty()) continue;
    ArrayDescriptor d;
    d.path = "blobs/" + s.id + "/" + name + ".f32";
    d.rows = a->rows;
    d.cols = a->cols;
    io::write_file(root / d.path, io::encode_f32(a->values));
    out[name] = d;
  }
  return out;
}

inline SimulationSample load_sample(const fs::path& root, const DatasetManifest& m, const std::string& id) {
  auto it = m.samples.find(id);
  if (it == m.samples.end()) throw CorruptData("dataset has no sample '" + id + "'");
  SimulationSample s;
  s.id = id;
  for (const auto& [name, d] : it->second) {
    Array2* a = s.array(name);
    if (a == nullptr) throw CorruptData("sample " + id + ": unknown array '" + name + "'");
    const std::string bytes = io::read_file<CorruptData>(root / d.path);
    const auto need = static_cast<std::size_t>(d.offset + d.rows * d.cols * 4);
    if (bytes.size() != need) {
      throw CorruptData("sample " + id + ": blob " + d.path + " has " + std::to_string(bytes.size()) +
                        " bytes, descriptor requires " + std::to_string(need));
    }
    *a = Array2(d.rows, d.cols);
    io::decode_f32(bytes.data() + d.offset, a->values);
  }
  for (const char* required : {"geometry.pos", "surface.pos", "surface.p", "surface.tau", "volume.pos", "volume.p",
                               "volume.u", "volume.omega"}) {
    if (!it->second.contains(required)) throw CorruptData("sample " + id + ": missing array " + required);
  }
  s.validate();
  return s;
}

/// Writes every sample and the manifest.
inline DatasetManifest write_dataset(const fs::path& root, const DatasetConstants& constants,
                                     const std::map<std::string, std::vector<std::string>>& splits,
                                     const std::vector<SimulationSample>& samples) {
  DatasetManifest m;
  m.constants = constants;
  m.splits = splits;
  for (const auto& s : samples) m.samples[s.id] = save_sample(root, s);
  write_manifest(root, m);
  return m;
}

/// Read-only view of a dataset directory.
class Dataset {
 public:
  explicit Dataset(fs::path root) : root_(std::move(root)), manifest_(read_manifest(root_)) {}

  const fs::path& root() const { return root_; }
  const DatasetManifest& manifest() const { return manifest_; }
  const DatasetConstants& constants() const { return manifest_.constants; }
  SimulationSample load(const std::string& id) const { return load_sample(root_, manifest_, id); }

  std::vector<SimulationSample> load_split(const std::string& split) const {
    std::vector<SimulationSample> out;
    for (const auto& id : manifest_.ids(split)) out.push_back(load(id));
    return out;
  }

 private:
  fs::path root_;
  DatasetManifest manifest_;
};

/// Placeholder for readers of external simulation archives (VTK/VTP meshes
/// as distributed with public automotive datasets). Not provided.
inline SimulationSample import_external_sample(const fs::path& path) {
  throw InvalidArgument("import of external simulation formats is not supported: " + path.string());
}

}  // namespace abupt::data
