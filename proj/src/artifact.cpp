#include "ganov/artifact.hpp"

#include <bit>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "ganov/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "tensor blobs are little-endian; big-endian hosts unsupported");

namespace fs = std::filesystem;
using nlohmann::json;

namespace ganov {

const Tensor& Artifact::tensor(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end())
    throw IoError("artifact: missing tensor '" + name + "'");
  return it->second;
}

double Artifact::scalar(const std::string& name) const {
  auto it = manifest.scalar_index.find(name);
  if (it == manifest.scalar_index.end())
    throw IoError("artifact: missing scalar '" + name + "'");
  return it->second;
}

std::string Artifact::str(const std::string& name) const {
  auto it = manifest.string_index.find(name);
  if (it == manifest.string_index.end())
    throw IoError("artifact: missing string '" + name + "'");
  return it->second;
}

ArtifactManifest save_artifact(const std::string& dir, const std::string& kind,
                               const std::map<std::string, const Tensor*>& tensors,
                               const std::map<std::string, double>& scalars,
                               const std::map<std::string, std::string>& strings) {
  if (kind != "generator" && kind != "discriminator" && kind != "hypersphere")
    throw ValidationError("save_artifact: unknown kind '" + kind + "'");
  fs::create_directories(dir);

  ArtifactManifest m;
  m.kind = kind;
  m.scalar_index = scalars;
  m.string_index = strings;

  std::ofstream blob(fs::path(dir) / "tensors.bin", std::ios::binary);
  if (!blob) throw IoError("save_artifact: cannot write tensors.bin in " + dir);
  int64_t offset = 0;
  for (const auto& [name, t] : tensors) {
    TensorMeta meta;
    meta.shape = t->shape;
    meta.byte_offset = offset;
    meta.element_count = t->numel();
    m.tensor_index[name] = meta;
    blob.write(reinterpret_cast<const char*>(t->ptr()),
               static_cast<std::streamsize>(t->numel() * sizeof(float)));
    offset += t->numel() * static_cast<int64_t>(sizeof(float));
  }
  blob.close();

  json j;
  j["kind"] = m.kind;
  j["format_version"] = m.format_version;
  j["scalars"] = m.scalar_index;
  j["strings"] = m.string_index;
  json jt = json::object();
  for (const auto& [name, meta] : m.tensor_index)
    jt[name] = {{"shape", meta.shape},
                {"byte_offset", meta.byte_offset},
                {"element_count", meta.element_count}};
  j["tensors"] = jt;

  std::ofstream mf(fs::path(dir) / "manifest.json");
  if (!mf) throw IoError("save_artifact: cannot write manifest.json in " + dir);
  mf << j.dump(2) << "\n";
  return m;
}

Artifact load_artifact(const std::string& dir) {
  std::ifstream mf(fs::path(dir) / "manifest.json");
  if (!mf) throw IoError("load_artifact: no manifest.json in '" + dir + "'");
  json j;
  try {
    mf >> j;
  } catch (const json::exception& e) {
    throw IoError("load_artifact: bad manifest.json: " + std::string(e.what()));
  }

  Artifact a;
  a.manifest.kind = j.at("kind").get<std::string>();
  a.manifest.format_version = j.at("format_version").get<int>();
  if (a.manifest.format_version != kArtifactFormatVersion)
    throw IoError("load_artifact: format_version " +
                  std::to_string(a.manifest.format_version) +
                  " incompatible with supported version " +
                  std::to_string(kArtifactFormatVersion));
  a.manifest.scalar_index = j.at("scalars").get<std::map<std::string, double>>();
  if (j.contains("strings"))
    a.manifest.string_index = j.at("strings").get<std::map<std::string, std::string>>();

  std::ifstream blob(fs::path(dir) / "tensors.bin", std::ios::binary);
  if (!blob) throw IoError("load_artifact: no tensors.bin in '" + dir + "'");
  blob.seekg(0, std::ios::end);
  int64_t blob_size = blob.tellg();

  for (auto& [name, jmeta] : j.at("tensors").items()) {
    TensorMeta meta;
    meta.shape = jmeta.at("shape").get<std::vector<int64_t>>();
    meta.byte_offset = jmeta.at("byte_offset").get<int64_t>();
    meta.element_count = jmeta.at("element_count").get<int64_t>();
    if (Tensor::numel_of(meta.shape) != meta.element_count)
      throw IoError("load_artifact: tensor '" + name + "' shape/count mismatch");
    int64_t end = meta.byte_offset +
                  meta.element_count * static_cast<int64_t>(sizeof(float));
    if (end > blob_size)
      throw IoError("load_artifact: tensor '" + name +
                    "' extends past end of tensors.bin (truncated blob?)");
    Tensor t(meta.shape);
    blob.seekg(meta.byte_offset);
    blob.read(reinterpret_cast<char*>(t.ptr()),
              static_cast<std::streamsize>(meta.element_count * sizeof(float)));
    if (!blob)
      throw IoError("load_artifact: read failure on tensor '" + name + "'");
    a.manifest.tensor_index[name] = meta;
    a.tensors.emplace(name, std::move(t));
  }
  return a;
}

}  // namespace ganov
