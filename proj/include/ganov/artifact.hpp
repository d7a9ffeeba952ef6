#ifndef GANOV_ARTIFACT_HPP
#define GANOV_ARTIFACT_HPP

#include <map>
#include <string>
#include <vector>

#include "ganov/tensor.hpp"

namespace ganov {

constexpr int kArtifactFormatVersion = 1;

struct TensorMeta {
  std::vector<int64_t> shape;
  int64_t byte_offset = 0;
  int64_t element_count = 0;
};

struct ArtifactManifest {
  std::string kind;  // generator | discriminator | hypersphere
  int format_version = kArtifactFormatVersion;
  std::map<std::string, TensorMeta> tensor_index;
  std::map<std::string, double> scalar_index;
  std::map<std::string, std::string> string_index;
};

// A directory of manifest.json + tensors.bin (raw little-endian float32).
struct Artifact {
  ArtifactManifest manifest;
  std::map<std::string, Tensor> tensors;

  const Tensor& tensor(const std::string& name) const;
  double scalar(const std::string& name) const;
  std::string str(const std::string& name) const;
};

ArtifactManifest save_artifact(const std::string& dir, const std::string& kind,
                               const std::map<std::string, const Tensor*>& tensors,
                               const std::map<std::string, double>& scalars,
                               const std::map<std::string, std::string>& strings = {});

// Throws IoError on version mismatch or truncated/missing tensor data.
Artifact load_artifact(const std::string& dir);

}  // namespace ganov

#endif
