#ifndef GANOV_DATASET_HPP
#define GANOV_DATASET_HPP

#include <optional>
#include <string>
#include <vector>

#include "ganov/config.hpp"
#include "ganov/tensor.hpp"

namespace ganov {

// In-memory image collection, every item (C,H,W) in [-1,1].
struct Dataset {
  std::vector<Tensor> items;
  std::string source_id;

  int64_t count() const { return static_cast<int64_t>(items.size()); }

  // Items stacked into one (N,C,H,W) tensor.
  Tensor stacked() const;
};

// Decodes every PNG/JPEG under `directory` (lexicographic filename order),
// cover-resizes + center-crops to `shape`, scales pixels to [-1,1].
Dataset ingest_dataset(const std::string& directory, const ImageShape& shape,
                       std::optional<int64_t> limit = std::nullopt);

// Seeded sampling of `parts` pairwise disjoint subsets of `part_size` items.
std::vector<Dataset> split_disjoint(const Dataset& dataset, int64_t parts,
                                    int64_t part_size, int64_t seed);

}  // namespace ganov

#endif
