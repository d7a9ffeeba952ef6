#include "ganov/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <numeric>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "ganov/errors.hpp"
#include "ganov/rng.hpp"

namespace fs = std::filesystem;

namespace ganov {

Tensor Dataset::stacked() const {
  if (items.empty()) throw ValidationError("stacked: empty dataset");
  const auto& s0 = items.front().shape;
  Tensor out({count(), s0[0], s0[1], s0[2]});
  int64_t stride = items.front().numel();
  for (int64_t i = 0; i < count(); ++i)
    std::copy(items[i].data.begin(), items[i].data.end(),
              out.data.begin() + i * stride);
  return out;
}

namespace {

bool has_image_ext(const fs::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), ::tolower);
  return e == ".png" || e == ".jpg" || e == ".jpeg";
}

// BGR uint8 -> (C,H,W) float in [-1,1], channel order RGB.
Tensor mat_to_tensor(const cv::Mat& img, const ImageShape& shape) {
  Tensor t({shape.channels, shape.height, shape.width});
  for (int64_t y = 0; y < shape.height; ++y) {
    const uint8_t* row = img.ptr<uint8_t>(static_cast<int>(y));
    for (int64_t x = 0; x < shape.width; ++x) {
      for (int64_t c = 0; c < shape.channels; ++c) {
        // OpenCV stores BGR; flip to RGB.
        uint8_t v = row[x * img.channels() + (img.channels() - 1 - c)];
        t.data[(c * shape.height + y) * shape.width + x] =
            static_cast<float>(v) / 127.5f - 1.0f;
      }
    }
  }
  return t;
}

}  // namespace

Dataset ingest_dataset(const std::string& directory, const ImageShape& shape,
                       std::optional<int64_t> limit) {
  if (!fs::is_directory(directory))
    throw IoError("ingest: '" + directory + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(directory))
    if (entry.is_regular_file() && has_image_ext(entry.path()))
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  Dataset ds;
  ds.source_id = directory;
  for (const auto& f : files) {
    if (limit && ds.count() >= *limit) break;
    int flags = shape.channels == 1 ? cv::IMREAD_GRAYSCALE : cv::IMREAD_COLOR;
    cv::Mat img = cv::imread(f.string(), flags);
    if (img.empty()) continue;  // skip undecodable files
    // Cover-resize: scale so both dims reach the target, then center-crop.
    double sc = std::max(static_cast<double>(shape.width) / img.cols,
                         static_cast<double>(shape.height) / img.rows);
    cv::Mat resized;
    cv::resize(img, resized,
               cv::Size(std::max<int>(shape.width, std::lround(img.cols * sc)),
                        std::max<int>(shape.height, std::lround(img.rows * sc))),
               0, 0, cv::INTER_AREA);
    int x0 = (resized.cols - static_cast<int>(shape.width)) / 2;
    int y0 = (resized.rows - static_cast<int>(shape.height)) / 2;
    cv::Mat crop = resized(cv::Rect(x0, y0, static_cast<int>(shape.width),
                                    static_cast<int>(shape.height)));
    ds.items.push_back(mat_to_tensor(crop, shape));
  }
  if (ds.items.empty())
    throw IoError("ingest: no decodable images in '" + directory + "'");
  return ds;
}

std::vector<Dataset> split_disjoint(const Dataset& dataset, int64_t parts,
                                    int64_t part_size, int64_t seed) {
  if (parts < 1 || part_size < 1)
    throw ValidationError("split_disjoint: parts and part_size must be >= 1");
  if (parts * part_size > dataset.count())
    throw ValidationError(
        "split_disjoint: need " + std::to_string(parts * part_size) +
        " items, have " + std::to_string(dataset.count()));

  std::vector<int64_t> idx(dataset.count());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(static_cast<uint64_t>(seed));
  rng.shuffle(idx);

  std::vector<Dataset> out(parts);
  for (int64_t p = 0; p < parts; ++p) {
    out[p].source_id = dataset.source_id + "#part" + std::to_string(p);
    for (int64_t i = 0; i < part_size; ++i)
      out[p].items.push_back(dataset.items[idx[p * part_size + i]]);
  }
  return out;
}

}  // namespace ganov
