// Copyright 2026 The ethnipipe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ethnipipe/convert.hpp"

#include <hdf5.h>

#include <map>
#include <optional>
#include <regex>
#include <string>
#include <utility>
#include <vector>

#include "ethnipipe/error.hpp"

namespace ethnipipe {
namespace {

struct Handle {
  hid_t id;
  herr_t (*close)(hid_t);
  ~Handle() {
    if (id >= 0) close(id);
  }
};

struct Found {
  std::vector<std::string> datasets;
};

herr_t VisitLink(hid_t group, const char* name, const H5L_info_t*, void* data) {
  H5E_BEGIN_TRY {
    const hid_t obj = H5Oopen(group, name, H5P_DEFAULT);
    if (obj >= 0) {
      if (H5Iget_type(obj) == H5I_DATASET) static_cast<Found*>(data)->datasets.push_back(name);
      H5Oclose(obj);
    }
  }
  H5E_END_TRY;
  return 0;
}

Tensor<float> ReadDataset(hid_t file, const std::string& name) {
  Handle ds{H5Dopen2(file, name.c_str(), H5P_DEFAULT), H5Dclose};
  if (ds.id < 0) throw RuntimeFailure("cannot open dataset '" + name + "'");
  Handle space{H5Dget_space(ds.id), H5Sclose};
  const int rank = H5Sget_simple_extent_ndims(space.id);
  if (rank < 0 || rank > 8) throw BadConfig("dataset '" + name + "' has unsupported rank");
  std::vector<hsize_t> dims(static_cast<std::size_t>(rank));
  H5Sget_simple_extent_dims(space.id, dims.data(), nullptr);
  Shape shape(dims.begin(), dims.end());
  Tensor<float> t(shape);
  if (!t.data.empty() &&
      H5Dread(ds.id, H5T_NATIVE_FLOAT, H5S_ALL, H5S_ALL, H5P_DEFAULT, t.data.data()) < 0) {
    throw RuntimeFailure("cannot read dataset '" + name + "' as float32");
  }
  return t;
}

Tensor<float> OihwToHwio(const Tensor<float>& in) {
  const std::uint32_t o = in.shape[0], i = in.shape[1], h = in.shape[2], w = in.shape[3];
  Tensor<float> out({h, w, i, o});
  for (std::uint32_t a = 0; a < o; ++a)
    for (std::uint32_t b = 0; b < i; ++b)
      for (std::uint32_t y = 0; y < h; ++y)
        for (std::uint32_t x = 0; x < w; ++x)
          out.data[((y * w + x) * i + b) * o + a] = in.data[((a * i + b) * h + y) * w + x];
  return out;
}

}  // namespace

WeightArchive ConvertKerasH5(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw MissingInput("pretrained weight file not found: " + path.string());
  }
  hid_t raw = -1;
  H5E_BEGIN_TRY { raw = H5Fopen(path.c_str(), H5F_ACC_RDONLY, H5P_DEFAULT); }
  H5E_END_TRY;
  if (raw < 0) throw BadConfig("not an HDF5 file: " + path.string());
  Handle file{raw, H5Fclose};

  Found found;
  if (H5Lvisit(file.id, H5_INDEX_NAME, H5_ITER_INC, VisitLink, &found) < 0) {
    throw RuntimeFailure("cannot walk HDF5 file " + path.string());
  }

  static const std::regex kLayer(R"(block(\d+)_conv(\d+))");
  // (block, conv) -> {kernel, bias}
  std::map<std::pair<int, int>, std::pair<std::optional<Tensor<float>>, std::optional<Tensor<float>>>>
      layers;
  for (const std::string& name : found.datasets) {
    std::smatch m;
    if (!std::regex_search(name, m, kLayer)) continue;
    const auto slash = name.find_last_of('/');
    const std::string leaf = slash == std::string::npos ? name : name.substr(slash + 1);
    const bool kernel = leaf.find("kernel") != std::string::npos ||
                        leaf.find("_W") != std::string::npos || leaf.find("weight") != std::string::npos;
    const bool bias = leaf.find("bias") != std::string::npos || leaf.find("_b") != std::string::npos;
    if (kernel == bias) continue;
    auto& slot = layers[{std::stoi(m[1]), std::stoi(m[2])}];
    auto& target = kernel ? slot.first : slot.second;
    if (target) throw BadConfig("duplicate " + std::string(kernel ? "kernel" : "bias") +
                                " dataset for " + m.str(0));
    target = ReadDataset(file.id, name);
  }
  if (layers.empty()) throw BadConfig("no blockK_convJ weights found in " + path.string());

  WeightArchive archive;
  for (auto& [key, slot] : layers) {
    const std::string base = "conv" + std::to_string(key.first) + "_" + std::to_string(key.second);
    if (!slot.first || !slot.second) throw BadConfig(base + ": kernel or bias missing");
    Tensor<float> kernel = std::move(*slot.first);
    if (kernel.shape.size() != 4) throw BadConfig(base + ": kernel must be rank 4");
    if (!(kernel.shape[0] == 3 && kernel.shape[1] == 3) && kernel.shape[2] == 3 &&
        kernel.shape[3] == 3) {
      kernel = OihwToHwio(kernel);
    }
    if (kernel.shape[0] != 3 || kernel.shape[1] != 3) throw BadConfig(base + ": kernel is not 3x3");
    const Tensor<float>& bias = *slot.second;
    if (bias.shape.size() != 1 || bias.shape[0] != kernel.shape[3]) {
      throw BadConfig(base + ": bias shape " + ShapeString(bias.shape) +
                      " does not match kernel " + ShapeString(kernel.shape));
    }
    archive.Set(base + ".kernel", std::move(kernel));
    archive.Set(base + ".bias", bias);
  }
  archive.set_source_tag("keras-h5:" + path.filename().string());
  return archive;
}

}  // namespace ethnipipe
