#pragma once

#include <string>

#include "tomsyn/dataset.hpp"

namespace tomsyn {

// A dataset directory holds four files, each opened by a version magic:
//   inputs.bin   binary tensor blob: header (sample count + shape), then
//                row-major 32-bit floats, little-endian
//   labels.txt   one line per sample: id, target cell, action, next state,
//                121 belief values
//   samples.txt  provenance per sample: map index, episode, step,
//                visibility flag, the 4 object cells (target first)
//   manifest.txt generation summary (see DatasetManifest)
// All writes are deterministic; identical inputs produce identical bytes.
void save_dataset(const std::string& dir, const Dataset& ds);
Dataset load_dataset(const std::string& dir);

void save_manifest(const std::string& path, const DatasetManifest& m);
DatasetManifest load_manifest(const std::string& path);

}  // namespace tomsyn
