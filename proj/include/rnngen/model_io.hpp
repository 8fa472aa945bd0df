// SPDX-License-Identifier: Apache-2.0
//
// JSON model and dataset files.
//
// Model:   {"format_version": 1, "cell_type": "vanilla",
//           "dims": {"d_x": .., "d_h": .., "d_y": ..}            (conv: d, k, K)
//           "activations": {"sigma_h": {"kind", "rho", "b"}, "sigma_y": {...}},
//           "U": {"rows": .., "cols": .., "data": [row-major]}, "V": ..., ...}
// Dataset: {"format_version": 1, "kind": "dataset", "m", "T", "d_x", "K",
//           "B_x", "seed", "sequences": [{"inputs": [[..], ..], "labels": [..]}]}
//
// Numbers are written with 17 significant digits, so load(save(x)) == x
// bit for bit. An unbounded activation stores b as the string "inf".
#pragma once

#include <string>
#include <string_view>

#include "rnngen/cells.hpp"
#include "rnngen/data.hpp"

namespace rnngen {

inline constexpr int kFormatVersion = 1;

std::string model_to_json(const Model& model);
/// Throws ParseError (with byte offset for syntax errors), UnsupportedCell,
/// VersionMismatch, MissingField or DimensionMismatch.
Model model_from_json(std::string_view text);

void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

std::string dataset_to_json(const SequenceDataset& data);
SequenceDataset dataset_from_json(std::string_view text);

void save_dataset(const SequenceDataset& data, const std::string& path);
SequenceDataset load_dataset(const std::string& path);

}  // namespace rnngen
