#pragma once

#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "tlaser/store.hpp"

namespace tlaser {

struct ReportTotals {
  std::uint64_t layers = 0;
  std::uint64_t compressed_layers = 0;
  std::uint64_t params_original = 0;
  std::uint64_t params_retained = 0;
  double mean_rel_error = 0.0;  // over compressed layers; 0 if none
};

struct CompressionReport {
  std::vector<LayerReport> layers;    // sorted by layer name
  std::vector<LayerReport> baseline;  // LASER baselines when requested
  ReportTotals totals;
  nlohmann::json config_echo;
};

/// Compresses every selected layer of `manifest` and writes the model to
/// `out_dir` (tensors at their manifest-relative paths, manifest.json and
/// report.json). Unselected layers are copied byte for byte.
///
/// Everything is staged in a sibling temporary directory that is renamed to
/// `out_dir` only after all layers succeed; `out_dir` must not exist or be
/// empty.
CompressionReport compress_model(const ModelManifest& manifest,
                                 const CompressionConfig& config,
                                 const std::filesystem::path& out_dir);

/// Computes the report without writing anything.
CompressionReport plan_compression(const ModelManifest& manifest,
                                   const CompressionConfig& config);

nlohmann::json to_json(const LayerReport& r);
nlohmann::json to_json(const CompressionReport& r);
nlohmann::json to_json(const Comparison& c);

}  // namespace tlaser
