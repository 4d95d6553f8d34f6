#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "tlaser/compress.hpp"
#include "tlaser/tensor.hpp"

namespace tlaser {

// ---------------------------------------------------------------------------
// TNS container
//
//   offset 0  magic   "TNS1"
//   offset 4  dtype   u8   0 = float64, 1 = float32
//   offset 5  ndim    u8   2 or 3
//   offset 6  dims    ndim x u64 little-endian
//   then      payload product(dims) little-endian values
//
// 3-D payloads use the tensor storage order (frontal-slice-major, row-major
// within a slice); 2-D payloads are row-major.
// ---------------------------------------------------------------------------

enum class DType : std::uint8_t { Float64 = 0, Float32 = 1 };

struct TnsHeader {
  DType dtype = DType::Float64;
  std::vector<std::uint64_t> dims;

  std::size_t header_bytes() const { return 6 + 8 * dims.size(); }
  std::uint64_t element_count() const;
  std::size_t element_bytes() const { return dtype == DType::Float64 ? 8 : 4; }
};

struct TnsValue {
  DType dtype = DType::Float64;
  std::variant<Matrix<double>, Tensor3d> value;

  bool is_matrix() const { return std::holds_alternative<Matrix<double>>(value); }
  const Matrix<double>& matrix() const { return std::get<Matrix<double>>(value); }
  const Tensor3d& tensor() const { return std::get<Tensor3d>(value); }
  std::vector<std::uint64_t> dims() const;
};

std::vector<std::uint8_t> encode_tns(const Tensor3d& t, DType dtype = DType::Float64);
std::vector<std::uint8_t> encode_tns(const Matrix<double>& m, DType dtype = DType::Float64);

// Throws ParseError with the byte offset of the first problem.
TnsHeader decode_tns_header(std::span<const std::uint8_t> bytes);
TnsValue decode_tns(std::span<const std::uint8_t> bytes);

// Writes go to a sibling temporary file that is renamed into place.
void write_tns(const std::filesystem::path& path, const Tensor3d& t,
               DType dtype = DType::Float64);
void write_tns(const std::filesystem::path& path, const Matrix<double>& m,
               DType dtype = DType::Float64);
TnsValue read_tns(const std::filesystem::path& path);
TnsHeader read_tns_header(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path,
                       std::span<const std::uint8_t> bytes);

// ---------------------------------------------------------------------------
// Manifest and configuration documents (JSON; see docs/formats.md)
// ---------------------------------------------------------------------------

enum class LayerKind { Attention, FfnIn, FfnOut, Other };

std::string to_string(LayerKind kind);

/// Manifest or config validation failure listing every problem found.
class ValidationError : public ConfigError {
 public:
  explicit ValidationError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

struct ManifestEntry {
  std::string name;
  std::filesystem::path file;  // relative to the manifest directory
  std::vector<std::uint64_t> shape;
  LayerKind kind = LayerKind::Other;
  std::optional<Index> heads_or_blocks;

  // Structured weight kind for attention / FFN entries.
  std::optional<WeightKind> weight_kind() const;
};

struct ModelManifest {
  std::filesystem::path root;  // directory the relative file paths resolve from
  std::vector<ManifestEntry> entries;

  const ManifestEntry* find(const std::string& name) const;
  std::filesystem::path resolve(const ManifestEntry& e) const { return root / e.file; }
};

ModelManifest parse_manifest(const nlohmann::json& doc, const std::filesystem::path& root);
ModelManifest load_manifest(const std::filesystem::path& path);
nlohmann::json manifest_to_json(const ModelManifest& m);

struct TransformChoice {
  TransformKind kind = TransformKind::DctOrthonormal;
  Matrix<double> matrix;  // explicit_matrix only

  TransformSpec<double> build(Index p) const;
};

struct LayerConfig {
  std::string name;
  bool delta = false;
  RankPolicy policy;
  Method method = Method::Tlaser;
};

struct CompressionConfig {
  TransformChoice transform;
  ComparisonMode comparison = ComparisonMode::EqualBudget;
  bool baseline = false;  // also report a LASER baseline per TLASER layer
  std::vector<LayerConfig> layers;
  nlohmann::json source;  // the document as read, echoed into reports

  const LayerConfig* find(const std::string& name) const;
};

CompressionConfig parse_config(const nlohmann::json& doc);
CompressionConfig load_config(const std::filesystem::path& path);

// Every configured layer must exist in the manifest with a compatible kind.
void validate_config(const CompressionConfig& config, const ModelManifest& manifest);

}  // namespace tlaser
