#include <fstream>
#include <set>

#include "tlaser/store.hpp"

namespace tlaser {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Attention: return "attention";
    case LayerKind::FfnIn: return "ffn_in";
    case LayerKind::FfnOut: return "ffn_out";
    case LayerKind::Other: return "other";
  }
  return "?";
}

namespace {

std::optional<LayerKind> layer_kind_from_string(const std::string& s) {
  if (s == "attention") return LayerKind::Attention;
  if (s == "ffn_in") return LayerKind::FfnIn;
  if (s == "ffn_out") return LayerKind::FfnOut;
  if (s == "other") return LayerKind::Other;
  return std::nullopt;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += "\n";
    out += "  - " + s;
  }
  return out;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> problems)
    : ConfigError("validation failed:\n" + join(problems)),
      problems_(std::move(problems)) {}

std::optional<WeightKind> ManifestEntry::weight_kind() const {
  if (kind == LayerKind::Other || !heads_or_blocks || shape.size() != 2) return std::nullopt;
  const WeightKindTag tag = kind == LayerKind::Attention ? WeightKindTag::Attention
                            : kind == LayerKind::FfnIn   ? WeightKindTag::FfnIn
                                                         : WeightKindTag::FfnOut;
  return WeightKind::FromMatrixShape(tag, static_cast<Index>(shape[0]),
                                     static_cast<Index>(shape[1]), *heads_or_blocks);
}

const ManifestEntry* ModelManifest::find(const std::string& name) const {
  for (const auto& e : entries)
    if (e.name == name) return &e;
  return nullptr;
}

ModelManifest parse_manifest(const json& doc, const fs::path& root) {
  std::vector<std::string> problems;
  ModelManifest m;
  m.root = root;
  if (!doc.is_object() || !doc.contains("layers") || !doc["layers"].is_array())
    throw ValidationError({"manifest: top level must be an object with a \"layers\" array"});

  std::set<std::string> seen;
  std::size_t idx = 0;
  for (const json& item : doc["layers"]) {
    const std::string where = "layers[" + std::to_string(idx++) + "]";
    if (!item.is_object()) {
      problems.push_back(where + ": entry must be an object");
      continue;
    }
    ManifestEntry e;
    if (!item.contains("name") || !item["name"].is_string()) {
      problems.push_back(where + ": missing string \"name\"");
    } else {
      e.name = item["name"].get<std::string>();
      if (!seen.insert(e.name).second)
        problems.push_back(where + ": duplicate layer name '" + e.name + "'");
    }
    const std::string label = where + (e.name.empty() ? "" : " ('" + e.name + "')");
    if (!item.contains("file") || !item["file"].is_string())
      problems.push_back(label + ": missing string \"file\"");
    else
      e.file = item["file"].get<std::string>();
    if (!item.contains("shape") || !item["shape"].is_array()) {
      problems.push_back(label + ": missing integer array \"shape\"");
    } else {
      for (const json& d : item["shape"]) {
        if (!d.is_number_unsigned() || d.get<std::uint64_t>() == 0) {
          problems.push_back(label + ": shape entries must be positive integers");
          e.shape.clear();
          break;
        }
        e.shape.push_back(d.get<std::uint64_t>());
      }
      if (!e.shape.empty() && e.shape.size() != 2 && e.shape.size() != 3)
        problems.push_back(label + ": shape must have 2 or 3 entries");
    }
    const std::string kind = item.value("kind", std::string("other"));
    if (auto k = layer_kind_from_string(kind))
      e.kind = *k;
    else
      problems.push_back(label + ": unknown kind '" + kind + "'");
    if (item.contains("heads_or_blocks")) {
      // Signed and unsigned JSON integers both occur (manifest_to_json emits
      // signed ones).
      if (!item["heads_or_blocks"].is_number_integer() ||
          item["heads_or_blocks"].get<std::int64_t>() <= 0)
        problems.push_back(label + ": heads_or_blocks must be a positive integer");
      else
        e.heads_or_blocks = item["heads_or_blocks"].get<Index>();
    }
    if (e.kind != LayerKind::Other) {
      if (!item.contains("heads_or_blocks"))
        problems.push_back(label + ": kind " + kind + " requires heads_or_blocks");
      else if (!e.heads_or_blocks)
        ;  // already reported as invalid
      else if (e.shape.size() != 2)
        problems.push_back(label + ": kind " + kind + " requires a 2-D shape");
      else {
        try {
          (void)e.weight_kind();
        } catch (const DomainError& err) {
          problems.push_back(label + ": " + err.what());
        }
      }
    }
    if (!e.file.empty()) {
      const fs::path full = root / e.file;
      if (!fs::exists(full)) {
        problems.push_back(label + ": file '" + e.file.string() + "' does not exist");
      } else if (!e.shape.empty()) {
        try {
          const TnsHeader h = read_tns_header(full);
          if (h.dims != e.shape) {
            std::string got;
            for (auto d : h.dims) got += (got.empty() ? "" : "x") + std::to_string(d);
            problems.push_back(label + ": shape does not match '" + e.file.string() +
                               "' header (" + got + ")");
          }
        } catch (const IoError& err) {
          problems.push_back(label + ": " + err.what());
        }
      }
    }
    m.entries.push_back(std::move(e));
  }
  if (!problems.empty()) throw ValidationError(std::move(problems));
  return m;
}

ModelManifest load_manifest(const fs::path& path) {
  return parse_manifest(read_json_file(path), path.parent_path());
}

json manifest_to_json(const ModelManifest& m) {
  json layers = json::array();
  for (const auto& e : m.entries) {
    json item = {{"name", e.name},
                 {"file", e.file.generic_string()},
                 {"shape", e.shape},
                 {"kind", to_string(e.kind)}};
    if (e.heads_or_blocks) item["heads_or_blocks"] = *e.heads_or_blocks;
    layers.push_back(std::move(item));
  }
  return {{"layers", layers}};
}

TransformSpec<double> TransformChoice::build(Index p) const {
  if (kind == TransformKind::DctOrthonormal) return TransformSpec<double>::Dct(p);
  if (matrix.rows() != p)
    throw DomainError("explicit transform is " + std::to_string(matrix.rows()) +
                      "x" + std::to_string(matrix.cols()) +
                      " but the layer tensor has depth " + std::to_string(p));
  return TransformSpec<double>::Explicit(matrix);
}

const LayerConfig* CompressionConfig::find(const std::string& name) const {
  for (const auto& l : layers)
    if (l.name == name) return &l;
  return nullptr;
}

CompressionConfig parse_config(const json& doc) {
  std::vector<std::string> problems;
  CompressionConfig c;
  c.source = doc;
  if (!doc.is_object()) throw ValidationError({"config: top level must be an object"});

  if (doc.contains("transform")) {
    const json& t = doc["transform"];
    if (t.is_string() && (t == "dct" || t == "dct_orthonormal")) {
      c.transform.kind = TransformKind::DctOrthonormal;
    } else if (t.is_object() && t.value("kind", "") == "explicit_matrix" &&
               t.contains("matrix") && t["matrix"].is_array()) {
      const json& rows = t["matrix"];
      const auto p = static_cast<Index>(rows.size());
      c.transform.kind = TransformKind::ExplicitMatrix;
      c.transform.matrix.resize(p, p);
      bool ok = p > 0;
      for (Index i = 0; ok && i < p; ++i) {
        const json& row = rows[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Index>(row.size()) != p) {
          ok = false;
          break;
        }
        for (Index j = 0; j < p; ++j) {
          const json& v = row[static_cast<std::size_t>(j)];
          if (!v.is_number()) {
            ok = false;
            break;
          }
          c.transform.matrix(i, j) = v.get<double>();
        }
      }
      if (!ok) {
        problems.push_back("transform.matrix: must be a non-empty square array of numbers");
      } else {
        try {
          (void)TransformSpec<double>::Explicit(c.transform.matrix);
        } catch (const DomainError& e) {
          problems.push_back(std::string("transform.matrix: ") + e.what());
        }
      }
    } else {
      problems.push_back(
          "transform: expected \"dct\" or {\"kind\": \"explicit_matrix\", \"matrix\": [...]}");
    }
  }

  if (doc.contains("comparison")) {
    try {
      c.comparison = comparison_mode_from_string(doc["comparison"].get<std::string>());
    } catch (const std::exception& e) {
      problems.push_back(std::string("comparison: ") + e.what());
    }
  }
  if (doc.contains("baseline")) {
    if (doc["baseline"].is_boolean())
      c.baseline = doc["baseline"].get<bool>();
    else
      problems.push_back("baseline: must be a boolean");
  }

  if (doc.contains("layers")) {
    if (!doc["layers"].is_array()) {
      problems.push_back("layers: must be an array");
    } else {
      std::set<std::string> seen;
      std::size_t idx = 0;
      for (const json& item : doc["layers"]) {
        const std::string where = "layers[" + std::to_string(idx++) + "]";
        if (!item.is_object() || !item.contains("name") || !item["name"].is_string()) {
          problems.push_back(where + ": entry must be an object with a string \"name\"");
          continue;
        }
        LayerConfig l;
        l.name = item["name"].get<std::string>();
        const std::string label = where + " ('" + l.name + "')";
        if (!seen.insert(l.name).second)
          problems.push_back(label + ": duplicate layer name");
        if (item.contains("delta")) {
          if (item["delta"].is_boolean())
            l.delta = item["delta"].get<bool>();
          else if (item["delta"].is_number_integer() &&
                   (item["delta"] == 0 || item["delta"] == 1))
            l.delta = item["delta"].get<int>() == 1;
          else
            problems.push_back(label + ": delta must be a boolean or 0/1");
        }
        if (item.contains("method")) {
          try {
            l.method = method_from_string(item["method"].get<std::string>());
            if (l.method == Method::None)
              problems.push_back(label + ": method must be laser or tlaser");
          } catch (const std::exception& e) {
            problems.push_back(label + ": " + e.what());
          }
        }
        if (l.delta) {
          if (!item.contains("policy") || !item["policy"].is_object()) {
            problems.push_back(label + ": selected layer needs a \"policy\" object");
          } else {
            const json& pol = item["policy"];
            try {
              l.policy.mode = rank_mode_from_string(pol.value("mode", std::string()));
              switch (l.policy.mode) {
                case RankMode::EnergySquared:
                case RankMode::EnergyUnsquared:
                  if (!pol.contains("tau") || !pol["tau"].is_number())
                    throw DomainError("energy policy needs numeric \"tau\"");
                  l.policy.tau = pol["tau"].get<double>();
                  break;
                case RankMode::FixedRatio:
                  if (!pol.contains("rho") || !pol["rho"].is_number())
                    throw DomainError("fixed_ratio policy needs numeric \"rho\"");
                  l.policy.rho = pol["rho"].get<double>();
                  break;
                case RankMode::FixedRank:
                  if (!pol.contains("r") || !pol["r"].is_number_integer())
                    throw DomainError("fixed_rank policy needs integer \"r\"");
                  l.policy.r = pol["r"].get<Index>();
                  break;
              }
              l.policy.validate();
            } catch (const std::exception& e) {
              problems.push_back(label + ".policy: " + e.what());
            }
          }
        }
        c.layers.push_back(std::move(l));
      }
    }
  }
  if (!problems.empty()) throw ValidationError(std::move(problems));
  return c;
}

CompressionConfig load_config(const fs::path& path) { return parse_config(read_json_file(path)); }

void validate_config(const CompressionConfig& config, const ModelManifest& manifest) {
  std::vector<std::string> problems;
  for (const LayerConfig& l : config.layers) {
    const ManifestEntry* e = manifest.find(l.name);
    if (!e) {
      problems.push_back("config layer '" + l.name + "' is not in the manifest");
      continue;
    }
    if (!l.delta) continue;
    if (l.method == Method::Tlaser && e->kind == LayerKind::Other)
      problems.push_back("layer '" + l.name +
                         "' has kind other and cannot be tensorized; use method laser");
    if (l.method == Method::Laser && e->shape.size() != 2)
      problems.push_back("layer '" + l.name + "' is not a matrix; laser needs 2-D weights");
  }
  if (!problems.empty()) throw ValidationError(std::move(problems));
}

}  // namespace tlaser
