#include "tlaser/model.hpp"

#include <algorithm>
#include <random>

namespace tlaser {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct LayerOutcome {
  LayerReport report;
  std::optional<LayerReport> baseline;
  std::optional<Matrix<double>> weight;  // set for compressed layers
  DType dtype = DType::Float64;
};

LayerReport passthrough_report(const ManifestEntry& e) {
  LayerReport r;
  r.layer_name = e.name;
  r.method = Method::None;
  std::uint64_t count = 1;
  for (auto d : e.shape) count *= d;
  r.params_original = count;
  r.params_retained = count;
  return r;
}

LayerOutcome run_layer(const ModelManifest& manifest, const ManifestEntry& e,
                       const CompressionConfig& config) {
  const LayerConfig* lc = config.find(e.name);
  LayerOutcome out;
  if (!lc || !lc->delta) {
    out.report = passthrough_report(e);
    return out;
  }
  const TnsValue value = read_tns(manifest.resolve(e));
  out.dtype = value.dtype;
  if (!value.is_matrix())
    throw DomainError("layer '" + e.name + "': only 2-D weights can be compressed");
  const Matrix<double>& w = value.matrix();

  try {
    if (lc->method == Method::Laser) {
      const Index q = std::min(w.rows(), w.cols());
      Index r = 0;
      if (lc->policy.is_energy()) {
        Eigen::BDCSVD<Matrix<double>> svd(w);
        const Vector<double> sv = svd.singularValues();
        r = policy_rank(lc->policy, q, std::span<const double>(sv.data(), sv.size()));
      } else {
        r = policy_rank(lc->policy, q);
      }
      LayerResult<double> res = laser_layer(w, r, e.name);
      out.report = std::move(res.report);
      out.weight = std::move(res.weight);
      return out;
    }
    const std::optional<WeightKind> kind = e.weight_kind();
    if (!kind)
      throw DomainError("layer '" + e.name + "' has no tensorizable kind");
    const TransformSpec<double> t = config.transform.build(kind->heads_or_blocks);
    LayerResult<double> res = tlaser_layer(w, *kind, lc->policy, t, e.name);
    out.report = std::move(res.report);
    out.weight = std::move(res.weight);
    if (config.baseline) {
      Comparison cmp =
          compare_methods(w, *kind, out.report.rank_used, t, config.comparison, e.name);
      out.baseline = std::move(cmp.laser);
    }
  } catch (const DomainError& err) {
    throw DomainError("layer '" + e.name + "': " + err.what());
  }
  return out;
}

CompressionReport assemble(std::vector<LayerOutcome>& outcomes,
                           const CompressionConfig& config) {
  CompressionReport rep;
  rep.config_echo = config.source;
  double err_sum = 0.0;
  for (auto& o : outcomes) {
    rep.totals.layers++;
    rep.totals.params_original += o.report.params_original;
    rep.totals.params_retained += o.report.params_retained;
    if (o.report.method != Method::None) {
      rep.totals.compressed_layers++;
      err_sum += o.report.rel_error;
    }
    rep.layers.push_back(o.report);
    if (o.baseline) rep.baseline.push_back(*o.baseline);
  }
  if (rep.totals.compressed_layers > 0)
    rep.totals.mean_rel_error = err_sum / static_cast<double>(rep.totals.compressed_layers);
  auto by_name = [](const LayerReport& a, const LayerReport& b) {
    return a.layer_name < b.layer_name;
  };
  std::sort(rep.layers.begin(), rep.layers.end(), by_name);
  std::sort(rep.baseline.begin(), rep.baseline.end(), by_name);
  return rep;
}

std::vector<LayerOutcome> run_all(const ModelManifest& manifest,
                                  const CompressionConfig& config) {
  validate_config(config, manifest);
  std::vector<LayerOutcome> outcomes;
  outcomes.reserve(manifest.entries.size());
  for (const ManifestEntry& e : manifest.entries)
    outcomes.push_back(run_layer(manifest, e, config));
  return outcomes;
}

}  // namespace

CompressionReport plan_compression(const ModelManifest& manifest,
                                   const CompressionConfig& config) {
  auto outcomes = run_all(manifest, config);
  return assemble(outcomes, config);
}

CompressionReport compress_model(const ModelManifest& manifest,
                                 const CompressionConfig& config, const fs::path& out_dir) {
  if (fs::exists(out_dir) && !(fs::is_directory(out_dir) && fs::is_empty(out_dir)))
    throw IoError("output directory '" + out_dir.string() + "' exists and is not empty");

  auto outcomes = run_all(manifest, config);
  CompressionReport report = assemble(outcomes, config);

  std::random_device rd;
  const fs::path parent = out_dir.has_parent_path() ? out_dir.parent_path() : fs::path(".");
  const fs::path staging =
      parent / (out_dir.filename().string() + ".staging-" + std::to_string(rd()));
  try {
    fs::create_directories(staging);
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
      const ManifestEntry& e = manifest.entries[i];
      const fs::path dst = staging / e.file;
      if (dst.has_parent_path()) fs::create_directories(dst.parent_path());
      if (outcomes[i].weight)
        write_tns(dst, *outcomes[i].weight, outcomes[i].dtype);
      else
        fs::copy_file(manifest.resolve(e), dst, fs::copy_options::overwrite_existing);
    }
    const std::string manifest_text = manifest_to_json(manifest).dump(2) + "\n";
    const std::string report_text = to_json(report).dump(2) + "\n";
    write_file_atomic(staging / "manifest.json",
                      {reinterpret_cast<const std::uint8_t*>(manifest_text.data()),
                       manifest_text.size()});
    write_file_atomic(staging / "report.json",
                      {reinterpret_cast<const std::uint8_t*>(report_text.data()),
                       report_text.size()});
    if (fs::exists(out_dir)) fs::remove(out_dir);
    fs::rename(staging, out_dir);
  } catch (const fs::filesystem_error& err) {
    std::error_code ec;
    fs::remove_all(staging, ec);
    throw IoError(std::string("writing compressed model failed: ") + err.what());
  } catch (...) {
    std::error_code ec;
    fs::remove_all(staging, ec);
    throw;
  }
  return report;
}

json to_json(const LayerReport& r) {
  json j = {{"layer_name", r.layer_name},
            {"method", to_string(r.method)},
            {"rank_used", r.rank_used},
            {"rel_error", r.rel_error},
            {"params_original", r.params_original},
            {"params_retained", r.params_retained},
            {"over_budget", r.over_budget},
            {"spectrum_prefix", r.spectrum_prefix}};
  if (!r.notes.empty()) j["notes"] = r.notes;
  return j;
}

json to_json(const CompressionReport& r) {
  json layers = json::array();
  for (const auto& l : r.layers) layers.push_back(to_json(l));
  json j = {{"layers", layers},
            {"totals",
             {{"layers", r.totals.layers},
              {"compressed_layers", r.totals.compressed_layers},
              {"params_original", r.totals.params_original},
              {"params_retained", r.totals.params_retained},
              {"mean_rel_error", r.totals.mean_rel_error}}},
            {"config", r.config_echo}};
  if (!r.baseline.empty()) {
    json base = json::array();
    for (const auto& l : r.baseline) base.push_back(to_json(l));
    j["baseline"] = base;
  }
  return j;
}

json to_json(const Comparison& c) {
  return {{"mode", to_string(c.mode)},
          {"tlaser", to_json(c.tlaser)},
          {"laser", to_json(c.laser)},
          {"error_ratio", c.tlaser.rel_error > 0 ? c.laser.rel_error / c.tlaser.rel_error
                                                 : 0.0},
          {"reference",
           {{"note",
             "published GPT-J layer reconstruction errors; context only, not "
             "reproduced by this tool"},
            {"laser", {0.31, 0.35}},
            {"tlaser", {0.13, 0.14}}}}};
}

}  // namespace tlaser
