// tlaser: command-line front end for the c-algebra and TLASER pipeline.
//
// Exit codes: 0 ok, 1 domain/config error, 2 I/O error, 3 numerical failure.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "tlaser/csvd.hpp"
#include "tlaser/lanczos.hpp"
#include "tlaser/model.hpp"
#include "tlaser/store.hpp"

namespace {

using namespace tlaser;
using nlohmann::json;

enum Exit { kOk = 0, kDomain = 1, kIo = 2, kNumerical = 3 };

struct Globals {
  bool json = false;
  unsigned threads = 0;
  std::uint64_t seed = 0;
  std::string transform_file;  // optional 2-D TNS holding an explicit Z
};

struct Source {
  std::string file;
  std::string kind;
  Index heads = 0;
};

// A TNS file as a tensor: 3-D files are used as stored, 2-D files are
// tensorized with --kind/--heads.
struct Operand {
  Tensor3d tensor;
  std::optional<WeightKind> kind;
  DType dtype = DType::Float64;
};

Operand load_operand(const Source& src) {
  const TnsValue v = read_tns(src.file);
  Operand out{Tensor3d(1, 1, 1), std::nullopt, v.dtype};
  if (!v.is_matrix()) {
    if (!src.kind.empty())
      throw DomainError("--kind applies to 2-D weight files; '" + src.file + "' is 3-D");
    out.tensor = v.tensor();
    return out;
  }
  if (src.kind.empty() || src.heads <= 0)
    throw DomainError("'" + src.file + "' is a matrix; pass --kind and --heads to tensorize it");
  out.kind = WeightKind::FromMatrixShape(weight_kind_from_string(src.kind), v.matrix().rows(),
                                         v.matrix().cols(), src.heads);
  out.tensor = phi_forward(v.matrix(), *out.kind);
  return out;
}

TransformSpec<double> make_transform(const Globals& g, Index p) {
  if (g.transform_file.empty()) return TransformSpec<double>::Dct(p);
  const TnsValue z = read_tns(g.transform_file);
  if (!z.is_matrix()) throw DomainError("--transform must be a 2-D TNS file");
  TransformSpec<double> t = TransformSpec<double>::Explicit(z.matrix());
  if (t.size() != p)
    throw DomainError("transform is " + std::to_string(t.size()) + "x" +
                      std::to_string(t.size()) + " but the tensor depth is " +
                      std::to_string(p));
  return t;
}

json dims_json(const Tensor3d& t) { return {t.rows(), t.cols(), t.depth()}; }

void emit(const Globals& g, const json& j, const std::string& text) {
  if (g.json)
    std::cout << j.dump(2) << "\n";
  else
    std::cout << text;
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

// ---------------------------------------------------------------------------

int cmd_info(const Globals& g, const std::string& file) {
  const TnsValue v = read_tns(file);
  const double norm =
      v.is_matrix() ? frobenius_norm(v.matrix()) : frobenius_norm(v.tensor());
  const auto dims = v.dims();
  const std::string dtype = v.dtype == DType::Float64 ? "float64" : "float32";
  std::string text = "file:      " + file + "\ndims:      ";
  for (std::size_t i = 0; i < dims.size(); ++i)
    text += (i ? " x " : "") + std::to_string(dims[i]);
  text += "\ndtype:     " + dtype + "\nfrobenius: " + fmt("%.17g", norm) + "\n";
  emit(g, {{"file", file}, {"dims", dims}, {"dtype", dtype}, {"frobenius_norm", norm}}, text);
  return kOk;
}

int cmd_spectrum(const Globals& g, const Source& src, Index top) {
  const Operand op = load_operand(src);
  const CSvdFactors<double> f = csvd(op.tensor, make_transform(g, op.tensor.depth()));
  const auto q = static_cast<Index>(f.tube_norms.size());
  const Index shown = std::min(top, q);

  double total_sq = 0.0, total = 0.0;
  for (double s : f.tube_norms) {
    total_sq += s * s;
    total += s;
  }
  json rows = json::array();
  std::string text = "   i        tube norm   energy(sq)  energy(abs)\n";
  double run_sq = 0.0, run = 0.0;
  for (Index i = 0; i < shown; ++i) {
    const double s = f.tube_norms[static_cast<std::size_t>(i)];
    run_sq += s * s;
    run += s;
    const double e_sq = total_sq > 0 ? run_sq / total_sq : 0.0;
    const double e_abs = total > 0 ? run / total : 0.0;
    rows.push_back({{"index", i + 1}, {"tube_norm", s}, {"cumulative_energy_squared", e_sq},
                    {"cumulative_energy_unsquared", e_abs}});
    char line[128];
    std::snprintf(line, sizeof line, "%4lld  %15.9e  %11.8f  %11.8f\n",
                  static_cast<long long>(i + 1), s, e_sq, e_abs);
    text += line;
  }
  if (shown < top)
    text += "(--top " + std::to_string(top) + " clamped to " + std::to_string(q) + ")\n";
  emit(g,
       {{"file", src.file}, {"tensor_dims", dims_json(op.tensor)}, {"rank_capacity", q},
        {"top", shown}, {"spectrum", rows}},
       text);
  return kOk;
}

int cmd_csvd(const Globals& g, const Source& src, std::optional<Index> rank,
             const std::string& out) {
  const Operand op = load_operand(src);
  const CSvdFactors<double> f = csvd(op.tensor, make_transform(g, op.tensor.depth()));
  const Index r = rank.value_or(f.rank_capacity());
  const Tensor3d approx = truncate_csvd(f, r);
  const double err = frobenius_norm(op.tensor) > 0
                         ? frobenius_norm(approx - op.tensor) / frobenius_norm(op.tensor)
                         : 0.0;
  if (!out.empty()) {
    if (op.kind)
      write_tns(out, phi_inverse(approx, *op.kind), op.dtype);
    else
      write_tns(out, approx, op.dtype);
  }
  std::vector<double> prefix(f.tube_norms.begin(),
                             f.tube_norms.begin() +
                                 static_cast<std::ptrdiff_t>(std::min<std::size_t>(
                                     f.tube_norms.size(), kSpectrumPrefix)));
  std::string text = "rank:      " + std::to_string(r) + " of " +
                     std::to_string(f.rank_capacity()) + "\nrel_error: " +
                     fmt("%.6e", err) + "\n";
  if (!out.empty()) text += "written:   " + out + "\n";
  emit(g,
       {{"file", src.file}, {"tensor_dims", dims_json(op.tensor)}, {"rank", r},
        {"rank_capacity", f.rank_capacity()}, {"rel_error", err},
        {"tube_norms", prefix}, {"output", out.empty() ? json(nullptr) : json(out)}},
       text);
  return kOk;
}

int cmd_lanczos(const Globals& g, const Source& src, Index k, Index l, double tol) {
  const Operand op = load_operand(src);
  const TransformSpec<double> t = make_transform(g, op.tensor.depth());
  const TripletResult<double> res = approx_triplets(op.tensor, l, k, tol, t, g.seed);

  json trips = json::array();
  std::string text = "steps: " + std::to_string(res.steps) +
                     (res.breakdown ? " (breakdown)" : "") +
                     "\n   i        tube norm       residual  converged\n";
  for (std::size_t i = 0; i < res.triplets.size(); ++i) {
    const auto& e = res.triplets[i];
    trips.push_back({{"index", i + 1}, {"tube_norm", e.tube_norm()},
                     {"residual", e.residual_norm}, {"converged", e.converged}});
    char line[128];
    std::snprintf(line, sizeof line, "%4zu  %15.9e  %13.6e  %s\n", i + 1, e.tube_norm(),
                  e.residual_norm, e.converged ? "yes" : "no");
    text += line;
  }
  emit(g,
       {{"file", src.file}, {"tensor_dims", dims_json(op.tensor)}, {"k", k}, {"l", l},
        {"tol", tol}, {"seed", g.seed}, {"steps", res.steps}, {"breakdown", res.breakdown},
        {"triplets", trips}},
       text);
  return kOk;
}

std::string layer_table(const std::vector<LayerReport>& layers) {
  std::string text =
      "layer                    method  rank  rel_error      params (orig -> kept)\n";
  for (const auto& l : layers) {
    char line[256];
    std::snprintf(line, sizeof line, "%-24s %-7s %5lld  %.6e  %llu -> %llu%s\n",
                  l.layer_name.c_str(), to_string(l.method).c_str(),
                  static_cast<long long>(l.rank_used), l.rel_error,
                  static_cast<unsigned long long>(l.params_original),
                  static_cast<unsigned long long>(l.params_retained),
                  l.over_budget ? "  (over budget)" : "");
    text += line;
    for (const auto& n : l.notes) text += "    note: " + n + "\n";
  }
  return text;
}

int cmd_compress(const Globals& g, const std::string& manifest_path,
                 const std::string& config_path, const std::string& out) {
  const ModelManifest manifest = load_manifest(manifest_path);
  const CompressionConfig config = load_config(config_path);
  const CompressionReport report = compress_model(manifest, config, out);

  std::string text = layer_table(report.layers);
  if (!report.baseline.empty()) text += "\nLASER baseline\n" + layer_table(report.baseline);
  text += "\ncompressed " + std::to_string(report.totals.compressed_layers) + " of " +
          std::to_string(report.totals.layers) + " layers, parameters " +
          std::to_string(report.totals.params_original) + " -> " +
          std::to_string(report.totals.params_retained) + ", mean rel_error " +
          fmt("%.6e", report.totals.mean_rel_error) + "\nwritten to " + out + "\n";
  emit(g, to_json(report), text);
  return kOk;
}

int cmd_compare(const Globals& g, const Source& src, Index rank, const std::string& mode) {
  const TnsValue v = read_tns(src.file);
  if (!v.is_matrix()) throw DomainError("compare needs a 2-D weight file");
  if (src.kind.empty() || src.heads <= 0) throw DomainError("compare needs --kind and --heads");
  const WeightKind kind = WeightKind::FromMatrixShape(
      weight_kind_from_string(src.kind), v.matrix().rows(), v.matrix().cols(), src.heads);
  const Comparison cmp =
      compare_methods(v.matrix(), kind, rank, make_transform(g, kind.tensor_depth()),
                      comparison_mode_from_string(mode), src.file);

  auto row = [](const char* name, const LayerReport& r) {
    char line[160];
    std::snprintf(line, sizeof line, "%-8s %6lld  %12llu  %.6e%s\n", name,
                  static_cast<long long>(r.rank_used),
                  static_cast<unsigned long long>(r.params_retained), r.rel_error,
                  r.over_budget ? "  (over budget)" : "");
    return std::string(line);
  };
  std::string text = "comparison: " + to_string(cmp.mode) +
                     "\nmethod     rank        params  rel_error\n" + row("LASER", cmp.laser) +
                     row("TLASER", cmp.tlaser);
  for (const auto& n : cmp.laser.notes) text += "note: " + n + "\n";
  emit(g, to_json(cmp), text);
  return kOk;
}

int cmd_roundtrip(const Globals& g, const Source& src) {
  const TnsValue v = read_tns(src.file);
  if (!v.is_matrix()) throw DomainError("roundtrip needs a 2-D weight file");
  if (src.kind.empty() || src.heads <= 0)
    throw DomainError("roundtrip needs --kind and --heads");
  const Matrix<double>& w = v.matrix();
  const WeightKind kind = WeightKind::FromMatrixShape(weight_kind_from_string(src.kind),
                                                      w.rows(), w.cols(), src.heads);
  const Tensor3d t = phi_forward(w, kind);
  const Matrix<double> back = phi_inverse(t, kind);
  const bool identity = encode_tns(back) == encode_tns(w);
  const bool norm_equal = frobenius_norm(t) == frobenius_norm(w);
  const bool ok = identity && norm_equal;
  emit(g,
       {{"file", src.file}, {"kind", src.kind}, {"tensor_dims", dims_json(t)},
        {"bitwise_identity", identity}, {"norm_preserved", norm_equal}, {"ok", ok}},
       std::string("tensor:   ") + std::to_string(t.rows()) + " x " +
           std::to_string(t.cols()) + " x " + std::to_string(t.depth()) +
           "\nidentity: " + (identity ? "bitwise" : "FAILED") +
           "\nnorm:     " + (norm_equal ? "preserved" : "FAILED") + "\n");
  return ok ? kOk : kNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transform-domain tensor algebra and TLASER weight compression"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_flag("--json", g.json, "Emit a machine-readable JSON report on stdout");
  app.add_option("--threads", g.threads, "Worker thread cap (default: all cores)");
  app.add_option("--seed", g.seed, "Seed for stochastic paths (Lanczos start slice)");
  app.add_option("--transform", g.transform_file,
                 "2-D TNS file with an explicit invertible mode-3 transform (default DCT)")
      ->check(CLI::ExistingFile);

  auto add_source = [](CLI::App* sub, Source& s, bool positional) {
    if (positional)
      sub->add_option("file", s.file, "TNS file")->required();
    else
      sub->add_option("--file", s.file, "TNS weight file")->required();
    sub->add_option("--kind", s.kind, "attention | ffn_in | ffn_out (2-D inputs)")
        ->check(CLI::IsMember({"attention", "ffn_in", "ffn_out"}));
    sub->add_option("--heads", s.heads, "n_h for attention, r for ffn kinds");
  };

  std::string info_file;
  auto* info = app.add_subcommand("info", "Print dims, dtype and Frobenius norm of a TNS file");
  info->add_option("file", info_file, "TNS file")->required();

  Source spec_src;
  Index top = 10;
  auto* spectrum = app.add_subcommand("spectrum", "Singular tube norms and cumulative energy");
  add_source(spectrum, spec_src, true);
  spectrum->add_option("--top", top, "Number of tubes to show")->check(CLI::PositiveNumber);

  Source csvd_src;
  std::optional<Index> csvd_rank;
  std::string csvd_out;
  auto* csvd_cmd = app.add_subcommand("csvd", "Truncated c-SVD reconstruction");
  add_source(csvd_cmd, csvd_src, true);
  csvd_cmd->add_option("--rank", csvd_rank, "Number of singular tubes kept (default: all)");
  csvd_cmd->add_option("--out", csvd_out, "Write the reconstruction to this TNS file");

  Source lz_src;
  Index lz_k = 15, lz_l = 3;
  double lz_tol = 1e-8;
  auto* lanczos = app.add_subcommand("lanczos", "Approximate leading triplets by Lanczos");
  add_source(lanczos, lz_src, true);
  lanczos->add_option("-k,--steps", lz_k, "Bidiagonalization steps");
  lanczos->add_option("--triplets", lz_l, "Triplets to report (< k)");
  lanczos->add_option("--tol", lz_tol, "Convergence tolerance on the residual")
      ->check(CLI::NonNegativeNumber);

  std::string manifest_path, config_path, out_dir;
  auto* compress = app.add_subcommand("compress", "Compress a model described by a manifest");
  compress->add_option("--manifest", manifest_path, "Model manifest JSON")->required();
  compress->add_option("--config", config_path, "Compression config JSON")->required();
  compress->add_option("--out", out_dir, "Output directory (must not exist or be empty)")
      ->required();

  Source cmp_src;
  Index cmp_rank = 1;
  std::string cmp_mode = "equal_budget";
  auto* compare = app.add_subcommand("compare", "TLASER vs LASER at matched budget or ratio");
  add_source(compare, cmp_src, false);
  compare->add_option("--rank", cmp_rank, "TLASER slice rank")->required();
  compare->add_option("--mode", cmp_mode, "equal_budget | equal_ratio")
      ->check(CLI::IsMember({"equal_budget", "equal_ratio"}));

  Source rt_src;
  auto* roundtrip = app.add_subcommand("roundtrip", "Check tensorization is an exact reshape");
  add_source(roundtrip, rt_src, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kDomain;
  }

  set_thread_limit(g.threads);
  try {
    if (*info) return cmd_info(g, info_file);
    if (*spectrum) return cmd_spectrum(g, spec_src, top);
    if (*csvd_cmd) return cmd_csvd(g, csvd_src, csvd_rank, csvd_out);
    if (*lanczos) return cmd_lanczos(g, lz_src, lz_k, lz_l, lz_tol);
    if (*compress) return cmd_compress(g, manifest_path, config_path, out_dir);
    if (*compare) return cmd_compare(g, cmp_src, cmp_rank, cmp_mode);
    if (*roundtrip) return cmd_roundtrip(g, rt_src);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDomain;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDomain;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDomain;
  }
  return kDomain;
}
