#include "tumorsynth/tumorsynth.h"

#include <cstring>
#include <string>
#include <variant>

#include "tumorsynth/core/nifti.hpp"
#include "tumorsynth/metrics/metrics.hpp"
#include "tumorsynth/pipeline/dataset.hpp"
#include "tumorsynth/pipeline/preview.hpp"
#include "tumorsynth/pipeline/toy_data.hpp"
#include "tumorsynth/render/png.hpp"
#include "tumorsynth/turing/http_server.hpp"

using namespace tumorsynth;

struct ts_volume {
  std::variant<Volume3, Mask3> grid;
};

struct ts_config {
  pipeline::SynthConfig cfg;
};

struct ts_case {
  pipeline::CaseResult result;
};

struct ts_turing_server {
  std::shared_ptr<turing::TuringService> service;
  std::unique_ptr<turing::HttpServer> http;
};

namespace {

thread_local std::string g_last_error;

ts_status to_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return TS_ERR_INVALID_ARGUMENT;
    case ErrorCode::Io: return TS_ERR_IO;
    case ErrorCode::Geometry: return TS_ERR_GEOMETRY;
    case ErrorCode::Infeasible: return TS_ERR_INFEASIBLE;
    case ErrorCode::State: return TS_ERR_STATE;
    case ErrorCode::NotFound: return TS_ERR_NOT_FOUND;
    case ErrorCode::Internal: return TS_ERR_INTERNAL;
  }
  return TS_ERR_INTERNAL;
}

template <typename F>
ts_status guard(F&& f) {
  try {
    f();
    return TS_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return TS_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return TS_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) fail(ErrorCode::InvalidArgument, std::string(what) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

const Geometry& geometry_of(const ts_volume* v) {
  return std::visit([](const auto& g) -> const Geometry& { return g.geometry(); }, v->grid);
}

const Volume3& as_image(const ts_volume* v, const char* what) {
  require(v, what);
  if (auto* img = std::get_if<Volume3>(&v->grid)) return *img;
  fail(ErrorCode::InvalidArgument, std::string(what) + " must be an image volume, not a mask");
}

const Mask3& as_mask(const ts_volume* v, const char* what) {
  require(v, what);
  if (auto* m = std::get_if<Mask3>(&v->grid)) return *m;
  fail(ErrorCode::InvalidArgument, std::string(what) + " must be a mask");
}

pipeline::SynthConfig config_or_default(const ts_config* cfg) {
  return cfg ? cfg->cfg : pipeline::SynthConfig{};
}

}  // namespace

extern "C" {

const char* ts_last_error(void) { return g_last_error.c_str(); }

const char* ts_status_name(ts_status status) {
  switch (status) {
    case TS_OK: return "ok";
    case TS_ERR_INVALID_ARGUMENT: return "invalid argument";
    case TS_ERR_IO: return "i/o error";
    case TS_ERR_GEOMETRY: return "geometry error";
    case TS_ERR_INFEASIBLE: return "infeasible";
    case TS_ERR_STATE: return "invalid state";
    case TS_ERR_NOT_FOUND: return "not found";
    case TS_ERR_INTERNAL: return "internal error";
  }
  return "unknown";
}

const char* ts_version(void) { return pipeline::toolkit_version(); }

void ts_string_free(char* s) { std::free(s); }

ts_status ts_volume_load(const char* path, ts_volume** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new ts_volume{nifti::load_volume(path)};
  });
}

ts_status ts_mask_load(const char* path, ts_volume** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new ts_volume{nifti::load_mask(path)};
  });
}

ts_status ts_volume_create(const size_t dims[3], const double spacing[3], const float* data, int is_mask,
                           ts_volume** out) {
  return guard([&] {
    require(dims, "dims");
    require(spacing, "spacing");
    require(data, "data");
    require(out, "out");
    Geometry g;
    g.dims = {dims[0], dims[1], dims[2]};
    g.spacing = {spacing[0], spacing[1], spacing[2]};
    g.validate();
    const std::size_t n = g.voxel_count();
    if (is_mask) {
      Mask3 m(g, 0);
      for (std::size_t i = 0; i < n; ++i) m[i] = data[i] > 0.5f ? 1 : 0;
      *out = new ts_volume{std::move(m)};
    } else {
      *out = new ts_volume{Volume3(g, std::vector<float>(data, data + n))};
    }
  });
}

ts_status ts_volume_save(const ts_volume* v, const char* path) {
  return guard([&] {
    require(v, "volume");
    require(path, "path");
    if (auto* m = std::get_if<Mask3>(&v->grid)) {
      nifti::save_mask(*m, path);
    } else {
      nifti::save_volume(std::get<Volume3>(v->grid), path);
    }
  });
}

ts_status ts_volume_dims(const ts_volume* v, size_t dims[3]) {
  return guard([&] {
    require(v, "volume");
    require(dims, "dims");
    const auto& d = geometry_of(v).dims;
    for (int a = 0; a < 3; ++a) dims[a] = d[a];
  });
}

ts_status ts_volume_spacing(const ts_volume* v, double spacing[3]) {
  return guard([&] {
    require(v, "volume");
    require(spacing, "spacing");
    const auto& s = geometry_of(v).spacing;
    for (int a = 0; a < 3; ++a) spacing[a] = s[a];
  });
}

ts_status ts_volume_copy_data(const ts_volume* v, float* out, size_t count) {
  return guard([&] {
    require(v, "volume");
    require(out, "out");
    const std::size_t n = geometry_of(v).voxel_count();
    if (count < n) fail(ErrorCode::InvalidArgument, "output buffer too small");
    std::visit(
        [&](const auto& g) {
          for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(g[i]);
        },
        v->grid);
  });
}

int ts_volume_is_mask(const ts_volume* v) { return v && std::holds_alternative<Mask3>(v->grid) ? 1 : 0; }

void ts_volume_free(ts_volume* v) { delete v; }

ts_status ts_config_default(ts_config** out) {
  return guard([&] {
    require(out, "out");
    *out = new ts_config{};
  });
}

ts_status ts_config_load(const char* path, ts_config** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new ts_config{pipeline::load_config(path)};
  });
}

ts_status ts_config_parse(const char* json, ts_config** out) {
  return guard([&] {
    require(json, "json");
    require(out, "out");
    auto j = nlohmann::json::parse(json, nullptr, false, true);
    if (j.is_discarded()) fail(ErrorCode::InvalidArgument, "config is not valid JSON");
    *out = new ts_config{pipeline::config_from_json(j)};
  });
}

ts_status ts_config_set_seed(ts_config* cfg, uint64_t master_seed) {
  return guard([&] {
    require(cfg, "config");
    cfg->cfg.master_seed = master_seed;
  });
}

ts_status ts_config_to_json(const ts_config* cfg, char** out) {
  return guard([&] {
    require(cfg, "config");
    require(out, "out");
    *out = dup_string(pipeline::to_json(cfg->cfg).dump(2));
  });
}

void ts_config_free(ts_config* cfg) { delete cfg; }

ts_status ts_case_seed(uint64_t master_seed, const char* case_name, uint64_t* out) {
  return guard([&] {
    require(case_name, "case_name");
    require(out, "out");
    *out = pipeline::case_seed(master_seed, case_name);
  });
}

ts_status ts_synthesize_case(const ts_volume* ct, const ts_volume* liver, const ts_config* cfg, uint64_t case_seed,
                             ts_case** out) {
  return guard([&] {
    require(out, "out");
    const Volume3& image = as_image(ct, "ct");
    const Mask3& mask = as_mask(liver, "liver");
    *out = new ts_case{pipeline::synthesize_case(image, mask, config_or_default(cfg), case_seed)};
  });
}

ts_status ts_case_image(const ts_case* c, ts_volume** out) {
  return guard([&] {
    require(c, "case");
    require(out, "out");
    *out = new ts_volume{c->result.image};
  });
}

ts_status ts_case_label(const ts_case* c, ts_volume** out) {
  return guard([&] {
    require(c, "case");
    require(out, "out");
    *out = new ts_volume{c->result.label};
  });
}

size_t ts_case_tumor_count(const ts_case* c) { return c ? c->result.specs.size() : 0; }

ts_status ts_case_specs_json(const ts_case* c, char** out) {
  return guard([&] {
    require(c, "case");
    require(out, "out");
    nlohmann::json tumors = nlohmann::json::array();
    for (const auto& s : c->result.specs) tumors.push_back(pipeline::to_json(s));
    const nlohmann::json j = {{"seed", c->result.seed},
                              {"planned", c->result.planned},
                              {"tumors", tumors},
                              {"warnings", c->result.warnings}};
    *out = dup_string(j.dump());
  });
}

ts_status ts_case_write_preview(const ts_case* c, const char* png_path) {
  return guard([&] {
    require(c, "case");
    require(png_path, "png_path");
    const auto r = pipeline::preview(c->result);
    render::write_png(png_path, r.pixels, r.width, r.height);
  });
}

void ts_case_free(ts_case* c) { delete c; }

ts_status ts_generate_dataset(const char* inputs, const char* out, const ts_config* cfg, unsigned jobs,
                              ts_dataset_summary* summary) {
  return guard([&] {
    require(inputs, "inputs");
    require(out, "out");
    const auto s = pipeline::generate_dataset(inputs, out, config_or_default(cfg), jobs);
    if (summary) *summary = {s.total, s.succeeded, s.failed, s.tumors};
    if (s.total > 0 && s.succeeded == 0) {
      fail(ErrorCode::State, "all " + std::to_string(s.total) + " cases failed; see " + s.manifest.string());
    }
  });
}

ts_status ts_preview(const char* case_dir, const ts_config* cfg, const char* png_path) {
  return guard([&] {
    require(case_dir, "case_dir");
    require(png_path, "png_path");
    const std::filesystem::path dir(case_dir);
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) fail(ErrorCode::NotFound, "case directory not found: " + dir.string());
    pipeline::CaseInput input;
    input.name = std::filesystem::absolute(dir).lexically_normal().filename().string();
    if (input.name.empty()) input.name = std::filesystem::absolute(dir).parent_path().filename().string();
    for (const char* ext : {".nii.gz", ".nii"}) {
      if (input.ct.empty() && std::filesystem::is_regular_file(dir / (std::string("ct") + ext))) {
        input.ct = dir / (std::string("ct") + ext);
      }
      if (input.liver.empty() && std::filesystem::is_regular_file(dir / (std::string("liver") + ext))) {
        input.liver = dir / (std::string("liver") + ext);
      }
    }
    const auto result = pipeline::run_case(input, config_or_default(cfg));
    const auto r = pipeline::preview(result);
    render::write_png(png_path, r.pixels, r.width, r.height);
  });
}

ts_status ts_dsc(const ts_volume* pred, const ts_volume* gt, double* out) {
  return guard([&] {
    require(out, "out");
    *out = metrics::dsc(as_mask(pred, "pred"), as_mask(gt, "gt"));
  });
}

ts_status ts_nsd(const ts_volume* pred, const ts_volume* gt, double tolerance_mm, double* out) {
  return guard([&] {
    require(out, "out");
    *out = metrics::nsd(as_mask(pred, "pred"), as_mask(gt, "gt"), tolerance_mm);
  });
}

ts_status ts_evaluate(const char* pred_dir, const char* gt_dir, double tolerance_mm, const double* bin_edges,
                      size_t n_edges, const char* out_dir, ts_eval_summary* summary, char** report_json) {
  return guard([&] {
    require(pred_dir, "pred_dir");
    require(gt_dir, "gt_dir");
    metrics::SizeBins bins;
    if (bin_edges) bins.edges.assign(bin_edges, bin_edges + n_edges);
    const auto r = metrics::evaluate_pairs(pred_dir, gt_dir, tolerance_mm, bins, out_dir ? out_dir : "");
    if (summary) {
      *summary = {r.cases.size(), r.unmatched.size(), r.mean_dsc, r.dsc_ci.lo, r.dsc_ci.hi,
                  r.mean_nsd,     r.nsd_ci.lo,        r.nsd_ci.hi};
    }
    if (report_json) {
      nlohmann::json cases = nlohmann::json::array();
      for (const auto& c : r.cases) {
        std::size_t detected = 0;
        for (const auto& t : c.sensitivity.tumors) detected += t.detected;
        cases.push_back({{"case", c.name},
                         {"dsc", c.dsc},
                         {"nsd", c.nsd},
                         {"gt_tumors", c.sensitivity.tumors.size()},
                         {"detected", detected}});
      }
      nlohmann::json bins_json = nlohmann::json::array();
      for (const auto& b : r.pooled_bins) {
        const auto s = b.sensitivity();
        bins_json.push_back({{"bin", b.label},
                             {"total", b.total},
                             {"detected", b.detected},
                             {"sensitivity", s ? nlohmann::json(*s) : nlohmann::json(nullptr)}});
      }
      const nlohmann::json j = {{"tolerance_mm", r.tolerance_mm},
                                {"cases", cases},
                                {"unmatched", r.unmatched},
                                {"dsc", {{"mean", r.mean_dsc}, {"ci95", {r.dsc_ci.lo, r.dsc_ci.hi}}}},
                                {"nsd", {{"mean", r.mean_nsd}, {"ci95", {r.nsd_ci.lo, r.nsd_ci.hi}}}},
                                {"sensitivity_by_size", bins_json}};
      *report_json = dup_string(j.dump());
    }
  });
}

void ts_turing_options_init(ts_turing_options* opts) {
  if (opts) *opts = ts_turing_options{};
}

ts_status ts_turing_server_create(const ts_turing_options* opts, ts_turing_server** out) {
  return guard([&] {
    require(opts, "options");
    require(out, "out");
    require(opts->real_dir, "real_dir");
    require(opts->synthetic_dir, "synthetic_dir");
    auto real = std::make_shared<const turing::SlicePool>(opts->real_dir);
    auto synthetic = std::make_shared<const turing::SlicePool>(opts->synthetic_dir);
    turing::ServiceOptions so;
    so.seed = opts->seed;
    if (opts->event_log) so.event_log = opts->event_log;
    turing::HttpOptions ho;
    if (opts->host) ho.host = opts->host;
    if (opts->static_dir) ho.static_dir = opts->static_dir;
    ho.allow_partial_score = opts->allow_partial_score != 0;
    auto s = std::make_unique<ts_turing_server>();
    s->service = std::make_shared<turing::TuringService>(real, synthetic, so);
    s->http = std::make_unique<turing::HttpServer>(s->service, ho);
    *out = s.release();
  });
}

ts_status ts_turing_server_bind(ts_turing_server* s, int port, int* bound_port) {
  return guard([&] {
    require(s, "server");
    if (port < 0 || port > 65535) fail(ErrorCode::InvalidArgument, "port out of range");
    const int p = s->http->bind(port);
    if (bound_port) *bound_port = p;
  });
}

ts_status ts_turing_server_run(ts_turing_server* s) {
  return guard([&] {
    require(s, "server");
    s->http->run();
  });
}

ts_status ts_turing_server_stop(ts_turing_server* s) {
  return guard([&] {
    require(s, "server");
    s->http->stop();
  });
}

void ts_turing_server_free(ts_turing_server* s) { delete s; }

ts_status ts_write_toy_dataset(const char* dir, size_t n, uint64_t seed, const size_t dims[3],
                               const double spacing[3]) {
  return guard([&] {
    require(dir, "dir");
    Dims d{96, 96, 64};
    Vec3 s{1.5, 1.5, 1.5};
    if (dims) d = {dims[0], dims[1], dims[2]};
    if (spacing) s = {spacing[0], spacing[1], spacing[2]};
    pipeline::write_toy_dataset(dir, n, seed, d, s);
  });
}

}  // extern "C"
