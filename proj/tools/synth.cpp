// Command-line front end. Talks to the toolkit only through tumorsynth.h.
#include <tumorsynth/tumorsynth.h>

#include <atomic>
#include <chrono>
#include <csignal>
#include <optional>
#include <cstdio>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

namespace {

struct Failure {
  ts_status status;
};

void check(ts_status s, const char* what) {
  if (s != TS_OK) {
    std::fprintf(stderr, "synth: %s: %s (%s)\n", what, ts_last_error(), ts_status_name(s));
    throw Failure{s};
  }
}

struct Config {
  ts_config* ptr = nullptr;
  ~Config() { ts_config_free(ptr); }
};

void load_config(Config& c, const std::string& path, const std::optional<uint64_t>& seed) {
  if (path.empty()) {
    check(ts_config_default(&c.ptr), "config");
  } else {
    check(ts_config_load(path.c_str(), &c.ptr), "config");
  }
  if (seed) check(ts_config_set_seed(c.ptr, *seed), "config");
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const std::size_t comma = s.find(',', pos);
    const std::string item = s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (!item.empty()) out.push_back(std::stod(item));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) { g_interrupted = true; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic liver tumor toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ts_version()));

  std::string inputs, out, config_path;
  std::optional<uint64_t> seed;
  unsigned jobs = 1;
  auto* gen = app.add_subcommand("generate", "Plant tumors into every case of an input directory");
  gen->add_option("--inputs", inputs, "Directory of <case>/{ct,liver}.nii[.gz]")->required();
  gen->add_option("--out", out, "Output directory")->required();
  gen->add_option("--config", config_path, "JSON configuration file");
  gen->add_option("--seed", seed, "Master seed (overrides the config)");
  gen->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  std::string case_dir, png;
  auto* prev = app.add_subcommand("preview", "Synthesize one case and write orthogonal slices as PNG");
  prev->add_option("--case", case_dir, "Case directory with ct and liver volumes")->required();
  prev->add_option("--out", png, "Output PNG path")->required();
  prev->add_option("--config", config_path, "JSON configuration file");
  prev->add_option("--seed", seed, "Master seed (overrides the config)");

  std::string pred, gt, bins = "5,10,20,30";
  double tolerance = 2.0;
  auto* eval = app.add_subcommand("eval", "Score predicted masks against ground truth");
  eval->add_option("--pred", pred, "Directory of predicted masks")->required();
  eval->add_option("--gt", gt, "Directory of ground-truth masks")->required();
  eval->add_option("--tolerance-mm", tolerance, "NSD tolerance in mm")->check(CLI::NonNegativeNumber);
  eval->add_option("--bins", bins, "Radius bin edges in mm, comma separated");
  eval->add_option("--out", out, "Report directory")->required();

  std::string real, synthetic, static_dir, event_log, host = "127.0.0.1";
  int port = 8080;
  bool allow_partial = false;
  auto* serve = app.add_subcommand("turing-serve", "Run the visual Turing test service");
  serve->add_option("--real", real, "Pool of real cases: <case>/{image,label}.nii[.gz]")->required();
  serve->add_option("--synthetic", synthetic, "Pool of synthetic cases")->required();
  serve->add_option("--port", port, "TCP port (0 = any free port)")->check(CLI::Range(0, 65535));
  serve->add_option("--seed", seed, "Service seed for session plans");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--static", static_dir, "UI bundle served at /");
  serve->add_option("--event-log", event_log, "Append-only session log, replayed on start");
  serve->add_flag("--allow-partial-score", allow_partial, "Allow ?partial=1 scores of active sessions");

  std::size_t n_cases = 3;
  std::string dims = "96,96,64", spacing = "1.5,1.5,1.5";
  auto* toy = app.add_subcommand("toy-data", "Write a small synthetic abdomen dataset for trying things out");
  toy->add_option("--out", out, "Output directory")->required();
  toy->add_option("--cases", n_cases, "Number of cases");
  toy->add_option("--seed", seed, "Seed");
  toy->add_option("--dims", dims, "Grid size x,y,z");
  toy->add_option("--spacing", spacing, "Voxel spacing in mm x,y,z");

  auto* cfg_cmd = app.add_subcommand("config", "Print the effective configuration as JSON");
  cfg_cmd->add_option("--config", config_path, "JSON configuration file");
  cfg_cmd->add_option("--seed", seed, "Master seed (overrides the config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help and --version report success; every usage error exits 2.
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*gen) {
      Config cfg;
      load_config(cfg, config_path, seed);
      ts_dataset_summary summary{};
      const ts_status st = ts_generate_dataset(inputs.c_str(), out.c_str(), cfg.ptr, jobs, &summary);
      std::printf("%zu cases: %zu ok, %zu failed, %zu tumors\n", summary.total, summary.succeeded, summary.failed,
                  summary.tumors);
      check(st, "generate");
    } else if (*prev) {
      Config cfg;
      load_config(cfg, config_path, seed);
      check(ts_preview(case_dir.c_str(), cfg.ptr, png.c_str()), "preview");
      std::printf("wrote %s\n", png.c_str());
    } else if (*eval) {
      std::vector<double> edges;
      try {
        edges = parse_list(bins);
      } catch (const std::exception&) {
        std::fprintf(stderr, "synth: eval: --bins must be comma-separated numbers\n");
        return 2;
      }
      ts_eval_summary summary{};
      char* report = nullptr;
      check(ts_evaluate(pred.c_str(), gt.c_str(), tolerance, edges.data(), edges.size(), out.c_str(), &summary,
                        &report),
            "eval");
      const auto j = nlohmann::json::parse(report);
      ts_string_free(report);
      for (const auto& u : j["unmatched"]) std::fprintf(stderr, "unmatched: %s\n", u.get<std::string>().c_str());
      std::printf("%zu cases\n", summary.cases);
      std::printf("DSC %.4f [95%% CI: %.4f-%.4f]\n", summary.mean_dsc, summary.dsc_ci_lo, summary.dsc_ci_hi);
      std::printf("NSD@%gmm %.4f [95%% CI: %.4f-%.4f]\n", tolerance, summary.mean_nsd, summary.nsd_ci_lo,
                  summary.nsd_ci_hi);
      for (const auto& b : j["sensitivity_by_size"]) {
        std::printf("  %-8s %zu/%zu\n", b["bin"].get<std::string>().c_str(), b["detected"].get<std::size_t>(),
                    b["total"].get<std::size_t>());
      }
    } else if (*serve) {
      ts_turing_options opts;
      ts_turing_options_init(&opts);
      opts.real_dir = real.c_str();
      opts.synthetic_dir = synthetic.c_str();
      opts.seed = seed.value_or(0);
      opts.host = host.c_str();
      opts.static_dir = static_dir.empty() ? nullptr : static_dir.c_str();
      opts.event_log = event_log.empty() ? nullptr : event_log.c_str();
      opts.allow_partial_score = allow_partial;
      ts_turing_server* server = nullptr;
      check(ts_turing_server_create(&opts, &server), "turing-serve");
      int bound = 0;
      if (ts_status st = ts_turing_server_bind(server, port, &bound); st != TS_OK) {
        ts_turing_server_free(server);
        check(st, "turing-serve");
      }
      std::printf("listening on http://%s:%d\n", host.c_str(), bound);
      std::fflush(stdout);
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::atomic<bool> done{false};
      std::thread watcher([&] {
        while (!done && !g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
        if (g_interrupted) ts_turing_server_stop(server);
      });
      const ts_status st = ts_turing_server_run(server);
      done = true;
      watcher.join();
      ts_turing_server_free(server);
      check(st, "turing-serve");
    } else if (*toy) {
      std::vector<double> d, s;
      try {
        d = parse_list(dims);
        s = parse_list(spacing);
      } catch (const std::exception&) {
        std::fprintf(stderr, "synth: toy-data: --dims and --spacing must be comma-separated numbers\n");
        return 2;
      }
      if (d.size() != 3 || s.size() != 3) {
        std::fprintf(stderr, "synth: toy-data: --dims and --spacing need three values\n");
        return 2;
      }
      const size_t dd[3] = {static_cast<size_t>(d[0]), static_cast<size_t>(d[1]), static_cast<size_t>(d[2])};
      check(ts_write_toy_dataset(out.c_str(), n_cases, seed.value_or(0), dd, s.data()), "toy-data");
      std::printf("wrote %zu cases to %s\n", n_cases, out.c_str());
    } else if (*cfg_cmd) {
      Config cfg;
      load_config(cfg, config_path, seed);
      char* json = nullptr;
      check(ts_config_to_json(cfg.ptr, &json), "config");
      std::printf("%s\n", json);
      ts_string_free(json);
    }
  } catch (const Failure&) {
    return 1;
  }
  return 0;
}
