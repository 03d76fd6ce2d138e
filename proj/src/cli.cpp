#include "pnd/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

#include "pnd/counting.hpp"
#include "pnd/pipeline.hpp"
#include "pnd/report.hpp"
#include "pnd/textio.hpp"

namespace fs = std::filesystem;

namespace pnd {
namespace {

// Collects artifacts in memory and writes them together, so a failing command
// leaves nothing behind. Large record dumps stream to a temporary file that
// is renamed on commit and removed otherwise.
class Staging {
 public:
  explicit Staging(fs::path dir) : dir_(std::move(dir)) {}
  Staging(const Staging&) = delete;
  Staging& operator=(const Staging&) = delete;
  ~Staging() {
    std::error_code ec;
    for (const auto& [tmp, dst] : streamed_) fs::remove(tmp, ec);
  }

  std::ostream& text(const std::string& name) {
    texts_.emplace_back(name, std::make_unique<std::ostringstream>());
    return *texts_.back().second;
  }

  std::ofstream& stream(const std::string& name) {
    fs::create_directories(dir_);
    auto tmp = dir_ / (name + ".tmp");
    streamed_.emplace_back(tmp, dir_ / name);
    files_.push_back(std::make_unique<std::ofstream>(tmp, std::ios::binary | std::ios::trunc));
    if (!*files_.back()) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    return *files_.back();
  }

  std::vector<std::string> commit() {
    fs::create_directories(dir_);
    std::vector<std::string> written;
    for (auto& f : files_) {
      f->close();
      if (!*f) throw std::runtime_error("write failed in " + dir_.string());
    }
    for (const auto& [name, body] : texts_) {
      const std::string s = body->str();
      write_atomically(dir_ / name, [&](std::ostream& os) { os << s; });
      written.push_back(name);
    }
    for (const auto& [tmp, dst] : streamed_) {
      fs::rename(tmp, dst);
      written.push_back(dst.filename().string());
    }
    streamed_.clear();
    return written;
  }

 private:
  fs::path dir_;
  std::vector<std::pair<std::string, std::unique_ptr<std::ostringstream>>> texts_;
  std::vector<std::unique_ptr<std::ofstream>> files_;
  std::vector<std::pair<fs::path, fs::path>> streamed_;
};

void write_trace_exports(Staging& stage, const RunSpec& spec, const std::vector<GateRecord>& head,
                         const std::string& header) {
  const std::uint64_t seed = derive_seed(spec.seed, 3);
  const auto raw = synthesize_trace(head, spec.detector, spec.waveform, seed);
  const auto sd = self_difference(raw, spec.waveform.samples_per_gate);
  write_trace(stage.text("trace_raw.tsv"), raw, header);
  write_trace(stage.text("trace_sd.tsv"), sd, header);

  auto& os = stage.text("trace_amplitudes.tsv");
  os << "# " << header << '\n' << "# gate_index record_mv extracted_mv\n";
  for (const auto& a : extract_amplitudes(sd, spec.detector, spec.waveform)) {
    const auto& r = head[static_cast<std::size_t>(a.gate_index - head.front().gate_index)];
    os << a.gate_index << ' ' << format_double(r.amplitude_mv) << ' ' << format_double(a.amplitude_mv) << '\n';
  }
}

double weight_at_least(const MixtureModel& m, int n) {
  double w = 0.0;
  for (const auto& p : m.peaks) {
    if (p.n >= n) w += p.weight;
  }
  return w;
}

void log_written(std::ostream& log, const fs::path& dir, const std::vector<std::string>& names) {
  for (const auto& n : names) log << "wrote " << (dir / n).string() << '\n';
}

}  // namespace

RunSpec load_run_spec(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError(0, "cannot read spec file " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  try {
    return parse_run_spec(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(e.line(), path.string() + ": " + e.what());
  }
}

int cmd_simulate(const RunSpec& spec, const fs::path& out_dir, std::ostream& log) {
  spec.validate();
  const std::string header = artifact_header(spec_hash(spec));
  Staging stage(out_dir);
  int status = kExitOk;

  stage.text("spec.ini") << format_run_spec(spec);

  RecordSink sink;
  if (spec.wants(Output::kRecords)) {
    auto& os = stage.stream("records.tsv");
    write_records_header(os, header);
    sink = [&os](const GateRecord& r) { write_record(os, r); };
  }
  const RunProducts run = run_pipeline(spec, spec.flux, sink);

  if (spec.wants(Output::kTrace) && !run.head.empty()) write_trace_exports(stage, spec, run.head, header);
  if (spec.wants(Output::kHistogram)) write_histogram(stage.text("histogram.tsv"), run.histogram, header);

  if (spec.wants(Output::kFit) || spec.wants(Output::kDiscrimination)) {
    const AnalysisProducts a = analyze_histogram(run.histogram, spec.analysis);
    if (spec.wants(Output::kFit)) write_fit_report(stage.text("fit.txt"), a.fit, a.poisson, header);
    if (!a.fit.valid) {
      log << "fit did not converge within " << spec.analysis.fit.max_iterations << " iterations\n";
      status = kExitNumeric;
    }
    if (spec.wants(Output::kDiscrimination)) {
      if (a.discrimination) {
        write_discrimination_report(stage.text("discrimination.txt"), *a.discrimination, header);
      } else {
        log << "no discrimination report: " << a.discrimination_error << '\n';
        status = kExitNumeric;
      }
    }
    for (const auto& w : a.fit.warnings) log << "warning: " << w << '\n';
  }

  if (spec.wants(Output::kCounting)) {
    const ClickTally dark =
        count_clicks(spec.detector, PhotonFlux(0.0), spec.dark_gates(), derive_seed(spec.seed, 2));
    const CountingSummary s = estimate_efficiency(run.tally, dark, PhotonFlux(spec.flux));
    write_counting_report(stage.text("counting.txt"), s, run.tally, dark, header);
    log << "eta_est = " << format_double(s.eta_est) << ", p_afterpulse = " << format_double(s.p_afterpulse)
        << ", p_click_dark = " << format_double(s.p_click_dark) << '\n';
  }

  log_written(log, out_dir, stage.commit());
  return status;
}

int cmd_analyze(const fs::path& histogram_path, const RunSpec& spec, const AnalyzeOverrides& overrides,
                const fs::path& out_dir, std::ostream& log) {
  AnalysisOptions opts = spec.analysis;
  if (overrides.n_max) opts.fit.n_max = *overrides.n_max;
  if (overrides.mode) opts.fit.mode = *overrides.mode;
  if (overrides.n_states) opts.n_states = *overrides.n_states;
  if (overrides.top) opts.top = *overrides.top;
  if (overrides.initial_gain_mv) opts.fit.initial_gain_mv = *overrides.initial_gain_mv;
  if (opts.fit.n_max < 1) throw ConfigError(0, "--n-max must be at least 1");
  if (opts.n_states < 2) throw ConfigError(0, "--states must be at least 2");

  std::ifstream is(histogram_path, std::ios::binary);
  if (!is) throw ConfigError(0, "cannot read histogram " + histogram_path.string());
  AmplitudeHistogram hist;
  try {
    hist = read_histogram(is);
  } catch (const std::exception& e) {
    throw ConfigError(0, histogram_path.string() + ": " + e.what());
  }
  if (hist.total == 0) throw ConfigError(0, histogram_path.string() + ": histogram is empty");

  RunSpec effective = spec;
  effective.analysis = opts;
  const std::string header = artifact_header(spec_hash(effective));

  const AnalysisProducts a = analyze_histogram(hist, opts);
  int status = a.fit.valid ? kExitOk : kExitNumeric;

  Staging stage(out_dir);
  auto& os = stage.text("analysis.txt");
  write_fit_report(os, a.fit, a.poisson, header);
  if (a.discrimination) {
    write_discrimination_report(os, *a.discrimination, "discrimination");
  } else {
    os << "# discrimination\nerror = " << a.discrimination_error << '\n';
    status = kExitNumeric;
  }
  for (const auto& w : a.fit.warnings) log << "warning: " << w << '\n';
  if (!a.fit.valid) log << "fit did not converge within " << opts.fit.max_iterations << " iterations\n";
  log << "mu_det = " << format_double(a.poisson.mu_det) << '\n';
  log_written(log, out_dir, stage.commit());
  return status;
}

int cmd_sweep(const RunSpec& spec, const fs::path& out_dir, int jobs, std::ostream& log) {
  spec.validate();
  if (jobs < 1) throw ConfigError(0, "--jobs must be at least 1");
  const std::string header = artifact_header(spec_hash(spec));
  Staging stage(out_dir);
  int status = kExitOk;

  switch (spec.sweep.mode) {
    case SweepMode::kNone:
      throw ConfigError(0, "sweep.mode is none; nothing to sweep");
    case SweepMode::kBias: {
      if (spec.sweep.bias_v.empty()) throw ConfigError(0, "sweep.bias_v is empty");
      const auto rows = bias_sweep(spec.bias, spec.detector, spec.sweep.bias_v, PhotonFlux(spec.flux),
                                   spec.n_gates, spec.dark_gates(), spec.seed, jobs);
      write_bias_table(stage.text("sweep_bias.tsv"), rows, header);
      break;
    }
    case SweepMode::kFlux: {
      const auto& fluxes = spec.sweep.flux;
      if (fluxes.empty()) throw ConfigError(0, "sweep.flux is empty");
      const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(fluxes.size());
      std::vector<RunProducts> runs(fluxes.size());
      std::vector<AnalysisProducts> fits(fluxes.size());
      std::vector<std::exception_ptr> errors(fluxes.size());
#pragma omp parallel for schedule(dynamic) num_threads(jobs)
      for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
          RunSpec point = spec;
          point.outputs = {Output::kHistogram, Output::kFit};
          runs[i] = run_pipeline(point, fluxes[i]);
          fits[i] = analyze_histogram(runs[i].histogram, spec.analysis);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
      for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }

      auto& table = stage.text("sweep_flux.tsv");
      table << "# " << header << '\n' << "# mu mu_det weight_ge2 residual_norm valid\n";
      for (std::size_t i = 0; i < fluxes.size(); ++i) {
        const auto& f = fits[i].fit;
        write_histogram(stage.text("histogram_mu_" + format_double(fluxes[i]) + ".tsv"), runs[i].histogram, header);
        table << format_double(fluxes[i]) << ' ' << format_double(fits[i].poisson.mu_det) << ' '
              << format_double(weight_at_least(f.model, 2)) << ' ' << format_double(f.residual_norm) << ' '
              << (f.valid ? 1 : 0) << '\n';
        if (!f.valid) {
          log << "fit at mu = " << format_double(fluxes[i]) << " did not converge\n";
          status = kExitNumeric;
        }
      }
      break;
    }
  }
  log_written(log, out_dir, stage.commit());
  return status;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gated photon-number-resolving detector simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  std::string spec_path;
  std::string preset;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  bool dump_spec = false;

  auto add_common = [&](CLI::App* sub) {
    auto* s = sub->add_option("--spec", spec_path, "Run spec file")->check(CLI::ExistingFile);
    auto* p = sub->add_option("--preset", preset, "Built-in preset name");
    s->excludes(p);
    sub->add_option("--out-dir", out_dir, "Directory for artifacts")->capture_default_str();
    sub->add_option("--seed", seed, "Override the spec seed");
    sub->add_option("--jobs", jobs, "Concurrent sweep points")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_flag("--dump-spec", dump_spec, "Print the canonical spec and exit");
  };

  auto* simulate = app.add_subcommand("simulate", "Simulate a run and write the requested artifacts");
  add_common(simulate);

  auto* analyze = app.add_subcommand("analyze", "Fit a histogram file and report discrimination errors");
  add_common(analyze);
  std::string histogram_path;
  AnalyzeOverrides ov;
  std::string width_mode;
  std::string top_bin;
  analyze->add_option("--histogram", histogram_path, "Histogram file (bin_left bin_right count)")->required();
  analyze->add_option("--n-max", ov.n_max, "Highest photon number in the mixture");
  analyze->add_option("--width-mode", width_mode, "constrained | free")
      ->check(CLI::IsMember({"constrained", "free"}));
  analyze->add_option("--states", ov.n_states, "Number of discriminated states");
  analyze->add_option("--top-bin", top_bin, "open | closed")->check(CLI::IsMember({"open", "closed"}));
  analyze->add_option("--initial-gain", ov.initial_gain_mv, "Starting peak spacing in mV");

  auto* sweep = app.add_subcommand("sweep", "Run a bias or flux sweep");
  add_common(sweep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    RunSpec spec;
    if (!spec_path.empty()) {
      spec = load_run_spec(spec_path);
    } else if (!preset.empty()) {
      spec = parse_run_spec(preset_text(preset));
    } else if (!analyze->parsed()) {
      throw ConfigError(0, "one of --spec or --preset is required");
    }
    if (seed) spec.seed = *seed;
    if (dump_spec) {
      out << format_run_spec(spec);
      return kExitOk;
    }

    if (simulate->parsed()) return cmd_simulate(spec, out_dir, out);
    if (sweep->parsed()) return cmd_sweep(spec, out_dir, jobs, out);
    if (!width_mode.empty()) ov.mode = width_mode == "free" ? WidthMode::kFree : WidthMode::kConstrained;
    if (!top_bin.empty()) ov.top = top_bin == "closed" ? TopBin::kClosed : TopBin::kOpen;
    return cmd_analyze(histogram_path, spec, ov, out_dir, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace pnd
