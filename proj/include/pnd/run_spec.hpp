#pragma once

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pnd/analysis.hpp"
#include "pnd/detector.hpp"
#include "pnd/waveform.hpp"

namespace pnd {

enum class Output { kRecords, kTrace, kHistogram, kFit, kDiscrimination, kCounting };
enum class AmplitudeSource { kReadout, kTrace };
enum class SweepMode { kNone, kBias, kFlux };

struct AnalysisOptions {
  FitOptions fit;
  int n_states = 3;
  TopBin top = TopBin::kOpen;
  std::int64_t dark_gates = 0;  // zero-flux companion run; 0 means n_gates
  bool operator==(const AnalysisOptions&) const = default;
};

struct SweepSpec {
  SweepMode mode = SweepMode::kNone;
  std::vector<double> bias_v;
  std::vector<double> flux;
  bool operator==(const SweepSpec&) const = default;
};

// Everything a command needs; a pure function of the spec file.
struct RunSpec {
  std::string name = "run";
  std::uint64_t seed = 0;
  std::int64_t n_gates = 1;
  double flux = 0.0;
  std::set<Output> outputs;
  AmplitudeSource amplitude_source = AmplitudeSource::kReadout;
  bool illuminated_only = true;
  std::int64_t trace_export_gates = 256;

  DetectorConfig detector;
  WaveformOptions waveform;
  HistogramRange histogram;
  AnalysisOptions analysis;
  BiasResponse bias;
  SweepSpec sweep;

  std::int64_t dark_gates() const { return analysis.dark_gates > 0 ? analysis.dark_gates : n_gates; }
  bool wants(Output o) const { return outputs.count(o) > 0; }
  void validate() const;
  bool operator==(const RunSpec&) const = default;
};

// Raised for malformed or invalid spec files; line is 0 when the problem is
// not tied to one line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, const std::string& what)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Sectioned key = value text; ';' and '#' start comments. Unknown sections
// or keys are errors. run.seed is mandatory.
RunSpec parse_run_spec(std::string_view text);
// Canonical text that parses back to an identical RunSpec.
std::string format_run_spec(const RunSpec& spec);
// FNV-1a of the canonical text, as 16 hex digits.
std::string spec_hash(const RunSpec& spec);

struct Preset {
  const char* name;
  const char* text;
};
const std::vector<Preset>& builtin_presets();
// Throws ConfigError for unknown names.
std::string_view preset_text(std::string_view name);

}  // namespace pnd
