#include "pnd/run_spec.hpp"

#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

#include "pnd/textio.hpp"

namespace pnd {
namespace {

// One bound key: how to read it into a RunSpec and how to print it back.
struct Field {
  const char* section;
  const char* key;
  std::function<bool(RunSpec&, std::string_view)> set;
  std::function<std::string(const RunSpec&)> get;
};

template <class Member>
Field real(const char* section, const char* key, Member member) {
  return {section, key, [member](RunSpec& s, std::string_view v) { return parse_double(v, member(s)); },
          [member](const RunSpec& s) { return format_double(member(const_cast<RunSpec&>(s))); }};
}

template <class Member>
Field integer(const char* section, const char* key, Member member) {
  return {section, key,
          [member](RunSpec& s, std::string_view v) {
            std::int64_t x = 0;
            if (!parse_int(v, x)) return false;
            member(s) = static_cast<std::remove_reference_t<decltype(member(s))>>(x);
            return true;
          },
          [member](const RunSpec& s) { return std::to_string(member(const_cast<RunSpec&>(s))); }};
}

template <class Member>
Field real_list(const char* section, const char* key, Member member) {
  return {section, key,
          [member](RunSpec& s, std::string_view v) {
            std::vector<double> out;
            for (auto f : split_fields(v)) {
              double x = 0.0;
              if (!parse_double(f, x)) return false;
              out.push_back(x);
            }
            member(s) = std::move(out);
            return true;
          },
          [member](const RunSpec& s) {
            std::string out;
            for (double x : member(const_cast<RunSpec&>(s))) out += (out.empty() ? "" : ", ") + format_double(x);
            return out;
          }};
}

template <class Enum, class Member>
Field choice(const char* section, const char* key, Member member, std::vector<std::pair<const char*, Enum>> names) {
  return {section, key,
          [member, names](RunSpec& s, std::string_view v) {
            for (const auto& [n, e] : names) {
              if (v == n) {
                member(s) = e;
                return true;
              }
            }
            return false;
          },
          [member, names](const RunSpec& s) {
            for (const auto& [n, e] : names) {
              if (member(const_cast<RunSpec&>(s)) == e) return std::string(n);
            }
            return std::string("?");
          }};
}

const std::vector<std::pair<const char*, Output>> kOutputNames = {
    {"records", Output::kRecords},   {"trace", Output::kTrace},
    {"histogram", Output::kHistogram}, {"fit", Output::kFit},
    {"discrimination", Output::kDiscrimination}, {"counting", Output::kCounting}};

#define M(expr) [](RunSpec& s) -> auto& { return expr; }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"run", "name",
       [](RunSpec& s, std::string_view v) {
         s.name = std::string(v);
         return !s.name.empty() && s.name.find_first_of(" \t/\\") == std::string::npos;
       },
       [](const RunSpec& s) { return s.name; }},
      integer("run", "seed", M(s.seed)),
      integer("run", "n_gates", M(s.n_gates)),
      real("run", "flux", M(s.flux)),
      {"run", "outputs",
       [](RunSpec& s, std::string_view v) {
         s.outputs.clear();
         for (auto f : split_fields(v)) {
           bool known = false;
           for (const auto& [n, o] : kOutputNames) {
             if (f == n) {
               s.outputs.insert(o);
               known = true;
             }
           }
           if (!known) return false;
         }
         return true;
       },
       [](const RunSpec& s) {
         std::string out;
         for (const auto& [n, o] : kOutputNames) {
           if (s.wants(o)) out += (out.empty() ? "" : ", ") + std::string(n);
         }
         return out;
       }},
      choice<AmplitudeSource>("run", "amplitude_source", M(s.amplitude_source),
                              {{"readout", AmplitudeSource::kReadout}, {"trace", AmplitudeSource::kTrace}}),
      choice<bool>("run", "illuminated_only", M(s.illuminated_only), {{"true", true}, {"false", false}}),
      integer("run", "trace_export_gates", M(s.trace_export_gates)),

      real("detector", "gate_frequency_hz", M(s.detector.gate_frequency)),
      real("detector", "v_dc", M(s.detector.v_dc)),
      real("detector", "v_ac", M(s.detector.v_ac)),
      real("detector", "v_br", M(s.detector.v_br)),
      real("detector", "qe", M(s.detector.qe)),
      real("detector", "p_eta", M(s.detector.p_eta)),
      real("detector", "gain_mv", M(s.detector.gain_mv)),
      real("detector", "sigma_av_mv", M(s.detector.sigma_av_mv)),
      real("detector", "sigma_elec_mv", M(s.detector.sigma_elec_mv)),
      real("detector", "dark_prob", M(s.detector.dark_prob)),
      real("detector", "trap_fill", M(s.detector.trap_fill)),
      real("detector", "trap_release_prob", M(s.detector.trap_release_prob)),
      integer("detector", "illumination_divisor", M(s.detector.illumination_divisor)),
      real("detector", "avalanche_duration_ps", M(s.detector.avalanche_duration_ps)),
      real_list("detector", "peak_means_mv", M(s.detector.peak_means_mv)),

      integer("waveform", "samples_per_gate", M(s.waveform.samples_per_gate)),
      real("waveform", "feedthrough_mv", M(s.waveform.feedthrough_mv)),
      real("waveform", "feedthrough_edge_ps", M(s.waveform.feedthrough_edge_ps)),
      integer("waveform", "smoothing_samples", M(s.waveform.smoothing_samples)),

      real("histogram", "bin_width_mv", M(s.histogram.bin_width_mv)),
      real("histogram", "lo_mv", M(s.histogram.lo_mv)),
      real("histogram", "hi_mv", M(s.histogram.hi_mv)),

      integer("analysis", "n_max", M(s.analysis.fit.n_max)),
      choice<WidthMode>("analysis", "width_mode", M(s.analysis.fit.mode),
                        {{"constrained", WidthMode::kConstrained}, {"free", WidthMode::kFree}}),
      integer("analysis", "max_iterations", M(s.analysis.fit.max_iterations)),
      real("analysis", "initial_gain_mv", M(s.analysis.fit.initial_gain_mv)),
      real("analysis", "min_peak_counts", M(s.analysis.fit.min_peak_counts)),
      integer("analysis", "n_states", M(s.analysis.n_states)),
      choice<TopBin>("analysis", "top_bin", M(s.analysis.top), {{"open", TopBin::kOpen}, {"closed", TopBin::kClosed}}),
      integer("analysis", "dark_gates", M(s.analysis.dark_gates)),

      real("bias_response", "v_min", M(s.bias.v_min)),
      real("bias_response", "v_max", M(s.bias.v_max)),
      real("bias_response", "p_eta_rate", M(s.bias.p_eta_rate)),
      real("bias_response", "dark_at_max", M(s.bias.dark_at_max)),
      real("bias_response", "dark_slope", M(s.bias.dark_slope)),
      real("bias_response", "trap_onset_v", M(s.bias.trap_onset_v)),
      real("bias_response", "trap_fill_at_max", M(s.bias.trap_fill_at_max)),
      real("bias_response", "trap_slope", M(s.bias.trap_slope)),

      choice<SweepMode>("sweep", "mode", M(s.sweep.mode),
                        {{"none", SweepMode::kNone}, {"bias", SweepMode::kBias}, {"flux", SweepMode::kFlux}}),
      real_list("sweep", "bias_v", M(s.sweep.bias_v)),
      real_list("sweep", "flux", M(s.sweep.flux)),
  };
  return table;
}

#undef M

const Field* find_field(std::string_view section, std::string_view key) {
  for (const auto& f : fields()) {
    if (section == f.section && key == f.key) return &f;
  }
  return nullptr;
}

std::string_view strip_comment(std::string_view line) {
  const auto pos = line.find_first_of(";#");
  return pos == std::string_view::npos ? line : line.substr(0, pos);
}

}  // namespace

void RunSpec::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError(0, what); };
  try {
    detector.validate();
    if (wants(Output::kTrace) || amplitude_source == AmplitudeSource::kTrace) waveform.validate(detector);
    (void)empty_histogram(histogram);
    bias.validate();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  if (n_gates < 1) fail("run.n_gates: must be >= 1");
  if (!(flux >= 0.0)) fail("run.flux: must be >= 0");
  if (trace_export_gates < 2) fail("run.trace_export_gates: must be >= 2");
  if (analysis.fit.n_max < 1) fail("analysis.n_max: must be >= 1");
  if (analysis.fit.max_iterations < 1) fail("analysis.max_iterations: must be >= 1");
  if (analysis.n_states < 2 || analysis.n_states > analysis.fit.n_max + 1) {
    fail("analysis.n_states: must lie in [2, n_max + 1]");
  }
  if (analysis.top == TopBin::kClosed && analysis.n_states > analysis.fit.n_max) {
    fail("analysis.top_bin: closed top bin needs n_states <= n_max");
  }
  if (analysis.dark_gates < 0) fail("analysis.dark_gates: must be >= 0");
  for (double m : sweep.flux) {
    if (!(m >= 0.0)) fail("sweep.flux: values must be >= 0");
  }
}

RunSpec parse_run_spec(std::string_view text) {
  RunSpec spec;
  std::string section;
  bool have_seed = false;
  std::map<std::string, int> seen;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::string_view line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(line_no, "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      bool known = false;
      for (const auto& f : fields()) known = known || section == f.section;
      if (!known) throw ConfigError(line_no, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(line_no, "expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (section.empty()) throw ConfigError(line_no, "key '" + key + "' outside any section");
    const Field* f = find_field(section, key);
    if (!f) throw ConfigError(line_no, "unknown key " + section + "." + key);
    const std::string full = section + "." + key;
    if (seen.count(full)) {
      throw ConfigError(line_no, full + " repeated (first set on line " + std::to_string(seen[full]) + ")");
    }
    seen[full] = line_no;
    if (!f->set(spec, value)) throw ConfigError(line_no, "invalid value '" + std::string(value) + "' for " + full);
    if (full == "run.seed") have_seed = true;
  }
  if (!have_seed) throw ConfigError(0, "run.seed is required");
  try {
    spec.validate();
  } catch (const ConfigError& e) {
    // Point at the line that set the offending field, when there is one.
    const std::string what = e.what();
    const auto it = seen.find(what.substr(0, what.find(':')));
    if (it == seen.end()) throw;
    throw ConfigError(it->second, what);
  }
  return spec;
}

std::string format_run_spec(const RunSpec& spec) {
  std::ostringstream os;
  std::string section;
  for (const auto& f : fields()) {
    if (section != f.section) {
      if (!section.empty()) os << '\n';
      section = f.section;
      os << '[' << section << "]\n";
    }
    os << f.key << " = " << f.get(spec) << '\n';
  }
  return os.str();
}

std::string spec_hash(const RunSpec& spec) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : format_run_spec(spec)) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string_view preset_text(std::string_view name) {
  for (const auto& p : builtin_presets()) {
    if (name == p.name) return p.text;
  }
  std::string known;
  for (const auto& p : builtin_presets()) known += (known.empty() ? "" : ", ") + std::string(p.name);
  throw ConfigError(0, "unknown preset '" + std::string(name) + "' (known: " + known + ")");
}

}  // namespace pnd
