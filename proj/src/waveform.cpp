#include "pnd/waveform.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>

#include "pnd/kernels.hpp"
#include "pnd/textio.hpp"

namespace pnd {

void WaveformOptions::validate(const DetectorConfig& cfg) const {
  if (samples_per_gate < 16 || samples_per_gate % 4 != 0) {
    throw std::invalid_argument("waveform.samples_per_gate: must be a multiple of 4 and >= 16");
  }
  if (!(feedthrough_mv >= 0.0)) throw std::invalid_argument("waveform.feedthrough_mv: must be >= 0");
  if (!(feedthrough_edge_ps > 0.0)) throw std::invalid_argument("waveform.feedthrough_edge_ps: must be > 0");
  if (smoothing_samples < 1 || smoothing_samples % 2 == 0 || smoothing_samples > samples_per_gate / 4) {
    throw std::invalid_argument("waveform.smoothing_samples: must be odd, >= 1 and <= a quarter period");
  }
  if (cfg.avalanche_duration_ps > 0.5 * cfg.gate_period_ps()) {
    throw std::invalid_argument("detector.avalanche_duration_ps: pulse must fit in the biased half period");
  }
}

GateGeometry gate_geometry(const DetectorConfig& cfg, const WaveformOptions& opts) {
  cfg.validate();
  opts.validate(cfg);
  GateGeometry g;
  g.period = static_cast<std::size_t>(opts.samples_per_gate);
  const double ps_per_sample = cfg.gate_period_ps() / static_cast<double>(g.period);

  // Bias rises at sample 0 and falls at mid-period; the feedthrough is the
  // band-limited derivative of that square wave.
  const double edge = opts.feedthrough_edge_ps / ps_per_sample;
  const auto half_period = static_cast<double>(g.period / 2);
  g.feedthrough.resize(g.period);
  for (std::size_t j = 0; j < g.period; ++j) {
    const double x = static_cast<double>(j);
    const double p = static_cast<double>(g.period);
    const double d_rise = std::min(x, p - x);
    const double d_fall = std::abs(x - half_period);
    g.feedthrough[j] = opts.feedthrough_mv * (std::exp(-0.5 * d_rise * d_rise / (edge * edge)) -
                                              std::exp(-0.5 * d_fall * d_fall / (edge * edge)));
  }

  // Avalanche pulse centred in the biased half period.
  g.pulse_center = g.period / 4;
  const double duration = cfg.avalanche_duration_ps / ps_per_sample;
  auto half = static_cast<std::size_t>(std::ceil(duration / 2.0)) - 1;
  half = std::min(half, g.pulse_center);
  g.pulse_offset = g.pulse_center - half;
  g.pulse.resize(2 * half + 1);
  for (std::size_t j = 0; j < g.pulse.size(); ++j) {
    const double x = static_cast<double>(j) - static_cast<double>(half);
    const double c = std::cos(std::numbers::pi * x / duration);
    g.pulse[j] = c * c;
  }
  g.pulse[half] = 1.0;

  g.window_length = g.period / 2;
  g.window_begin = g.pulse_center - g.window_length / 2;
  g.smooth_half = static_cast<std::size_t>(opts.smoothing_samples / 2);
  double sum = 0.0;
  for (std::size_t i = half - std::min(half, g.smooth_half); i <= std::min(2 * half, half + g.smooth_half); ++i) {
    sum += g.pulse[i];
  }
  g.smooth_gain = sum / static_cast<double>(2 * g.smooth_half + 1);
  return g;
}

namespace {

kernels::WindowParams window_params(const GateGeometry& g) {
  return {g.period, g.window_begin, g.window_length, g.smooth_half, g.smooth_gain};
}

void require_contiguous(std::span<const GateRecord> records) {
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].gate_index != records[i - 1].gate_index + 1) {
      throw std::invalid_argument("synthesize_trace: records must cover consecutive gates");
    }
  }
}

}  // namespace

WaveformTrace synthesize_trace(std::span<const GateRecord> records, const DetectorConfig& cfg,
                               const WaveformOptions& opts, std::uint64_t seed) {
  const GateGeometry g = gate_geometry(cfg, opts);
  require_contiguous(records);
  WaveformTrace trace;
  trace.sample_rate = cfg.gate_frequency * static_cast<double>(g.period);
  trace.start_time = records.empty() ? 0.0 : static_cast<double>(records.front().gate_index) / cfg.gate_frequency;
  trace.samples.resize(records.size() * g.period);

  std::vector<double> amplitudes(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) amplitudes[i] = records[i].amplitude_mv;
  kernels::RenderParams p;
  p.background = g.feedthrough;
  p.pulse = g.pulse;
  p.pulse_offset = g.pulse_offset;
  p.noise_sigma = cfg.sigma_elec_mv;
  p.seed = seed;
  p.first_gate = records.empty() ? 0 : static_cast<std::uint64_t>(records.front().gate_index);
  kernels::omp::render_gates(amplitudes, p, trace.samples);
  return trace;
}

WaveformTrace self_difference(const WaveformTrace& trace, std::int64_t period_samples) {
  if (period_samples < 1) throw std::invalid_argument("self_difference: period must be >= 1 sample");
  const auto period = static_cast<std::size_t>(period_samples);
  if (trace.samples.size() < period) {
    throw std::invalid_argument("self_difference: trace shorter than one period");
  }
  WaveformTrace out;
  out.sample_rate = trace.sample_rate;
  out.start_time = trace.start_time + static_cast<double>(period) / trace.sample_rate;
  out.samples.resize(trace.samples.size() - period);
  kernels::omp::self_difference(trace.samples, period, out.samples);
  return out;
}

std::vector<GateAmplitude> extract_amplitudes(const WaveformTrace& trace, const DetectorConfig& cfg,
                                              const WaveformOptions& opts) {
  const GateGeometry g = gate_geometry(cfg, opts);
  const double expected_rate = cfg.gate_frequency * static_cast<double>(g.period);
  if (std::abs(trace.sample_rate - expected_rate) > 1e-9 * expected_rate) {
    throw std::invalid_argument("extract_amplitudes: sample rate does not match samples_per_gate");
  }
  const auto first_sample = std::llround(trace.start_time * trace.sample_rate);
  if (first_sample % static_cast<long long>(g.period) != 0) {
    throw std::invalid_argument("extract_amplitudes: trace does not start on a gate boundary");
  }
  const auto wp = window_params(g);
  std::vector<double> maxima(kernels::measurable_gates(trace.samples.size(), wp));
  kernels::omp::window_max(trace.samples, wp, maxima);

  const auto first_gate =
      static_cast<std::int64_t>(first_sample / static_cast<long long>(g.period) + kernels::first_measurable_gate(wp));
  std::vector<GateAmplitude> out(maxima.size());
  for (std::size_t i = 0; i < maxima.size(); ++i) {
    out[i] = {first_gate + static_cast<std::int64_t>(i), maxima[i]};
  }
  return out;
}

std::vector<GateAmplitude> trace_amplitudes(std::span<const GateRecord> records, const DetectorConfig& cfg,
                                            const WaveformOptions& opts, std::uint64_t seed,
                                            std::int64_t chunk_gates) {
  const GateGeometry g = gate_geometry(cfg, opts);
  require_contiguous(records);
  if (chunk_gates < 1) throw std::invalid_argument("trace_amplitudes: chunk size must be >= 1");
  // Gates consumed ahead of a chunk: one for the difference and the
  // smoothing margin of the window.
  const std::size_t lead = 1 + kernels::first_measurable_gate(window_params(g));
  std::vector<GateAmplitude> out;
  out.reserve(records.size());
  for (std::size_t begin = 0; begin < records.size(); begin += static_cast<std::size_t>(chunk_gates)) {
    const std::size_t end = std::min(records.size(), begin + static_cast<std::size_t>(chunk_gates));
    const std::size_t from = begin >= lead ? begin - lead : 0;
    const auto raw = synthesize_trace(records.subspan(from, end - from), cfg, opts, seed);
    if (raw.samples.size() <= g.period) continue;
    const auto diffed = self_difference(raw, static_cast<std::int64_t>(g.period));
    for (const auto& a : extract_amplitudes(diffed, cfg, opts)) {
      if (a.gate_index >= records[begin].gate_index) out.push_back(a);
    }
  }
  return out;
}

std::vector<double> readout_amplitudes(std::span<const GateRecord> records, const DetectorConfig& cfg,
                                       std::uint64_t seed, bool illuminated_only) {
  std::vector<GateRecord> selected;
  std::span<const GateRecord> source = records;
  if (illuminated_only) {
    for (const auto& r : records) {
      if (r.illuminated) selected.push_back(r);
    }
    source = selected;
  }
  std::vector<double> out(source.size());
  kernels::omp::add_readout_noise(source, cfg.sigma_elec_mv, seed, out);
  return out;
}

AmplitudeHistogram empty_histogram(const HistogramRange& range) {
  if (!(range.bin_width_mv > 0.0)) throw std::invalid_argument("histogram.bin_width_mv: must be > 0");
  if (!(range.hi_mv > range.lo_mv)) throw std::invalid_argument("histogram.hi_mv: must exceed lo_mv");
  const auto n = static_cast<std::size_t>(std::llround((range.hi_mv - range.lo_mv) / range.bin_width_mv));
  if (n == 0) throw std::invalid_argument("histogram: range narrower than one bin");
  AmplitudeHistogram h;
  h.bin_edges.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i) h.bin_edges[i] = range.lo_mv + static_cast<double>(i) * range.bin_width_mv;
  h.counts.assign(n, 0);
  return h;
}

void accumulate(AmplitudeHistogram& hist, std::span<const double> amplitudes) {
  const double lo = hist.bin_edges.front();
  const double width = (hist.bin_edges.back() - lo) / static_cast<double>(hist.bins());
  kernels::Histogram1D h{hist.counts, lo, width, 0, 0};
  kernels::omp::fill_histogram(amplitudes, h);
  hist.underflow += h.underflow;
  hist.overflow += h.overflow;
  hist.total = 0;
  for (auto c : hist.counts) hist.total += c;
}

AmplitudeHistogram build_histogram(std::span<const double> amplitudes, const HistogramRange& range) {
  AmplitudeHistogram h = empty_histogram(range);
  accumulate(h, amplitudes);
  return h;
}

namespace {

void write_header(std::ostream& os, const std::string& header) {
  std::size_t pos = 0;
  while (pos < header.size()) {
    const std::size_t nl = header.find('\n', pos);
    const std::size_t end = nl == std::string::npos ? header.size() : nl;
    os << "# " << header.substr(pos, end - pos) << '\n';
    pos = end + 1;
  }
}

}  // namespace

void write_trace(std::ostream& os, const WaveformTrace& trace, const std::string& header) {
  write_header(os, header);
  os << "# sample_rate = " << format_double(trace.sample_rate) << '\n';
  os << "# start_time = " << format_double(trace.start_time) << '\n';
  os << "# voltage_mv\n";
  for (double v : trace.samples) os << format_double(v) << '\n';
}

WaveformTrace read_trace(std::istream& is) {
  WaveformTrace t;
  bool have_rate = false;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::string_view s = trim(line);
    if (s.empty()) continue;
    if (s.front() == '#') {
      s = trim(s.substr(1));
      const auto eq = s.find('=');
      if (eq == std::string_view::npos) continue;
      const auto key = trim(s.substr(0, eq));
      const auto value = trim(s.substr(eq + 1));
      if (key == "sample_rate") {
        if (!parse_double(value, t.sample_rate)) throw std::runtime_error("line " + std::to_string(line_no) + ": bad sample_rate");
        have_rate = true;
      } else if (key == "start_time") {
        if (!parse_double(value, t.start_time)) throw std::runtime_error("line " + std::to_string(line_no) + ": bad start_time");
      }
      continue;
    }
    double v = 0.0;
    if (!parse_double(s, v)) throw std::runtime_error("line " + std::to_string(line_no) + ": expected one sample value");
    t.samples.push_back(v);
  }
  if (!have_rate || !(t.sample_rate > 0.0)) throw std::runtime_error("trace header lacks a positive sample_rate");
  return t;
}

void write_histogram(std::ostream& os, const AmplitudeHistogram& hist, const std::string& header) {
  write_header(os, header);
  os << "# underflow " << hist.underflow << "\n# overflow " << hist.overflow << '\n';
  os << "# bin_left_mv bin_right_mv count\n";
  for (std::size_t i = 0; i < hist.bins(); ++i) {
    os << format_double(hist.bin_edges[i]) << ' ' << format_double(hist.bin_edges[i + 1]) << ' ' << hist.counts[i]
       << '\n';
  }
}

AmplitudeHistogram read_histogram(std::istream& is) {
  AmplitudeHistogram h;
  std::string line;
  std::int64_t line_no = 0;
  auto fail = [&](const std::string& what) {
    throw std::runtime_error("histogram line " + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(is, line)) {
    ++line_no;
    const std::string_view s = trim(line);
    if (s.empty()) continue;
    if (s.front() == '#') {
      // Out-of-range tallies ride along as comments; absent means zero.
      const auto c = split_fields(s.substr(1));
      if (c.size() == 2 && (c[0] == "underflow" || c[0] == "overflow")) {
        std::int64_t v = 0;
        if (!parse_int(c[1], v) || v < 0) fail(std::string(c[0]) + " must be a nonnegative integer");
        (c[0] == "underflow" ? h.underflow : h.overflow) = v;
      }
      continue;
    }
    const auto fields = split_fields(s);
    if (fields.size() != 3) fail("expected 'bin_left bin_right count'");
    double left = 0.0, right = 0.0;
    std::int64_t count = 0;
    if (!parse_double(fields[0], left) || !parse_double(fields[1], right)) fail("bin edges are not numbers");
    if (!parse_int(fields[2], count) || count < 0) fail("count must be a nonnegative integer");
    if (!(right > left)) fail("bin edges must be strictly increasing");
    if (h.bin_edges.empty()) {
      h.bin_edges.push_back(left);
    } else if (std::abs(left - h.bin_edges.back()) > 1e-9 * std::max(1.0, std::abs(left))) {
      fail("bin does not start where the previous one ended");
    }
    h.bin_edges.push_back(right);
    h.counts.push_back(count);
    h.total += count;
  }
  if (h.counts.empty()) throw std::runtime_error("histogram contains no bins");
  return h;
}

}  // namespace pnd
