#include "pnd/pipeline.hpp"

#include "pnd/kernels.hpp"

namespace pnd {
namespace {

constexpr std::size_t kChunk = 1 << 16;

}  // namespace

RunProducts run_pipeline(const RunSpec& spec, double flux, const RecordSink& sink) {
  spec.validate();
  const DetectorConfig& cfg = spec.detector;
  const std::uint64_t readout_seed = derive_seed(spec.seed, 3);
  RunProducts out;
  out.histogram = empty_histogram(spec.histogram);

  const bool need_amplitudes =
      spec.wants(Output::kHistogram) || spec.wants(Output::kFit) || spec.wants(Output::kDiscrimination);
  const bool via_trace = spec.amplitude_source == AmplitudeSource::kTrace;
  std::size_t lead = 0;
  if (via_trace) {
    const GateGeometry g = gate_geometry(cfg, spec.waveform);
    lead = 1 + kernels::first_measurable_gate({g.period, g.window_begin, g.window_length, g.smooth_half, g.smooth_gain});
  }

  std::vector<GateRecord> chunk;
  chunk.reserve(kChunk + lead);
  std::size_t fresh_from = 0;  // records before this index were carried over
  auto flush = [&] {
    if (chunk.size() == fresh_from) return;
    std::vector<double> amps;
    if (via_trace) {
      const auto extracted = trace_amplitudes(chunk, cfg, spec.waveform, readout_seed);
      const std::int64_t first_fresh = chunk[fresh_from].gate_index;
      for (const auto& a : extracted) {
        if (a.gate_index < first_fresh) continue;
        if (spec.illuminated_only && a.gate_index % cfg.illumination_divisor != 0) continue;
        amps.push_back(a.amplitude_mv);
      }
    } else {
      amps = readout_amplitudes(std::span(chunk).subspan(fresh_from), cfg, readout_seed, spec.illuminated_only);
    }
    accumulate(out.histogram, amps);
    const std::size_t keep = std::min(lead, chunk.size());
    chunk.erase(chunk.begin(), chunk.end() - static_cast<std::ptrdiff_t>(keep));
    fresh_from = chunk.size();
  };

  for_each_gate(cfg, PhotonFlux(flux), spec.n_gates, spec.seed, [&](const GateRecord& r) {
    out.tally.add(r);
    if (sink) sink(r);
    if (static_cast<std::int64_t>(out.head.size()) < spec.trace_export_gates) out.head.push_back(r);
    if (!need_amplitudes) return;
    chunk.push_back(r);
    if (chunk.size() - fresh_from >= kChunk) flush();
  });
  if (need_amplitudes) flush();
  return out;
}

AnalysisProducts analyze_histogram(const AmplitudeHistogram& hist, const AnalysisOptions& opts) {
  AnalysisProducts out;
  out.fit = fit_mixture(hist, opts.fit);
  out.poisson = poisson_consistency(out.fit.model);
  const int pairs = opts.top == TopBin::kClosed ? opts.n_states : opts.n_states - 1;
  try {
    const auto thresholds = place_thresholds(out.fit.model, pairs);
    out.discrimination = discrimination_errors(out.fit.model, thresholds, opts.n_states, opts.top);
  } catch (const NoCrossingError& e) {
    out.discrimination_error = e.what();
  }
  return out;
}

}  // namespace pnd
