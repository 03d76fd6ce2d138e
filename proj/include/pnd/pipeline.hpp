#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pnd/analysis.hpp"
#include "pnd/counting.hpp"
#include "pnd/run_spec.hpp"
#include "pnd/waveform.hpp"

namespace pnd {

struct RunProducts {
  AmplitudeHistogram histogram;
  ClickTally tally;
  std::vector<GateRecord> head;  // first trace_export_gates records
};

using RecordSink = std::function<void(const GateRecord&)>;

// Streams a run in chunks: tallies clicks, reads out amplitudes (shortcut or
// full trace path) into the histogram, and hands every record to `sink`.
RunProducts run_pipeline(const RunSpec& spec, double flux, const RecordSink& sink = {});

struct AnalysisProducts {
  FitResult fit;
  PoissonFit poisson;
  std::optional<DiscriminationResult> discrimination;
  std::string discrimination_error;
};

// fit -> Poisson consistency -> thresholds -> errors.
AnalysisProducts analyze_histogram(const AmplitudeHistogram& hist, const AnalysisOptions& opts);

}  // namespace pnd
