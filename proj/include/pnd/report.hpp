#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "pnd/analysis.hpp"
#include "pnd/counting.hpp"
#include "pnd/detector.hpp"

namespace pnd {

inline constexpr const char* kToolVersion = "0.1.0";

// First line of every artifact.
std::string artifact_header(const std::string& spec_hash);

// Writes through a temporary file in the same directory, then renames, so a
// reader never sees a partial artifact.
void write_atomically(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body);

void write_records_header(std::ostream& os, const std::string& header);
void write_record(std::ostream& os, const GateRecord& r);

// key = value reports, one item per line.
void write_fit_report(std::ostream& os, const FitResult& fit, const PoissonFit& poisson, const std::string& header);
void write_discrimination_report(std::ostream& os, const DiscriminationResult& d, const std::string& header);
void write_counting_report(std::ostream& os, const CountingSummary& s, const ClickTally& run,
                           const ClickTally& dark_run, const std::string& header);
void write_bias_table(std::ostream& os, const std::vector<BiasPoint>& rows, const std::string& header);

}  // namespace pnd
