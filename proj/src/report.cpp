#include "pnd/report.hpp"

#include <fstream>
#include <ostream>
#include <stdexcept>

#include "pnd/textio.hpp"

namespace pnd {

std::string artifact_header(const std::string& spec_hash) {
  return std::string("pnd ") + kToolVersion + " spec=" + spec_hash;
}

void write_atomically(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    try {
      body(os);
    } catch (...) {
      os.close();
      std::filesystem::remove(tmp);
      throw;
    }
    os.flush();
    if (!os) {
      std::filesystem::remove(tmp);
      throw std::runtime_error("write failed for " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

void write_records_header(std::ostream& os, const std::string& header) {
  os << "# " << header << '\n';
  os << "# gate_index illuminated n_incident n_detected n_dark n_afterpulse amplitude_mv\n";
}

void write_record(std::ostream& os, const GateRecord& r) {
  os << r.gate_index << ' ' << (r.illuminated ? 1 : 0) << ' ' << r.n_incident << ' ' << r.n_detected << ' '
     << r.n_dark << ' ' << r.n_afterpulse << ' ' << format_double(r.amplitude_mv) << '\n';
}

void write_fit_report(std::ostream& os, const FitResult& fit, const PoissonFit& poisson, const std::string& header) {
  os << "# " << header << '\n';
  os << "valid = " << (fit.valid ? "true" : "false") << '\n';
  os << "iterations = " << fit.iterations << '\n';
  os << "residual_norm = " << format_double(fit.residual_norm) << '\n';
  os << "n_max = " << fit.model.n_max() << '\n';
  for (const auto& p : fit.model.peaks) {
    os << "peak." << p.n << ".mean_mv = " << format_double(p.mean_mv) << '\n';
    if (static_cast<std::size_t>(p.n) < fit.mean_stderr.size()) {
      os << "peak." << p.n << ".mean_stderr_mv = " << format_double(fit.mean_stderr[static_cast<std::size_t>(p.n)]) << '\n';
    }
    os << "peak." << p.n << ".sigma_mv = " << format_double(p.sigma_mv) << '\n';
    os << "peak." << p.n << ".weight = " << format_double(p.weight) << '\n';
  }
  if (fit.model.peaks.size() > 1) {
    os << "excess_noise_1 = " << format_double(excess_noise(fit.model.peaks[1])) << '\n';
  }
  os << "mu_det = " << format_double(poisson.mu_det) << '\n';
  os << "poisson_residual = " << format_double(poisson.residual) << '\n';
  for (std::size_t i = 0; i < fit.warnings.size(); ++i) os << "warning." << i << " = " << fit.warnings[i] << '\n';
}

void write_discrimination_report(std::ostream& os, const DiscriminationResult& d, const std::string& header) {
  os << "# " << header << '\n';
  for (std::size_t i = 0; i < d.thresholds_mv.size(); ++i) {
    os << "threshold." << i << '_' << i + 1 << "_mv = " << format_double(d.thresholds_mv[i]) << '\n';
  }
  for (std::size_t n = 0; n < d.errors.size(); ++n) {
    os << "epsilon." << n << " = " << format_double(d.errors[n]) << '\n';
  }
}

void write_counting_report(std::ostream& os, const CountingSummary& s, const ClickTally& run,
                           const ClickTally& dark_run, const std::string& header) {
  os << "# " << header << '\n';
  os << "mu_in = " << format_double(s.mu_in) << '\n';
  os << "eta_est = " << format_double(s.eta_est) << '\n';
  os << "p_click_illuminated = " << format_double(s.p_click_illuminated) << '\n';
  os << "p_click_dark = " << format_double(s.p_click_dark) << '\n';
  os << "p_afterpulse = " << format_double(s.p_afterpulse) << '\n';
  os << "degenerate = " << (s.degenerate ? "true" : "false") << '\n';
  os << "illuminated_gates = " << run.illuminated_gates << '\n';
  os << "illuminated_clicks = " << run.illuminated_clicks << '\n';
  os << "other_gates = " << run.other_gates << '\n';
  os << "other_clicks = " << run.other_clicks << '\n';
  os << "dark_run_gates = " << dark_run.gates() << '\n';
  os << "dark_run_clicks = " << dark_run.clicks() << '\n';
}

void write_bias_table(std::ostream& os, const std::vector<BiasPoint>& rows, const std::string& header) {
  os << "# " << header << '\n';
  os << "# v_dc eta P_D P_A\n";
  for (const auto& r : rows) {
    os << format_double(r.v_dc) << ' ' << format_double(r.eta_est) << ' ' << format_double(r.dark_est) << ' '
       << format_double(r.afterpulse_est) << '\n';
  }
}

}  // namespace pnd
