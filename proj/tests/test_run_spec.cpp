#include <gtest/gtest.h>

#include "pnd/run_spec.hpp"

namespace pnd {
namespace {

int error_line(std::string_view text) {
  try {
    parse_run_spec(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

TEST(RunSpec, MinimalSpec) {
  const RunSpec s = parse_run_spec("[run]\nseed = 5\n");
  EXPECT_EQ(s.seed, 5u);
  EXPECT_EQ(s.n_gates, 1);
  EXPECT_EQ(s.detector, DetectorConfig{});
}

TEST(RunSpec, SeedIsMandatory) {
  EXPECT_THROW(parse_run_spec("[run]\nn_gates = 10\n"), ConfigError);
}

TEST(RunSpec, ErrorsCarryLineNumbers) {
  EXPECT_EQ(error_line("[run]\nseed = 1\nbogus = 3\n"), 3);
  EXPECT_EQ(error_line("[run]\nseed = 1\n[nowhere]\n"), 3);
  EXPECT_EQ(error_line("; c\n[run]\nseed = 1\nn_gates = ten\n"), 4);
  EXPECT_EQ(error_line("[run]\nseed = 1\nseed = 2\n"), 3);
  EXPECT_EQ(error_line("[run]\nseed = 1\n[detector]\nqe 0.5\n"), 4);
  EXPECT_EQ(error_line("[run]\nseed = 1\noutputs = histogram, plot\n"), 3);
  EXPECT_EQ(error_line("seed = 1\n"), 1);
}

TEST(RunSpec, InvalidValuesNameTheField) {
  try {
    parse_run_spec("[run]\nseed = 1\n[detector]\nqe = 1.5\n");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("qe"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_run_spec("[run]\nseed = 1\nn_gates = 0\n"), ConfigError);
}

TEST(RunSpec, ScientificGateCounts) {
  EXPECT_EQ(parse_run_spec("[run]\nseed = 1\nn_gates = 6.4e7\n").n_gates, 64000000);
  EXPECT_THROW(parse_run_spec("[run]\nseed = 1\nn_gates = 6.45e0\n"), ConfigError);
}

TEST(RunSpec, PresetsRoundTrip) {
  ASSERT_EQ(builtin_presets().size(), 6u);
  for (const auto& p : builtin_presets()) {
    const RunSpec s = parse_run_spec(p.text);
    const std::string canonical = format_run_spec(s);
    const RunSpec back = parse_run_spec(canonical);
    EXPECT_EQ(back, s) << p.name;
    EXPECT_EQ(format_run_spec(back), canonical) << p.name;
    EXPECT_EQ(spec_hash(back), spec_hash(s)) << p.name;
  }
}

TEST(RunSpec, HashTracksContent) {
  RunSpec a = parse_run_spec(preset_text("fig5"));
  RunSpec b = a;
  EXPECT_EQ(spec_hash(a), spec_hash(b));
  b.seed += 1;
  EXPECT_NE(spec_hash(a), spec_hash(b));
  EXPECT_EQ(spec_hash(a).size(), 16u);
}

TEST(RunSpec, UnknownPreset) {
  EXPECT_THROW(preset_text("fig9"), ConfigError);
}

TEST(RunSpec, PresetContents) {
  const RunSpec fig3 = parse_run_spec(preset_text("fig3"));
  EXPECT_EQ(fig3.flux, 0.033);
  EXPECT_EQ(fig3.detector.illumination_divisor, 64);
  EXPECT_EQ(fig3.n_gates, 64000000);
  EXPECT_EQ(fig3.sweep.mode, SweepMode::kBias);

  const RunSpec fig5 = parse_run_spec(preset_text("fig5"));
  EXPECT_NEAR(fig5.flux * fig5.detector.qe * fig5.detector.p_eta, 0.92, 1e-12);
  EXPECT_TRUE(fig5.wants(Output::kDiscrimination));

  const RunSpec fig4a = parse_run_spec(preset_text("fig4a"));
  EXPECT_NEAR(fig4a.flux * fig4a.detector.efficiency().eta(), 3.7, 1e-12);
  EXPECT_EQ(fig4a.sweep.flux, (std::vector<double>{0.21, 1.82, 4.00}));
}

}  // namespace
}  // namespace pnd
