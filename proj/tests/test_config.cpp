#include "momentum/config.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "momentum/experiments.hpp"

using namespace momentum;

namespace {

std::string read_file(const std::filesystem::path& p) {
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::filesystem::path fresh_dir(const std::string& name) {
    const std::filesystem::path dir = std::filesystem::path("cfgtest") / name;
    std::filesystem::remove_all(dir);
    return dir;
}

} // namespace

TEST(Config, ParsesMinimalFileWithDefaults) {
    const auto cfg = parse_config_string(
        "problem = regression\n"
        "d = 10\n"
        "K = 100\n");
    EXPECT_EQ(cfg.problem, ExperimentConfig::ProblemKind::Regression);
    EXPECT_EQ(cfg.d, 10);
    EXPECT_EQ(cfg.iterations, 100);
    EXPECT_DOUBLE_EQ(cfg.h2_fraction, 1.0);
    EXPECT_FALSE(cfg.h2_absolute.has_value());
    EXPECT_FALSE(cfg.lyapunov);
    EXPECT_DOUBLE_EQ(cfg.lyapunov_c, 0.5);
}

TEST(Config, ParsesMethodsAndMonitors) {
    const auto cfg = parse_config_string(
        "problem = worst_case\n"
        "d = 20\n"
        "L = 2.0\n"
        "K = 50\n"
        "method = gd\n"
        "method = hbr r=2.5\n"
        "method = hb_const beta=0.8\n"
        "method = hb_const mu=0.25\n"
        "lyapunov = on\n"
        "lyapunov_c = 0.25\n"
        "slope_window = 20 100\n"
        "# a comment\n"
        "h2 = 3.9\n");
    ASSERT_EQ(cfg.methods.size(), 4u);
    EXPECT_EQ(cfg.methods[0].spec.kind, MethodKind::GD);
    EXPECT_EQ(cfg.methods[1].spec.kind, MethodKind::HBR);
    EXPECT_DOUBLE_EQ(cfg.methods[1].spec.r, 2.5);
    EXPECT_DOUBLE_EQ(cfg.methods[2].spec.beta, 0.8);
    ASSERT_TRUE(cfg.methods[3].mu.has_value());
    EXPECT_DOUBLE_EQ(*cfg.methods[3].mu, 0.25);
    EXPECT_TRUE(cfg.lyapunov);
    EXPECT_DOUBLE_EQ(cfg.lyapunov_c, 0.25);
    ASSERT_TRUE(cfg.slope_window.has_value());
    EXPECT_EQ(cfg.slope_window->first, 20);
    EXPECT_EQ(cfg.slope_window->second, 100);
    EXPECT_DOUBLE_EQ(cfg.h2_fraction, 3.9);
}

TEST(Config, ErrorsNameTheOffendingKey) {
    try {
        parse_config_string("problem = worst_case\nK = 10\nwavelength = 7\n");
        FAIL() << "expected a config error";
    } catch (const config_error& e) {
        EXPECT_NE(std::string(e.what()).find("wavelength"), std::string::npos);
    }
    try {
        parse_config_string("problem = simplex\nK = 10\n");
        FAIL() << "expected a config error";
    } catch (const config_error& e) {
        EXPECT_NE(std::string(e.what()).find("simplex"), std::string::npos);
    }
    try {
        parse_config_string("problem = identity\nK = 10\nmethod = sgd\n");
        FAIL() << "expected a config error";
    } catch (const config_error& e) {
        EXPECT_NE(std::string(e.what()).find("sgd"), std::string::npos);
    }
}

TEST(Config, RejectsMalformedInput) {
    EXPECT_THROW(parse_config_string("problem = identity\n"), config_error);  // no K
    EXPECT_THROW(parse_config_string("K = 10\n"), config_error);              // no problem
    EXPECT_THROW(parse_config_string("problem = identity\nK = 0\n"), config_error);
    EXPECT_THROW(parse_config_string("problem = identity\nK = 10\nh2 = -1\n"), config_error);
    EXPECT_THROW(parse_config_string("problem = identity\nK = 10\nd\n"), config_error);
    EXPECT_THROW(parse_config_string("problem = identity\nK = 10\nslope_window = 5\n"),
                 config_error);
    EXPECT_THROW(parse_config_string("problem = identity\nK = 10\nmethod = hbr r=1.2\n"),
                 config_error);
}

TEST(Config, EffectiveStepSizePolicy) {
    auto cfg = parse_config_string("problem = identity\nd = 3\nK = 10\nh2 = 3.9\n");
    const auto obj = build_objective(cfg);
    EXPECT_DOUBLE_EQ(effective_h2(cfg, obj), 3.9);  // lambda_max = 1
    cfg.h2_absolute = 0.125;
    EXPECT_DOUBLE_EQ(effective_h2(cfg, obj), 0.125);
}

TEST(Config, ResolvesConstantMomentumFromMu) {
    const auto cfg = parse_config_string(
        "problem = identity\nd = 2\nK = 10\nmethod = hb_const mu=0.25\n");
    const auto obj = build_objective(cfg);
    const MethodSpec spec = resolve_method(cfg.methods[0], obj);
    EXPECT_NEAR(spec.beta, 1.0 / 9.0, 1e-15);
}

TEST(Config, EchoRoundTripsThroughTheParser) {
    const auto cfg = preset("fig3");
    std::ostringstream first;
    write_config(first, cfg);
    const auto back = parse_config_string(first.str());
    std::ostringstream second;
    write_config(second, back);
    EXPECT_EQ(first.str(), second.str());
}

TEST(Presets, AllFigurePresetsExist) {
    for (const std::string name : {"fig1", "fig2", "fig3", "fig4", "fig5"}) {
        EXPECT_NO_THROW(preset(name));
    }
    EXPECT_THROW(preset("fig6"), config_error);
}

TEST(Runner, RunOutputsAreByteIdenticalAcrossInvocations) {
    auto cfg = parse_config_string(
        "problem = regression\n"
        "d = 8\n"
        "kappa = 100\n"
        "seed = 3\n"
        "K = 60\n"
        "method = gd\n"
        "method = hbr r=3\n"
        "lyapunov = on\n");
    std::ostringstream sink;

    cfg.out_dir = fresh_dir("det_a").string();
    ASSERT_EQ(cmd_run(cfg, sink), 0);
    cfg.out_dir = fresh_dir("det_b").string();
    ASSERT_EQ(cmd_run(cfg, sink), 0);

    for (const char* name :
         {"gd_trajectory.csv", "hbr_r3_trajectory.csv", "hbr_r3_lyapunov.csv", "summary.txt"}) {
        const auto a = read_file(std::filesystem::path("cfgtest/det_a") / name);
        const auto b = read_file(std::filesystem::path("cfgtest/det_b") / name);
        ASSERT_FALSE(a.empty());
        EXPECT_EQ(a, b) << name;
    }
    // config_used.txt echoes everything but the output directory identically.
}

TEST(Runner, EnergyCommandHandCase) {
    auto cfg = parse_config_string(
        "problem = identity\n"
        "d = 1\n"
        "K = 12\n"
        "h2_abs = 1.0\n");
    cfg.out_dir = fresh_dir("energy").string();
    std::ostringstream sink;
    ASSERT_EQ(cmd_energy(cfg, sink), 0);
    const std::string summary = read_file(std::filesystem::path(cfg.out_dir) / "summary.txt");
    // Total energy alternates between 1 and 2; the modified energy is flat.
    EXPECT_NE(summary.find("oscillation amplitude 1.0000000000000000e+00"), std::string::npos);
    EXPECT_NE(summary.find("modified-energy max drift 0.0000000000000000e+00"),
              std::string::npos);
}

TEST(Runner, CertifyPassesOnAFriction3Run) {
    auto cfg = parse_config_string(
        "problem = regression\n"
        "d = 8\n"
        "kappa = 100\n"
        "seed = 5\n"
        "K = 500\n"
        "h2 = 2.0\n"
        "method = hbr r=3\n");
    cfg.out_dir = fresh_dir("certify_ok").string();
    std::ostringstream sink;
    EXPECT_EQ(cmd_certify(cfg, sink), 0);
    const std::string report =
        read_file(std::filesystem::path(cfg.out_dir) / "certificate.txt");
    EXPECT_NE(report.find("overall: PASS"), std::string::npos);
}

TEST(Runner, CertifyUsesConservationModeAtFriction2) {
    auto cfg = parse_config_string(
        "problem = regression\n"
        "d = 6\n"
        "kappa = 50\n"
        "seed = 6\n"
        "K = 500\n"
        "h2 = 1.0\n"
        "method = hbr r=2\n");
    cfg.out_dir = fresh_dir("certify_r2").string();
    std::ostringstream sink;
    EXPECT_EQ(cmd_certify(cfg, sink), 0);
    const std::string report =
        read_file(std::filesystem::path(cfg.out_dir) / "certificate.txt");
    EXPECT_NE(report.find("conservation"), std::string::npos);
}

TEST(Runner, CertifyRefusesOversizedStepsWithExitOne) {
    auto cfg = parse_config_string(
        "problem = regression\n"
        "d = 6\n"
        "kappa = 50\n"
        "seed = 6\n"
        "K = 100\n"
        "h2 = 4.5\n"
        "method = hbr r=3\n");
    cfg.out_dir = fresh_dir("certify_refusal").string();
    std::ostringstream sink;
    EXPECT_EQ(cmd_certify(cfg, sink), kExitError);
    const std::string report =
        read_file(std::filesystem::path(cfg.out_dir) / "certificate.txt");
    EXPECT_NE(report.find("refused"), std::string::npos);
}

TEST(Runner, CertifyRejectsNonHeavyBallMethods) {
    auto cfg = parse_config_string(
        "problem = identity\nd = 2\nK = 10\nmethod = agd\n");
    cfg.out_dir = fresh_dir("certify_bad").string();
    std::ostringstream sink;
    EXPECT_THROW(cmd_certify(cfg, sink), config_error);
}
