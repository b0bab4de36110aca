#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "momentum/methods.hpp"

namespace momentum {

class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct MethodEntry {
    MethodSpec spec;
    std::optional<double> mu;  // constant momentum derived from mu at run time
};

/// One experiment: a problem instance, a list of methods, a step-size policy
/// (multiples of 1/lambda_max by default, absolute override), and monitors.
struct ExperimentConfig {
    enum class ProblemKind { WorstCase, Regression, Identity };
    enum class StartKind { Zeros, Gauss };

    ProblemKind problem = ProblemKind::WorstCase;
    int d = 2;
    double smoothness = 1.0;  // L, worst-case instance scale
    double kappa = 1e6;
    std::uint64_t seed = 0;

    StartKind q0 = StartKind::Zeros;
    std::uint64_t q0_seed = 0;

    std::vector<MethodEntry> methods;

    double h2_fraction = 1.0;  // h^2 = h2_fraction / lambda_max(A)
    std::optional<double> h2_absolute;

    long iterations = 1000;

    bool lyapunov = false;
    std::optional<double> lyapunov_r;  // default: the method's own r (2 otherwise)
    double lyapunov_c = 0.5;
    bool energy = false;
    std::optional<std::pair<long, long>> slope_window;
    bool plot_data = false;

    std::string out_dir = "out";
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline double parse_double(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    double x = 0.0;
    try {
        x = std::stod(value, &pos);
    } catch (const std::exception&) {
        throw config_error("key '" + key + "': cannot parse number from '" + value + "'");
    }
    if (pos != value.size()) {
        throw config_error("key '" + key + "': trailing characters in '" + value + "'");
    }
    return x;
}

inline long parse_long(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    long x = 0;
    try {
        x = std::stol(value, &pos);
    } catch (const std::exception&) {
        throw config_error("key '" + key + "': cannot parse integer from '" + value + "'");
    }
    if (pos != value.size()) {
        throw config_error("key '" + key + "': trailing characters in '" + value + "'");
    }
    return x;
}

inline bool parse_switch(const std::string& key, const std::string& value) {
    if (value == "on" || value == "true" || value == "1") return true;
    if (value == "off" || value == "false" || value == "0") return false;
    throw config_error("key '" + key + "': expected on/off, got '" + value + "'");
}

inline MethodEntry parse_method(const std::string& value) {
    std::istringstream tokens(value);
    std::string kind;
    tokens >> kind;

    MethodEntry entry;
    if (kind == "gd") {
        entry.spec = MethodSpec::gd();
    } else if (kind == "hb") {
        entry.spec = MethodSpec::hb();
    } else if (kind == "hb_const") {
        entry.spec.kind = MethodKind::HB_CONST;
    } else if (kind == "agd") {
        entry.spec = MethodSpec::agd();
    } else if (kind == "hb2") {
        entry.spec = MethodSpec::hb2();
    } else if (kind == "hbr") {
        entry.spec.kind = MethodKind::HBR;
    } else if (kind == "agdr") {
        entry.spec.kind = MethodKind::AGDR;
    } else {
        throw config_error("unknown method '" + kind + "'");
    }

    const bool takes_r = entry.spec.kind == MethodKind::HBR || entry.spec.kind == MethodKind::AGDR;
    const bool takes_beta = entry.spec.kind == MethodKind::HB_CONST;

    std::string opt;
    while (tokens >> opt) {
        const auto eq = opt.find('=');
        if (eq == std::string::npos) {
            throw config_error("method '" + kind + "': expected name=value, got '" + opt + "'");
        }
        const std::string name = opt.substr(0, eq);
        const std::string val = opt.substr(eq + 1);
        if (name == "r" && takes_r) {
            entry.spec.r = parse_double("method r", val);
        } else if (name == "beta" && takes_beta) {
            entry.spec.beta = parse_double("method beta", val);
        } else if (name == "mu" && takes_beta) {
            entry.mu = parse_double("method mu", val);
        } else {
            throw config_error("method '" + kind + "': unknown option '" + name + "'");
        }
    }
    if (!entry.mu) {
        try {
            entry.spec.validate();
        } catch (const std::invalid_argument& e) {
            throw config_error("method '" + kind + "': " + e.what());
        }
    }
    return entry;
}

} // namespace detail

/// Plain key = value text; '#' starts a comment, 'method' may repeat.
inline ExperimentConfig parse_config(std::istream& is) {
    ExperimentConfig cfg;
    cfg.iterations = -1;  // sentinel: required key

    std::string line;
    long line_no = 0;
    bool have_problem = false;
    while (std::getline(is, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;

        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw config_error("line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw config_error("line " + std::to_string(line_no) + ": empty key or value");
        }

        if (key == "problem") {
            if (value == "worst_case") {
                cfg.problem = ExperimentConfig::ProblemKind::WorstCase;
            } else if (value == "regression") {
                cfg.problem = ExperimentConfig::ProblemKind::Regression;
            } else if (value == "identity") {
                cfg.problem = ExperimentConfig::ProblemKind::Identity;
            } else {
                throw config_error("unknown problem '" + value + "'");
            }
            have_problem = true;
        } else if (key == "d") {
            cfg.d = static_cast<int>(detail::parse_long(key, value));
        } else if (key == "L") {
            cfg.smoothness = detail::parse_double(key, value);
        } else if (key == "kappa") {
            cfg.kappa = detail::parse_double(key, value);
        } else if (key == "seed") {
            cfg.seed = static_cast<std::uint64_t>(detail::parse_long(key, value));
        } else if (key == "q0") {
            if (value == "zeros") {
                cfg.q0 = ExperimentConfig::StartKind::Zeros;
            } else if (value == "gauss") {
                cfg.q0 = ExperimentConfig::StartKind::Gauss;
            } else {
                throw config_error("key 'q0': expected zeros or gauss, got '" + value + "'");
            }
        } else if (key == "q0_seed") {
            cfg.q0_seed = static_cast<std::uint64_t>(detail::parse_long(key, value));
        } else if (key == "method") {
            cfg.methods.push_back(detail::parse_method(value));
        } else if (key == "h2") {
            cfg.h2_fraction = detail::parse_double(key, value);
        } else if (key == "h2_abs") {
            cfg.h2_absolute = detail::parse_double(key, value);
        } else if (key == "K") {
            cfg.iterations = detail::parse_long(key, value);
        } else if (key == "lyapunov") {
            cfg.lyapunov = detail::parse_switch(key, value);
        } else if (key == "lyapunov_r") {
            cfg.lyapunov_r = detail::parse_double(key, value);
        } else if (key == "lyapunov_c") {
            cfg.lyapunov_c = detail::parse_double(key, value);
        } else if (key == "energy") {
            cfg.energy = detail::parse_switch(key, value);
        } else if (key == "slope_window") {
            std::istringstream two(value);
            long lo = 0, hi = 0;
            if (!(two >> lo >> hi)) {
                throw config_error("key 'slope_window': expected two integers, got '" + value + "'");
            }
            cfg.slope_window = {lo, hi};
        } else if (key == "plot_data") {
            cfg.plot_data = detail::parse_switch(key, value);
        } else if (key == "out") {
            cfg.out_dir = value;
        } else {
            throw config_error("unknown key '" + key + "'");
        }
    }

    if (!have_problem) throw config_error("missing required key 'problem'");
    if (cfg.iterations < 0) throw config_error("missing required key 'K'");
    if (cfg.iterations < 1) throw config_error("key 'K': must be >= 1");
    if (cfg.h2_fraction <= 0.0 || (cfg.h2_absolute && *cfg.h2_absolute <= 0.0)) {
        throw config_error("step size h^2 must be positive");
    }
    return cfg;
}

inline ExperimentConfig parse_config_string(const std::string& text) {
    std::istringstream is(text);
    return parse_config(is);
}

/// Deterministic echo of the resolved configuration (output metadata).
inline void write_config(std::ostream& os, const ExperimentConfig& cfg) {
    switch (cfg.problem) {
        case ExperimentConfig::ProblemKind::WorstCase: os << "problem = worst_case\n"; break;
        case ExperimentConfig::ProblemKind::Regression: os << "problem = regression\n"; break;
        case ExperimentConfig::ProblemKind::Identity: os << "problem = identity\n"; break;
    }
    os << "d = " << cfg.d << '\n';
    os << "L = " << sci(cfg.smoothness) << '\n';
    os << "kappa = " << sci(cfg.kappa) << '\n';
    os << "seed = " << cfg.seed << '\n';
    os << "q0 = " << (cfg.q0 == ExperimentConfig::StartKind::Gauss ? "gauss" : "zeros") << '\n';
    os << "q0_seed = " << cfg.q0_seed << '\n';
    for (const auto& m : cfg.methods) {
        const char* token = "gd";
        switch (m.spec.kind) {
            case MethodKind::GD: token = "gd"; break;
            case MethodKind::HB_CONST: token = "hb_const"; break;
            case MethodKind::HB_NESTEROV_MOMENTUM: token = "hb"; break;
            case MethodKind::AGD: token = "agd"; break;
            case MethodKind::HB2: token = "hb2"; break;
            case MethodKind::HBR: token = "hbr"; break;
            case MethodKind::AGDR: token = "agdr"; break;
        }
        os << "method = " << token;
        if (m.spec.kind == MethodKind::HBR || m.spec.kind == MethodKind::AGDR) {
            os << " r=" << sci(m.spec.r);
        }
        if (m.spec.kind == MethodKind::HB_CONST) {
            if (m.mu) {
                os << " mu=" << sci(*m.mu);
            } else {
                os << " beta=" << sci(m.spec.beta);
            }
        }
        os << '\n';
    }
    if (cfg.h2_absolute) {
        os << "h2_abs = " << sci(*cfg.h2_absolute) << '\n';
    } else {
        os << "h2 = " << sci(cfg.h2_fraction) << '\n';
    }
    os << "K = " << cfg.iterations << '\n';
    os << "lyapunov = " << (cfg.lyapunov ? "on" : "off") << '\n';
    if (cfg.lyapunov_r) os << "lyapunov_r = " << sci(*cfg.lyapunov_r) << '\n';
    os << "lyapunov_c = " << sci(cfg.lyapunov_c) << '\n';
    os << "energy = " << (cfg.energy ? "on" : "off") << '\n';
    if (cfg.slope_window) {
        os << "slope_window = " << cfg.slope_window->first << ' ' << cfg.slope_window->second
           << '\n';
    }
    os << "plot_data = " << (cfg.plot_data ? "on" : "off") << '\n';
    os << "out = " << cfg.out_dir << '\n';
}

} // namespace momentum
