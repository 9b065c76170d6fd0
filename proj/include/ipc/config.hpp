#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "ipc/mc_harness.hpp"

namespace ipc {

/// Raised for malformed or inconsistent configuration; the CLI maps it to
/// exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    ExperimentPlan plan;
    std::filesystem::path out_dir = "ipc-out";
    double p_value = 1e-4;
    double a_tol = default_zero_a_tol;
    double slope_tol = default_zero_slope_tol;
    bool plot_script = true;

    void validate() const;
};

/// Parses INI text. Sections: [task], [reservoir], [experiment], [fit],
/// [output]. Keys not listed in the schema are rejected. Missing keys keep
/// their defaults.
RunConfig parse_config(std::istream& is);
RunConfig load_config(const std::filesystem::path& path);

/// Writes every key, so parse(serialize(c)) reproduces c.
std::string serialize_config(const RunConfig& config);

std::vector<std::string> preset_names();

/// Desk-scale parameter sets for the built-in experiments. `full_scale`
/// switches to the full sizes (100 nodes, 1000 trials, T = 1000..10000, and
/// 10^5 trials for the simple model).
RunConfig preset(const std::string& name, bool full_scale = false);

std::vector<std::uint64_t> parse_length_list(const std::string& text);

} // namespace ipc
