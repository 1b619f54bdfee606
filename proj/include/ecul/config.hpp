#ifndef ECUL_CONFIG_HPP
#define ECUL_CONFIG_HPP

#include "ecul/synth.hpp"
#include "ecul/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ecul {

/// Everything a config file can set. Files are flat `key = value` lines,
/// `#` starts a comment, and unknown keys are rejected.
struct RunConfig {
    SynthSpec synth;
    TrainConfig train;
    int ablate_seeds = 5;
    std::uint64_t ablate_seed_base = 0;

    void validate() const;
};

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& where, const std::string& what)
        : std::runtime_error(where + ": " + what)
    {
    }
};

/// Applies one assignment; throws ConfigError for unknown keys or bad values.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

RunConfig parse_config(const std::string& text, const std::string& origin = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// Every key with its current value, one per line, in documentation order.
std::string format_config(const RunConfig& cfg);

/// Documented keys, for --help.
const std::vector<std::pair<std::string, std::string>>& config_keys();

} // namespace ecul

#endif // ECUL_CONFIG_HPP
