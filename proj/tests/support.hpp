#pragma once

// Small fixtures shared by the unit tests.

#include "esgport/esgport.hpp"

#include <filesystem>
#include <string>

namespace esgport::testing {

/// Synthetic dataset with a short history, cheap enough for per-test backtests.
inline SynthData small_dataset(std::size_t assets, std::size_t returns, std::uint64_t seed = 11) {
    SynthSpec spec;
    spec.assets = assets;
    spec.returns = returns;
    spec.seed = seed;
    return generate_synthetic(spec);
}

/// Engine settings for quick runs: short window, few test days, single restart fits.
inline EngineConfig quick_engine(std::size_t window, std::size_t test_days, std::uint64_t seed = 5) {
    EngineConfig cfg;
    cfg.window = window;
    cfg.test_days = test_days;
    cfg.seed = seed;
    cfg.garch.restarts = 1;
    return cfg;
}

/// Fresh scratch directory under the system temp path.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("esgport_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace esgport::testing
