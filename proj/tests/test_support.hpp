#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

namespace test {

inline std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(QIM_FIXTURE_DIR) / name; }

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("qim_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

/// |observed - expected| within k Poisson standard deviations (variance = expected).
inline bool within_poisson(double observed, double expected, double k = 4.0) {
    return std::abs(observed - expected) <= k * std::sqrt(std::max(expected, 1e-12));
}

} // namespace test
