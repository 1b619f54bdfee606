#ifndef ECUL_TESTS_UTIL_HPP
#define ECUL_TESTS_UTIL_HPP

#include "ecul/feature_store.hpp"

#include <filesystem>
#include <random>
#include <string>

namespace testutil {

/// Fresh scratch directory under the system temp dir, removed on destruction.
struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag)
    {
        std::random_device rd;
        path = std::filesystem::temp_directory_path() / ("ecul_" + tag + "_" + std::to_string(rd()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::filesystem::path operator/(const std::string& name) const { return path / name; }
};

/// Random unit rows with cycling modality/camera annotations.
inline ecul::FeatureSet random_set(std::mt19937_64& rng, ecul::Index n, ecul::Index d, int cameras_per_modality = 2)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    ecul::Matrix x(n, d);
    for (ecul::Index i = 0; i < n; ++i)
        for (ecul::Index j = 0; j < d; ++j) x(i, j) = normal(rng);
    auto fs = ecul::normalize(ecul::make_featureset(x));
    std::uniform_int_distribution<int> coin(0, 1);
    std::uniform_int_distribution<int> cam(0, cameras_per_modality - 1);
    for (std::size_t i = 0; i < fs.modality.size(); ++i) {
        const int m = coin(rng);
        fs.modality[i] = static_cast<ecul::Modality>(m);
        fs.camera[i] = static_cast<std::uint16_t>(m * cameras_per_modality + cam(rng));
    }
    return fs;
}

} // namespace testutil

#endif
