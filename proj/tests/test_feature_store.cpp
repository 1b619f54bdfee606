#include "ecul/feature_store.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <fstream>
#include <limits>

using namespace ecul;

namespace {

FeatureSet sample()
{
    Matrix x(3, 2);
    x << 0.5, -1.25, 3.0, 0.125, -2.0, 8.0;
    auto fs = make_featureset(x);
    fs.modality = {Modality::visible, Modality::infrared, Modality::infrared};
    fs.camera = {0, 2, 3};
    fs.identity = {7, kNoIdentity, 9};
    fs.pseudo_label = {0, kNoise, kAbsentLabel};
    return fs;
}

FormatError::Kind load_error(const std::filesystem::path& p)
{
    try {
        load_featureset(p);
    } catch (const FormatError& e) {
        return e.kind();
    }
    FAIL("load succeeded");
    return FormatError::Kind::io;
}

} // namespace

TEST_CASE("feature file round trip is exact for float32-representable data")
{
    testutil::TempDir dir("fs");
    const auto fs = sample();
    save_featureset(fs, dir / "a.bin");
    const auto back = load_featureset(dir / "a.bin");
    CHECK(back.features == fs.features);
    CHECK(back.modality == fs.modality);
    CHECK(back.camera == fs.camera);
    CHECK(back.identity == fs.identity);
    CHECK(back.pseudo_label == fs.pseudo_label);
}

TEST_CASE("feature file header and length errors")
{
    testutil::TempDir dir("fserr");
    save_featureset(sample(), dir / "a.bin");
    const auto full = std::filesystem::file_size(dir / "a.bin");

    std::filesystem::copy_file(dir / "a.bin", dir / "trunc.bin");
    std::filesystem::resize_file(dir / "trunc.bin", full - 3);
    CHECK(load_error(dir / "trunc.bin") == FormatError::Kind::length_mismatch);

    std::filesystem::copy_file(dir / "a.bin", dir / "long.bin");
    std::ofstream(dir / "long.bin", std::ios::app | std::ios::binary) << 'x';
    CHECK(load_error(dir / "long.bin") == FormatError::Kind::length_mismatch);

    std::ofstream(dir / "magic.bin", std::ios::binary) << "NOPE1\n";
    CHECK(load_error(dir / "magic.bin") == FormatError::Kind::bad_header);

    std::ofstream(dir / "zero.bin", std::ios::binary).close();
    CHECK(load_error(dir / "zero.bin") == FormatError::Kind::bad_header);

    {
        std::ofstream out(dir / "empty.bin", std::ios::binary);
        out << "ECUL1\n";
        const std::uint64_t header[2] = {0, 4};
        out.write(reinterpret_cast<const char*>(header), sizeof header);
    }
    CHECK(load_error(dir / "empty.bin") == FormatError::Kind::empty);

    CHECK(load_error(dir / "missing.bin") == FormatError::Kind::io);
}

TEST_CASE("non-finite features are rejected on load")
{
    testutil::TempDir dir("nan");
    auto fs = sample();
    fs.features(1, 1) = std::numeric_limits<double>::quiet_NaN();
    save_featureset(fs, dir / "nan.bin");
    CHECK(load_error(dir / "nan.bin") == FormatError::Kind::non_finite);
}

TEST_CASE("normalize yields unit rows and names zero rows")
{
    auto fs = normalize(sample());
    for (Index i = 0; i < fs.size(); ++i) CHECK(fs.features.row(i).norm() == doctest::Approx(1.0).epsilon(1e-15));
    auto bad = sample();
    bad.features.row(1).setZero();
    CHECK_THROWS_WITH_AS(normalize(bad), doctest::Contains("zero row 1"), std::invalid_argument);
}

TEST_CASE("validate catches inconsistent annotations")
{
    auto fs = sample();
    fs.camera.pop_back();
    CHECK_THROWS_AS(fs.validate(), std::invalid_argument);
}

TEST_CASE("relabel_contiguous keeps first-appearance order and negatives")
{
    CHECK(relabel_contiguous({5, 5, -1, 2, 9, 2, -2}) == std::vector<std::int32_t>{0, 0, -1, 1, 2, 1, -2});
}

TEST_CASE("subset and rows_of")
{
    const auto fs = sample();
    CHECK(fs.rows_of(Modality::infrared) == std::vector<Index>{1, 2});
    const auto sub = fs.subset({2, 0});
    CHECK(sub.identity == std::vector<std::int32_t>{9, 7});
    CHECK(sub.features.row(0) == fs.features.row(2));
}

TEST_CASE("square matrix dump round trip")
{
    testutil::TempDir dir("sq");
    Matrix m(2, 2);
    m << 0.0, 0.25, 0.25, 0.0;
    save_square_matrix(m, dir / "m.bin");
    CHECK(load_square_matrix(dir / "m.bin") == m);
}
