#ifndef ECUL_FEATURE_STORE_HPP
#define ECUL_FEATURE_STORE_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace ecul {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

enum class Modality : std::uint8_t { visible = 0, infrared = 1 };

const char* to_string(Modality m);

// Pseudo-label sentinels, shared with the on-disk encoding.
inline constexpr std::int32_t kNoise = -1;
inline constexpr std::int32_t kAbsentLabel = -2;
inline constexpr std::int32_t kNoIdentity = -1;

/// Raised for malformed feature files. `kind` distinguishes the failure.
class FormatError : public std::runtime_error {
public:
    enum class Kind { io, bad_header, empty, length_mismatch, non_finite };

    FormatError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// Embedding rows plus per-row annotations. Identity is ground truth and only
/// consumed by evaluation code.
struct FeatureSet {
    Matrix features;
    std::vector<Modality> modality;
    std::vector<std::uint16_t> camera;
    std::vector<std::int32_t> identity;
    std::vector<std::int32_t> pseudo_label;

    Index size() const noexcept { return features.rows(); }
    Index dims() const noexcept { return features.cols(); }

    /// Throws std::invalid_argument when array lengths disagree or N < 1, D < 2.
    void validate() const;

    /// Rows whose modality equals `m`, in ascending order.
    std::vector<Index> rows_of(Modality m) const;

    /// Copy of the listed rows, in the given order.
    FeatureSet subset(const std::vector<Index>& rows) const;

    /// Number of distinct non-negative pseudo-labels.
    int num_pseudo_labels() const;
};

/// Held-out query/gallery pair plus the training pool.
struct DatasetSplit {
    FeatureSet train;
    FeatureSet query;
    FeatureSet gallery;
};

/// Builds a FeatureSet with default annotations (visible, camera 0, absent labels).
FeatureSet make_featureset(Matrix features);

/// L2-normalises every row. Throws std::invalid_argument naming the first zero row.
FeatureSet normalize(FeatureSet fs);

/// Row-wise L2 normalisation of any dense expression.
template <typename Derived>
Matrix normalized_rows(const Eigen::MatrixBase<Derived>& m)
{
    Matrix out = m;
    for (Index i = 0; i < out.rows(); ++i) {
        const double n = out.row(i).norm();
        if (!(n > 0.0)) {
            throw std::invalid_argument("zero row " + std::to_string(i) + " cannot be normalised");
        }
        out.row(i) /= n;
    }
    return out;
}

/// Maps arbitrary non-negative labels to 0..C-1 in order of first appearance.
/// Negative values (noise/absent) pass through unchanged.
std::vector<std::int32_t> relabel_contiguous(const std::vector<std::int32_t>& labels);

// Binary feature file ("ECUL1\n", little endian, float32 payload).
void save_featureset(const FeatureSet& fs, const std::filesystem::path& path);
FeatureSet load_featureset(const std::filesystem::path& path);

// The body (everything after the magic) is shared with memory snapshots.
void write_featureset_body(std::ostream& out, const FeatureSet& fs);
FeatureSet read_featureset_body(std::istream& in);

/// Float32 row-major square matrix with a u64 size header.
void save_square_matrix(const Matrix& m, const std::filesystem::path& path);
Matrix load_square_matrix(const std::filesystem::path& path);

} // namespace ecul

#endif // ECUL_FEATURE_STORE_HPP
