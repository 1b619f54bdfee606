#ifndef ECUL_ENCODER_HPP
#define ECUL_ENCODER_HPP

#include "ecul/feature_store.hpp"

#include <cstdint>
#include <filesystem>
#include <span>

namespace ecul {

/// Linear projection followed by L2 normalisation: x -> normalize(W^T x).
struct ToyEncoder {
    Matrix weight; ///< input_dims x output_dims

    Index input_dims() const noexcept { return weight.rows(); }
    Index output_dims() const noexcept { return weight.cols(); }

    Vector encode(const Vector& x) const;
    /// Encodes every row of `inputs`.
    Matrix encode_rows(const Matrix& inputs) const;
    /// Encodes a FeatureSet, keeping its annotations.
    FeatureSet encode(const FeatureSet& fs) const;

    /// Gaussian entries with standard deviation 1/sqrt(input_dims).
    static ToyEncoder random(Index input_dims, Index output_dims, std::uint64_t seed);
    /// Ones on the leading diagonal, zeros elsewhere.
    static ToyEncoder identity(Index input_dims, Index output_dims);
};

/// dL/dW given dL/dy for each encoded row y = normalize(W^T x), chaining through
/// the normalisation Jacobian (I - y y^T) / |W^T x|.
Matrix encoder_gradient(const ToyEncoder& encoder, const Matrix& inputs, std::span<const Vector> output_grads);

/// W <- W - lr * grad. Throws std::domain_error for non-finite gradients.
void gradient_step(ToyEncoder& encoder, const Matrix& grad, double lr);

/// Magic "ECULW\n", u64 input_dims, u64 output_dims, float32 row-major weights.
void save_encoder(const ToyEncoder& encoder, const std::filesystem::path& path);
ToyEncoder load_encoder(const std::filesystem::path& path);

} // namespace ecul

#endif // ECUL_ENCODER_HPP
