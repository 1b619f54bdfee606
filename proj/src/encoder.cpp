#include "ecul/encoder.hpp"

#include <bit>
#include <fstream>
#include <random>
#include <stdexcept>

namespace ecul {

namespace {

constexpr char kEncoderMagic[] = "ECULW\n";
constexpr std::size_t kEncoderMagicLen = 6;

} // namespace

Vector ToyEncoder::encode(const Vector& x) const
{
    if (x.size() != input_dims()) {
        throw std::invalid_argument("encoder input dimension mismatch");
    }
    Vector z = weight.transpose() * x;
    const double n = z.norm();
    if (!(n > 0.0)) {
        throw std::domain_error("encoder output collapsed to zero");
    }
    return z / n;
}

Matrix ToyEncoder::encode_rows(const Matrix& inputs) const
{
    if (inputs.cols() != input_dims()) {
        throw std::invalid_argument("encoder input dimension mismatch");
    }
    return normalized_rows(inputs * weight);
}

FeatureSet ToyEncoder::encode(const FeatureSet& fs) const
{
    FeatureSet out = fs;
    out.features = encode_rows(fs.features);
    return out;
}

ToyEncoder ToyEncoder::random(Index input_dims, Index output_dims, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(input_dims)));
    ToyEncoder enc;
    enc.weight.resize(input_dims, output_dims);
    for (Index i = 0; i < input_dims; ++i) {
        for (Index j = 0; j < output_dims; ++j) {
            enc.weight(i, j) = normal(rng);
        }
    }
    return enc;
}

ToyEncoder ToyEncoder::identity(Index input_dims, Index output_dims)
{
    ToyEncoder enc;
    enc.weight = Matrix::Identity(input_dims, output_dims);
    return enc;
}

Matrix encoder_gradient(const ToyEncoder& encoder, const Matrix& inputs, std::span<const Vector> output_grads)
{
    if (static_cast<Index>(output_grads.size()) != inputs.rows()) {
        throw std::invalid_argument("one output gradient per input row is required");
    }
    Matrix grad = Matrix::Zero(encoder.input_dims(), encoder.output_dims());
    for (Index r = 0; r < inputs.rows(); ++r) {
        const Vector& g = output_grads[static_cast<std::size_t>(r)];
        if (g.size() != encoder.output_dims()) {
            throw std::invalid_argument("output gradient dimension mismatch");
        }
        const Vector x = inputs.row(r).transpose();
        const Vector z = encoder.weight.transpose() * x;
        const double n = z.norm();
        const Vector y = z / n;
        const Vector dz = (g - y * y.dot(g)) / n;
        grad.noalias() += x * dz.transpose();
    }
    return grad;
}

void gradient_step(ToyEncoder& encoder, const Matrix& grad, double lr)
{
    if (grad.rows() != encoder.weight.rows() || grad.cols() != encoder.weight.cols()) {
        throw std::invalid_argument("gradient shape does not match the encoder");
    }
    if (!grad.allFinite()) {
        throw std::domain_error("non-finite encoder gradient");
    }
    if (lr == 0.0) {
        return;
    }
    encoder.weight -= lr * grad;
}

void save_encoder(const ToyEncoder& encoder, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out.write(kEncoderMagic, kEncoderMagicLen);
    auto put_u64 = [&](std::uint64_t v) {
        for (int b = 0; b < 8; ++b) {
            out.put(static_cast<char>((v >> (8 * b)) & 0xFF));
        }
    };
    put_u64(static_cast<std::uint64_t>(encoder.input_dims()));
    put_u64(static_cast<std::uint64_t>(encoder.output_dims()));
    for (Index i = 0; i < encoder.input_dims(); ++i) {
        for (Index j = 0; j < encoder.output_dims(); ++j) {
            const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(encoder.weight(i, j)));
            for (int b = 0; b < 4; ++b) {
                out.put(static_cast<char>((bits >> (8 * b)) & 0xFF));
            }
        }
    }
}

ToyEncoder load_encoder(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    char magic[kEncoderMagicLen];
    if (!in.read(magic, kEncoderMagicLen) || std::string(magic, kEncoderMagicLen) != std::string(kEncoderMagic, kEncoderMagicLen)) {
        throw FormatError(FormatError::Kind::bad_header, "bad encoder magic in " + path.string());
    }
    auto get_u64 = [&]() {
        unsigned char buf[8];
        if (!in.read(reinterpret_cast<char*>(buf), 8)) {
            throw FormatError(FormatError::Kind::length_mismatch, "truncated encoder header");
        }
        std::uint64_t v = 0;
        for (int b = 0; b < 8; ++b) {
            v |= static_cast<std::uint64_t>(buf[b]) << (8 * b);
        }
        return v;
    };
    const auto rows = static_cast<Index>(get_u64());
    const auto cols = static_cast<Index>(get_u64());
    ToyEncoder enc;
    enc.weight.resize(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < cols; ++j) {
            unsigned char buf[4];
            if (!in.read(reinterpret_cast<char*>(buf), 4)) {
                throw FormatError(FormatError::Kind::length_mismatch, "truncated encoder weights");
            }
            std::uint32_t bits = 0;
            for (int b = 0; b < 4; ++b) {
                bits |= static_cast<std::uint32_t>(buf[b]) << (8 * b);
            }
            enc.weight(i, j) = std::bit_cast<float>(bits);
        }
    }
    return enc;
}

} // namespace ecul
