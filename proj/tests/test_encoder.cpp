#include "ecul/encoder.hpp"
#include "ecul/loss.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <limits>

using namespace ecul;

namespace {

/// Sum over rows of InfoNCE of encode(x_r) against fixed entries.
double total_loss(const ToyEncoder& enc, const Matrix& x, const Matrix& entries, const std::vector<Index>& pos, double tau)
{
    double s = 0.0;
    for (Index r = 0; r < x.rows(); ++r) {
        const std::array<Index, 1> p{pos[static_cast<std::size_t>(r)]};
        s += infonce_kernel(enc.encode(x.row(r).transpose()), entries, p, tau).loss;
    }
    return s;
}

} // namespace

TEST_CASE("encode normalises the projection")
{
    const auto enc = ToyEncoder::identity(4, 2);
    Vector x(4);
    x << 3, 4, 100, 100;
    const Vector y = enc.encode(x);
    CHECK(y[0] == doctest::Approx(0.6));
    CHECK(y[1] == doctest::Approx(0.8));
}

TEST_CASE("random encoder is seeded")
{
    CHECK(ToyEncoder::random(8, 4, 3).weight == ToyEncoder::random(8, 4, 3).weight);
    CHECK(ToyEncoder::random(8, 4, 3).weight != ToyEncoder::random(8, 4, 4).weight);
}

TEST_CASE("weight gradient matches central differences")
{
    std::mt19937_64 rng(17);
    for (int t = 0; t < 20; ++t) {
        const Index din = 3 + static_cast<Index>(rng() % 5);
        const Index dout = 2 + static_cast<Index>(rng() % 3);
        auto enc = ToyEncoder::random(din, dout, rng());
        const Matrix x = oracle::random_matrix(rng, 4, din);
        const Matrix entries = normalized_rows(oracle::random_matrix(rng, 5, dout));
        std::vector<Index> pos;
        std::vector<Vector> grads;
        for (Index r = 0; r < 4; ++r) {
            pos.push_back(static_cast<Index>(rng() % 5));
            const std::array<Index, 1> p{pos.back()};
            grads.push_back(infonce_kernel(enc.encode(x.row(r).transpose()), entries, p, 0.2).grad);
        }
        const Matrix g = encoder_gradient(enc, x, grads);
        Matrix fd(din, dout);
        const double h = 1e-6;
        for (Index i = 0; i < din; ++i) {
            for (Index j = 0; j < dout; ++j) {
                auto a = enc, b = enc;
                a.weight(i, j) += h;
                b.weight(i, j) -= h;
                fd(i, j) = (total_loss(a, x, entries, pos, 0.2) - total_loss(b, x, entries, pos, 0.2)) / (2 * h);
            }
        }
        CHECK(oracle::relative_error(g, fd) < 1e-3);
    }
}

TEST_CASE("gradient step edge cases")
{
    auto enc = ToyEncoder::random(4, 3, 1);
    const Matrix before = enc.weight;
    gradient_step(enc, Matrix::Ones(4, 3), 0.0);
    CHECK(enc.weight == before);
    gradient_step(enc, Matrix::Zero(4, 3), 0.1);
    CHECK(enc.weight == before);
    gradient_step(enc, Matrix::Ones(4, 3), 0.5);
    CHECK(enc.weight == (before.array() - 0.5).matrix());
    Matrix bad = Matrix::Zero(4, 3);
    bad(1, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(gradient_step(enc, bad, 0.1), std::domain_error);
    CHECK_THROWS(gradient_step(enc, Matrix::Zero(3, 3), 0.1));
}

TEST_CASE("encoder snapshot round trip")
{
    testutil::TempDir dir("enc");
    const auto enc = ToyEncoder::identity(5, 3);
    save_encoder(enc, dir / "w.bin");
    CHECK(load_encoder(dir / "w.bin").weight == enc.weight);
}
