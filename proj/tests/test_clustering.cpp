#include "ecul/clustering.hpp"
#include "ecul/metrics.hpp"
#include "ecul/synth.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <doctest.h>

using namespace ecul;

namespace {

Matrix random_distance(std::mt19937_64& rng, Index n)
{
    // distances between random 2-d points, scaled to roughly [0, 1]
    const Matrix x = oracle::random_matrix(rng, n, 2) * 0.3;
    Matrix d(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) d(i, j) = std::sqrt(oracle::sq_dist(x, i, j));
    return d;
}

Matrix two_blobs()
{
    Matrix d = Matrix::Constant(10, 10, 0.95);
    for (Index i = 0; i < 10; ++i)
        for (Index j = 0; j < 10; ++j)
            if (i / 5 == j / 5) d(i, j) = i == j ? 0.0 : 0.05;
    return d;
}

} // namespace

TEST_CASE("zero distances give one cluster")
{
    const auto a = dbscan(Matrix::Zero(6, 6), 0.1, 6);
    CHECK(a.num_clusters == 1);
    CHECK(a.members[0].size() == 6);
}

TEST_CASE("unit distances give all noise")
{
    Matrix d = Matrix::Ones(5, 5);
    d.diagonal().setZero();
    const auto a = dbscan(d, 0.5, 2);
    CHECK(a.num_clusters == 0);
    for (auto l : a.labels) CHECK(l == kNoise);
    CHECK(a.noise_fraction() == 1.0);
}

TEST_CASE("two planted blobs")
{
    const auto a = dbscan(two_blobs(), 0.3, 3);
    CHECK(a.num_clusters == 2);
    CHECK(oracle::same_partition(a.labels, {0, 0, 0, 0, 0, 1, 1, 1, 1, 1}));
    CHECK(oracle::same_partition(a.labels, oracle::dbscan(two_blobs(), 0.3, 3)));
    std::vector<std::int32_t> truth{0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
    CHECK(clustering_scores(a.labels, truth).ari == doctest::Approx(1.0));
}

TEST_CASE("dbscan input validation")
{
    Matrix d = two_blobs();
    d(0, 1) += 1e-6;
    CHECK_THROWS_AS(dbscan(d, 0.3, 3), std::invalid_argument);
    d = two_blobs();
    d(0, 1) = d(1, 0) = -0.1;
    CHECK_THROWS_AS(dbscan(d, 0.3, 3), std::invalid_argument);
}

TEST_CASE("border point joins the first cluster created")
{
    // cores {0, 1, 5, 6} and {3, 4, 7, 8}; point 2 touches 1 and 3 only
    Matrix d = Matrix::Constant(9, 9, 0.9);
    d.diagonal().setZero();
    for (auto group : {std::array<Index, 4>{0, 1, 5, 6}, std::array<Index, 4>{3, 4, 7, 8}})
        for (Index i : group)
            for (Index j : group)
                if (i != j) d(i, j) = 0.1;
    d(1, 2) = d(2, 1) = 0.2;
    d(2, 3) = d(3, 2) = 0.2;
    const auto a = dbscan(d, 0.25, 4);
    CHECK(a.num_clusters == 2);
    CHECK(a.labels[2] == a.labels[0]);
    CHECK(a.labels[3] != a.labels[0]);
    CHECK(a.labels[3] != kNoise);
    CHECK(oracle::same_partition(a.labels, oracle::dbscan(d, 0.25, 4)));
}

TEST_CASE("dbscan matches the density-connectivity oracle on random matrices")
{
    std::mt19937_64 rng(77);
    for (int t = 0; t < 60; ++t) {
        const Index n = 2 + static_cast<Index>(rng() % 30);
        const Matrix d = random_distance(rng, n);
        const double eps = 0.05 + 0.3 * static_cast<double>(rng() % 100) / 100.0;
        const int ms = 1 + static_cast<int>(rng() % 5);
        CHECK(oracle::same_partition(dbscan(d, eps, ms).labels, oracle::dbscan(d, eps, ms)));
    }
}

TEST_CASE("dbscan is permutation invariant")
{
    std::mt19937_64 rng(78);
    for (int t = 0; t < 20; ++t) {
        const Index n = 25;
        const Matrix d = random_distance(rng, n);
        std::vector<Index> perm(static_cast<std::size_t>(n));
        std::iota(perm.begin(), perm.end(), Index{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        Matrix pd(n, n);
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < n; ++j) pd(i, j) = d(perm[i], perm[j]);
        const auto a = dbscan(d, 0.2, 3);
        const auto b = dbscan(pd, 0.2, 3);
        // co-membership of core points is order independent; border ties may move
        std::vector<std::int32_t> back(static_cast<std::size_t>(n));
        for (Index i = 0; i < n; ++i) back[perm[i]] = b.labels[i];
        for (Index i = 0; i < n; ++i) {
            int cnt = 0;
            for (Index j = 0; j < n; ++j) cnt += d(i, j) <= 0.2;
            if (cnt < 3) continue;
            for (Index j = 0; j < n; ++j) {
                int cj = 0;
                for (Index k = 0; k < n; ++k) cj += d(j, k) <= 0.2;
                if (cj >= 3) CHECK((a.labels[i] == a.labels[j]) == (back[i] == back[j]));
            }
        }
    }
}

TEST_CASE("cluster sizes reach min_samples on separated blobs")
{
    SynthSpec spec;
    spec.num_ids = 6;
    spec.num_test_ids = 0;
    spec.noise_sigma = 0.03;
    spec.seed = 2;
    const auto data = generate(spec);
    ClusterSchedule s;
    s.k1 = 6;
    s.k3 = 8;
    const auto a = cluster_epoch(data.train, s, 0, ClusterMode::intra_visible);
    for (const auto& m : a.members) CHECK(static_cast<int>(m.size()) >= s.min_samples);
}

TEST_CASE("from_labels relabels contiguously")
{
    const auto a = ClusterAssignment::from_labels({3, 7, 3, kNoise, 7, kAbsentLabel});
    CHECK(a.labels == std::vector<std::int32_t>{0, 1, 0, kNoise, 1, kAbsentLabel});
    CHECK(a.num_clusters == 2);
    CHECK(a.noise_fraction() == doctest::Approx(0.2));
    auto fs = make_featureset(Matrix::Identity(6, 6));
    fs = assign_pseudo_labels(fs, a);
    CHECK(fs.pseudo_label == a.labels);
}

TEST_CASE("all-noise assignment has no trainable rows")
{
    const auto a = ClusterAssignment::from_labels({kNoise, kNoise});
    CHECK(a.num_clusters == 0);
    CHECK(a.members.empty());
}

TEST_CASE("schedule interpolates eps and validates the epoch")
{
    ClusterSchedule s;
    CHECK(s.eps_at(0) == doctest::Approx(0.6));
    CHECK(s.eps_at(50) == doctest::Approx(0.55));
    CHECK(s.eps_at(100) == doctest::Approx(0.5));
    CHECK_THROWS_AS(s.eps_at(101), std::out_of_range);
    CHECK(s.params_at(0, ClusterMode::inter).mode == ExtensionMode::inter_modality);
    CHECK(s.params_at(0, ClusterMode::inter).k2 == 3);
    CHECK(s.params_at(0, ClusterMode::intra_visible).mode == ExtensionMode::intra_modality);
    s.group_aware = false;
    CHECK(s.params_at(0, ClusterMode::intra_visible).mode == ExtensionMode::ungrouped);
}

TEST_CASE("empty modality subset is an error")
{
    auto fs = make_featureset(Matrix::Identity(4, 4));
    CHECK_THROWS_WITH(cluster_epoch(fs, ClusterSchedule{}, 0, ClusterMode::intra_infrared),
                      doctest::Contains("empty modality subset"));
}

TEST_CASE("one identity per modality: intra one cluster each, inter one spanning cluster")
{
    SynthSpec spec;
    spec.num_ids = 2;
    spec.num_test_ids = 0;
    spec.noise_sigma = 0.01;
    spec.camera_offset_scale = 0.05;
    spec.modality_offset_scale = 0.2;
    spec.seed = 1;
    auto data = generate(spec);
    const auto rows = [&] {
        std::vector<Index> r;
        for (Index i = 0; i < data.train.size(); ++i)
            if (data.train.identity[static_cast<std::size_t>(i)] == 0) r.push_back(i);
        return r;
    }();
    const auto one = data.train.subset(rows);
    ClusterSchedule s;
    s.k1 = 4;
    s.k3 = 16; // the window spans both modalities of the identity
    s.min_samples = 3;
    CHECK(cluster_epoch(one, s, 0, ClusterMode::intra_visible).num_clusters == 1);
    CHECK(cluster_epoch(one, s, 0, ClusterMode::intra_infrared).num_clusters == 1);
    const auto inter = cluster_epoch(one, s, 0, ClusterMode::inter);
    CHECK(inter.num_clusters == 1);
    CHECK(inter.noise_fraction() == 0.0);
}

TEST_CASE("inter clustering recovers identities when the modality gap is small")
{
    SynthSpec spec;
    spec.num_ids = 6;
    spec.num_test_ids = 0;
    spec.noise_sigma = 0.02;
    spec.modality_offset_scale = 0.1;
    spec.camera_offset_scale = 0.05;
    spec.seed = 9;
    const auto data = generate(spec);
    ClusterSchedule s;
    s.k1 = 10;
    s.k3 = 16;
    const auto a = cluster_epoch(data.train, s, 0, ClusterMode::inter);
    CHECK(a.num_clusters == 6);
    CHECK(clustering_scores(a.labels, data.train.identity).ari == doctest::Approx(1.0));
}

TEST_CASE("intra mode marks the other modality absent and dumps its Jaccard matrix")
{
    std::mt19937_64 rng(1);
    const auto fs = testutil::random_set(rng, 30, 4);
    Matrix j;
    ClusterSchedule s;
    s.k1 = 5;
    const auto a = cluster_epoch(fs, s, 0, ClusterMode::intra_visible, &j);
    const auto vis = fs.rows_of(Modality::visible);
    CHECK(j.rows() == static_cast<Index>(vis.size()));
    for (std::size_t i = 0; i < fs.modality.size(); ++i) {
        if (fs.modality[i] == Modality::infrared) CHECK(a.labels[i] == kAbsentLabel);
        else CHECK(a.labels[i] >= kNoise);
    }
}
