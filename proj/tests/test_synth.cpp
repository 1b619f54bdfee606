#include "ecul/clustering.hpp"
#include "ecul/metrics.hpp"
#include "ecul/synth.hpp"

#include <doctest.h>

using namespace ecul;

namespace {

double inter_ari(const SynthSpec& spec)
{
    const auto split = generate(spec);
    ClusterSchedule sched;
    sched.k1 = 8;
    sched.k3 = 16;
    sched.group_aware = false;
    const auto a = cluster_epoch(split.train, sched, 0, ClusterMode::inter);
    return clustering_scores(a.labels, split.train.identity).ari;
}

} // namespace

TEST_CASE("layout and normalisation")
{
    SynthSpec spec;
    spec.num_ids = 5;
    spec.num_test_ids = 3;
    const auto split = generate(spec);
    CHECK(split.train.size() == 5 * 2 * 2 * 4);
    CHECK(split.query.size() == 3 * 2 * 4);
    CHECK(split.gallery.size() == 3 * 2 * 4);
    CHECK_NOTHROW(split.train.validate());
    for (Index r = 0; r < split.train.size(); ++r) CHECK(split.train.features.row(r).norm() == doctest::Approx(1.0));
    for (std::size_t i = 0; i < split.query.modality.size(); ++i) {
        CHECK(split.query.modality[i] == Modality::infrared);
        CHECK(split.query.camera[i] >= 2);
        CHECK(split.query.identity[i] >= 5);
    }
    for (auto m : split.gallery.modality) CHECK(m == Modality::visible);
}

TEST_CASE("fixed seed is deterministic")
{
    SynthSpec spec;
    spec.seed = 42;
    const auto a = generate(spec);
    const auto b = generate(spec);
    CHECK(a.train.features == b.train.features);
    CHECK(a.query.features == b.query.features);
    spec.seed = 43;
    CHECK(generate(spec).train.features != a.train.features);
}

TEST_CASE("clean data clusters perfectly")
{
    SynthSpec spec;
    spec.num_ids = 10;
    spec.noise_sigma = 0.0;
    spec.modality_offset_scale = 0.0;
    spec.camera_offset_scale = 0.0;
    CHECK(inter_ari(spec) == doctest::Approx(1.0));
}

TEST_CASE("a large modality offset splits naive inter-modality clustering")
{
    SynthSpec spec;
    spec.num_ids = 10;
    spec.modality_offset_scale = 3.0;
    CHECK(inter_ari(spec) < 0.9);
}

TEST_CASE("inter-modality ARI falls as the modality offset grows")
{
    double last = 2.0;
    for (double scale : {0.0, 1.0, 3.0}) {
        double mean = 0.0;
        for (std::uint64_t seed = 0; seed < 3; ++seed) {
            SynthSpec spec;
            spec.num_ids = 10;
            spec.modality_offset_scale = scale;
            spec.seed = seed;
            mean += inter_ari(spec) / 3.0;
        }
        CHECK(mean <= last + 1e-9);
        last = mean;
    }
}

TEST_CASE("generator parameters are validated")
{
    SynthSpec spec;
    spec.num_ids = 1;
    CHECK_THROWS(generate(spec));
    spec = {};
    spec.private_dims = 100;
    CHECK_THROWS(generate(spec));
    spec = {};
    spec.noise_sigma = -1;
    CHECK_THROWS(generate(spec));
}
