#include "ecul/config.hpp"
#include "ecul/synth.hpp"
#include "ecul/trainer.hpp"

#include <doctest.h>

#include <fstream>
#include <map>
#include <set>

using namespace ecul;

namespace {

RunConfig standard()
{
    return load_config(std::filesystem::path(ECUL_CONFIG_DIR) / "standard.cfg");
}

} // namespace

TEST_CASE("batch is a permutation when every cluster is large enough")
{
    std::vector<std::int32_t> labels;
    for (int c = 0; c < 8; ++c)
        for (int k = 0; k < 16; ++k) labels.push_back(c);
    std::mt19937_64 rng(1);
    auto batch = sample_batch(labels, 8, 16, rng);
    std::sort(batch.begin(), batch.end());
    for (std::size_t i = 0; i < batch.size(); ++i) CHECK(batch[i] == static_cast<Index>(i));
}

TEST_CASE("small clusters are sampled with replacement")
{
    std::vector<std::int32_t> labels{0, 0, 0, kNoise, 1, 1, 1, 1, kAbsentLabel};
    std::mt19937_64 rng(2);
    const auto batch = sample_batch(labels, 2, 6, rng);
    CHECK(batch.size() == 12);
    std::map<std::int32_t, int> per;
    for (Index r : batch) {
        REQUIRE(labels[static_cast<std::size_t>(r)] >= 0);
        ++per[labels[static_cast<std::size_t>(r)]];
    }
    CHECK(per[0] == 6);
    CHECK(per[1] == 6);
}

TEST_CASE("batch sampling is seeded and validated")
{
    std::vector<std::int32_t> labels;
    for (int c = 0; c < 10; ++c)
        for (int k = 0; k < 5; ++k) labels.push_back(c);
    std::mt19937_64 a(7), b(7);
    CHECK(sample_batch(labels, 4, 3, a) == sample_batch(labels, 4, 3, b));
    std::mt19937_64 rng(0);
    CHECK_THROWS_AS(sample_batch(labels, 11, 3, rng), std::invalid_argument);
}

TEST_CASE("learning-rate schedule")
{
    TrainConfig c;
    c.lr = 1.0;
    c.lr_step = 10;
    c.lr_decay = 0.5;
    CHECK(c.lr_at(0) == 1.0);
    CHECK(c.lr_at(9) == 1.0);
    CHECK(c.lr_at(10) == 0.5);
    CHECK(c.lr_at(25) == 0.25);
}

TEST_CASE("no clusters means a skipped epoch")
{
    auto cfg = standard();
    cfg.train.epochs = 2;
    cfg.train.memory.tsmem.switch_epoch = 1;
    cfg.train.memory.tsmem.total_epochs = 2;
    cfg.train.schedule.epochs = 2;
    cfg.train.schedule.min_samples = 100000;
    cfg.synth.num_ids = 4;
    Trainer t(cfg.train, generate(cfg.synth).train);
    const auto before = t.encoder().weight;
    const auto& rec = t.train_epoch();
    CHECK(rec.skipped);
    CHECK(t.encoder().weight == before);
    for (const auto& b : t.banks()) CHECK_FALSE(b.has_value());
}

TEST_CASE("frozen identity encoder keeps assignments fixed")
{
    auto cfg = standard();
    cfg.train.epochs = 3;
    cfg.train.memory.tsmem.switch_epoch = 1;
    cfg.train.memory.tsmem.total_epochs = 3;
    cfg.train.schedule.epochs = 3;
    cfg.train.schedule.eps_end = cfg.train.schedule.eps_start;
    cfg.train.lr = 0.0;
    cfg.train.identity_init = true;
    cfg.train.output_dims = cfg.synth.dims;
    cfg.synth.num_ids = 8;
    Trainer t(cfg.train, generate(cfg.synth).train);
    t.train_epoch();
    const auto first = t.assignments();
    for (int e = 1; e < 3; ++e) {
        t.train_epoch();
        for (std::size_t m = 0; m < 3; ++m) CHECK(t.assignments()[m].labels == first[m].labels);
    }
}

TEST_CASE("training is deterministic")
{
    auto cfg = standard();
    cfg.train.epochs = 4;
    cfg.train.memory.tsmem.switch_epoch = 2;
    cfg.train.memory.tsmem.total_epochs = 4;
    cfg.train.schedule.epochs = 4;
    cfg.synth.num_ids = 8;
    cfg.synth.num_test_ids = 4;
    const auto split = generate(cfg.synth);
    Trainer a(cfg.train, split.train, split.query, split.gallery);
    Trainer b(cfg.train, split.train, split.query, split.gallery);
    a.run();
    b.run();
    CHECK(a.encoder().weight == b.encoder().weight);
    REQUIRE(a.log().epochs.size() == 4);
    for (std::size_t e = 0; e < 4; ++e) {
        CHECK(a.log().epochs[e].intra_loss == b.log().epochs[e].intra_loss);
        CHECK(a.log().epochs[e].eval->map == b.log().epochs[e].eval->map);
    }
    CHECK_THROWS_AS(a.train_epoch(), std::logic_error);
}

TEST_CASE("training improves cross-modal rank-1 over the initial encoder")
{
    const auto cfg = standard();
    double before = 0.0;
    double after = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto c = cfg;
        c.synth.seed = seed;
        c.train.seed = seed;
        const auto split = generate(c.synth);
        Trainer t(c.train, split.train, split.query, split.gallery);
        t.run();
        before += t.log().initial->rank1 / 5.0;
        after += t.log().epochs.back().eval->rank1 / 5.0;
        for (const auto& b : t.banks())
            if (b) CHECK_NOTHROW(b->check_invariants());
    }
    MESSAGE("rank-1 initial " << before << " final " << after);
    CHECK(after > before);
}

TEST_CASE("epoch logs")
{
    auto cfg = standard();
    cfg.train.epochs = 2;
    cfg.train.memory.tsmem.switch_epoch = 1;
    cfg.train.memory.tsmem.total_epochs = 2;
    cfg.train.schedule.epochs = 2;
    cfg.synth.num_ids = 6;
    cfg.synth.num_test_ids = 3;
    const auto split = generate(cfg.synth);
    Trainer t(cfg.train, split.train, split.query, split.gallery);
    t.run();
    const auto dir = std::filesystem::temp_directory_path() / "ecul_trainer_logs";
    std::filesystem::create_directories(dir);
    write_epoch_log(t.log(), dir / "log.csv");
    write_loss_log(t.log(), dir / "loss.csv");
    std::ifstream in(dir / "log.csv");
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 3);
    std::filesystem::remove_all(dir);
}
