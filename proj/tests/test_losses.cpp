#include <doctest.h>

#include <cmath>
#include <set>

#include "gridcast/case_io.hpp"
#include "gridcast/cascade.hpp"
#include "gridcast/losses.hpp"
#include "gridcast/train.hpp"
#include "helpers.hpp"

using namespace gridcast;
using namespace testutil;

namespace {

CascadeSample sample_with(std::vector<std::vector<uint8_t>> states,
                          std::vector<std::vector<double>> shed) {
    CascadeSample s;
    s.states = std::move(states);
    s.termination_time = static_cast<int>(s.states.size());
    for (auto& row : shed) {
        std::vector<uint8_t> served(row.size(), 1);
        for (std::size_t i = 0; i < row.size(); ++i)
            if (row[i] > 0) served[i] = 0;
        s.load_served.push_back(std::move(served));
        s.shed_mw.push_back(row);
    }
    s.initial_failures = {0, 1};
    return s;
}

}  // namespace

TEST_CASE("link fail loss") {
    SUBCASE("no failures at all costs nothing") {
        const auto s = sample_with({{1, 1, 1}}, {});
        CHECK(link_fail_loss(s, {1.0, 1.0, 1.0}) == 0.0);
    }
    SUBCASE("single unit-cost failure at t=1") {
        const auto s = sample_with({{0, 1, 1}}, {});
        CHECK(link_fail_loss(s, {1.0, 1.0, 1.0}) == doctest::Approx(std::exp(-0.2)));
    }
    SUBCASE("initial failures can be excluded by flag") {
        const auto s = sample_with({{0, 0, 1}, {0, 0, 0}}, {{0.0}});
        LossOptions opts;
        opts.charge_initial_failures = false;
        // Only the branch failing at t=2 is charged.
        CHECK(link_fail_loss(s, {1.0, 1.0, 1.0}, opts) == doctest::Approx(std::exp(-0.4)));
        CHECK(link_fail_loss(s, {1.0, 1.0, 1.0}) ==
              doctest::Approx(2.0 * std::exp(-0.2) + std::exp(-0.4)));
    }
    SUBCASE("monotone under extra failures") {
        const auto fewer = sample_with({{0, 1, 1}}, {});
        const auto more = sample_with({{0, 1, 1}, {0, 0, 1}}, {{0.0}});
        CHECK(link_fail_loss(more, {1.0, 1.0, 1.0}) >=
              link_fail_loss(fewer, {1.0, 1.0, 1.0}));
    }
}

TEST_CASE("load shed loss") {
    SUBCASE("zero shed is free") {
        const auto s = sample_with({{1, 1}, {1, 1}}, {{0.0, 0.0}});
        CHECK(load_shed_loss(s, {1.0, 1.0}) == 0.0);
    }
    SUBCASE("10 MW at t=2 with unit priority") {
        const auto s =
            sample_with({{1, 1}, {1, 1}, {1, 1}}, {{0.0, 0.0}, {0.0, 10.0}});
        CHECK(load_shed_loss(s, {1.0, 1.0}) == doctest::Approx(10.0 * std::exp(-0.4)));
        CHECK(10.0 * std::exp(-0.4) == doctest::Approx(6.703).epsilon(1e-3));
    }
    SUBCASE("linear in the shed amounts") {
        const auto s1 = sample_with({{1, 1}, {1, 1}}, {{5.0, 0.0}});
        const auto s2 = sample_with({{1, 1}, {1, 1}}, {{10.0, 0.0}});
        CHECK(load_shed_loss(s2, {1.0, 1.0}) ==
              doctest::Approx(2.0 * load_shed_loss(s1, {1.0, 1.0})));
    }
}

TEST_CASE("local influence loss") {
    const int m = 4;
    std::vector<double> k(m * m, 0.0);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) k[a * m + b] = a == b ? 0.0 : 1.0 + std::abs(a - b);

    SUBCASE("diagonal D scores zero") {
        Matrix d(m, m, 0.0);
        for (int i = 0; i < m; ++i) d(i, i) = 1.0;
        CHECK(local_influence_loss(d, k) == 0.0);
    }
    SUBCASE("uniform D averages the distance matrix") {
        Matrix d(m, m, 1.0 / m);
        double mean_row_sum = 0.0;
        for (double v : k) mean_row_sum += v;
        CHECK(local_influence_loss(d, k) == doctest::Approx(mean_row_sum / m));
    }
    SUBCASE("invariant under a simultaneous permutation of rows/columns") {
        Rng rng(21);
        Matrix d(m, m, 0.0);
        for (int i = 0; i < m; ++i) {
            std::vector<double> row(m);
            double sum = 0.0;
            for (auto& v : row) {
                v = rng.unit();
                sum += v;
            }
            for (int j = 0; j < m; ++j) d(i, j) = row[j] / sum;
        }
        const std::vector<int> perm{2, 0, 3, 1};
        Matrix dp(m, m, 0.0);
        std::vector<double> kp(m * m, 0.0);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                dp(perm[i], perm[j]) = d(i, j);
                kp[perm[i] * m + perm[j]] = k[i * m + j];
            }
        CHECK(local_influence_loss(dp, kp) ==
              doctest::Approx(local_influence_loss(d, k)).epsilon(1e-12));
    }
    SUBCASE("dimension mismatch is rejected") {
        Matrix d(3, 3, 1.0 / 3.0);
        CHECK_THROWS_AS(local_influence_loss(d, k), std::invalid_argument);
    }
}

TEST_CASE("criticality") {
    SUBCASE("identical conditional matrices zero out C^D") {
        InfluenceModelD dm;
        dm.a11 = Matrix(3, 3, 0.8);
        dm.a01 = Matrix(3, 3, 0.8);
        dm.d = Matrix(3, 3, 1.0 / 3.0);
        InfluenceModelE em;
        em.b11 = Matrix(3, 2, 0.9);
        em.b01 = Matrix(3, 2, 0.9);
        em.e = Matrix(2, 3, 1.0 / 3.0);
        const auto rep = criticality(dm, em);
        for (double v : rep.cd) CHECK(v == doctest::Approx(0.0));
        for (double v : rep.ce) CHECK(v == doctest::Approx(0.0));
    }
    SUBCASE("hand-evaluated two-link model") {
        InfluenceModelD dm;
        dm.a11 = Matrix(2, 2, 0.0);
        dm.a01 = Matrix(2, 2, 0.0);
        dm.d = Matrix(2, 2, 0.0);
        // Link 0 influences link 1 with weight 0.5 and probability gap 0.6;
        // self influence carries gap 0.5 on link 0 with weight 0.5.
        dm.d(1, 0) = 0.5;
        dm.d(1, 1) = 0.5;
        dm.d(0, 0) = 1.0;
        dm.a11(0, 1) = 0.9;
        dm.a01(0, 1) = 0.3;
        dm.a11(0, 0) = 0.8;
        dm.a01(0, 0) = 0.3;
        dm.a11(1, 1) = 0.7;
        dm.a01(1, 1) = 0.7;
        InfluenceModelE em;
        em.b11 = Matrix(2, 1, 0.5);
        em.b01 = Matrix(2, 1, 0.5);
        em.e = Matrix(1, 2, 0.5);
        const auto rep = criticality(dm, em);
        // C^D(0) = d(0,0)(a11(0,0)-a01(0,0)) + d(1,0)(a11(0,1)-a01(0,1))
        CHECK(rep.cd[0] == doctest::Approx(1.0 * 0.5 + 0.5 * 0.6));
        CHECK(rep.cd[1] == doctest::Approx(0.5 * 0.0));
        CHECK(rep.ranking_cd[0] == 0);
    }
    SUBCASE("top-5 ranking is stable across independent seeds") {
        const Network net = load_case_file(data_file("ieee30.m"));
        PoolConfig cfg;
        cfg.n_samples = 120;
        std::vector<std::set<int>> tops;
        for (uint64_t seed : {101ULL, 202ULL}) {
            const SamplePool pool = generate_pool(net, {1.5}, Policy::none, seed, cfg);
            const InfluenceModel model = train_model(pool);
            const auto rep = criticality(model.link_model, model.shed_model);
            tops.push_back(std::set<int>(rep.ranking_cd.begin(), rep.ranking_cd.begin() + 5));
        }
        int overlap = 0;
        for (int b : tops[0])
            if (tops[1].count(b)) ++overlap;
        CHECK(overlap >= 3);
    }
}

TEST_CASE("accuracy metrics") {
    SUBCASE("identical final states score one") {
        CHECK(link_accuracy({1, 0, 1}, {1, 0, 1}) == 1.0);
    }
    SUBCASE("complementary states score zero") {
        CHECK(link_accuracy({1, 0, 1}, {0, 1, 0}) == 0.0);
    }
    SUBCASE("one mismatched bus out of thirty") {
        std::vector<uint8_t> a(30, 0), b(30, 0);
        b[7] = 1;
        CHECK(shed_accuracy(a, b) == doctest::Approx(29.0 / 30.0));
    }
    SUBCASE("symmetry and bounds") {
        Rng rng(77);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<uint8_t> a(12), b(12);
            for (auto& v : a) v = rng.unit() < 0.5;
            for (auto& v : b) v = rng.unit() < 0.5;
            CHECK(link_accuracy(a, b) == link_accuracy(b, a));
            CHECK(shed_accuracy(a, b) == shed_accuracy(b, a));
            CHECK(link_accuracy(a, b) >= 0.0);
            CHECK(link_accuracy(a, b) <= 1.0);
        }
    }
    SUBCASE("overall vector marks buses that ever shed") {
        const auto s = sample_with({{1, 1}, {1, 1}, {1, 1}},
                                   {{0.0, 4.0}, {0.0, 0.0}});
        const auto overall = overall_shed_vector(s);
        CHECK(overall == std::vector<uint8_t>{0, 1});
    }
}

TEST_CASE("pool losses aggregate to the arithmetic mean") {
    SamplePool pool;
    pool.samples.push_back(sample_with({{0, 1}, {0, 0}}, {{5.0, 0.0}}));
    pool.samples.push_back(sample_with({{1, 1}}, {}));
    pool.samples[0].sample_id = 0;
    pool.samples[1].sample_id = 1;
    const auto rep = pool_losses(pool, {1.0, 2.0}, {1.0, 1.0});
    REQUIRE(rep.link_fail_per_sample.size() == 2);
    CHECK(rep.link_fail_mean ==
          doctest::Approx(0.5 * (rep.link_fail_per_sample[0] + rep.link_fail_per_sample[1])));
    CHECK(rep.load_shed_per_sample[1] == 0.0);
    for (double v : rep.link_fail_per_sample) CHECK(v >= 0.0);
}
