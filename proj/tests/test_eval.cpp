#include <doctest.h>

#include <cmath>

#include "aar/eval.hpp"
#include "aar/rng.hpp"
#include "aar/synth.hpp"

using namespace aar;

namespace {

ScoreBatch labeled(std::vector<double> s, std::vector<int> y) {
    ScoreBatch b;
    b.scores = std::move(s);
    b.labels = std::move(y);
    return b;
}

// O(n^2) pairwise comparison oracle.
double auroc_pairwise(const ScoreBatch& b) {
    const auto& y = *b.labels;
    double num = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < b.scores.size(); ++i) {
        if (y[i] != 1) continue;
        for (std::size_t j = 0; j < b.scores.size(); ++j) {
            if (y[j] != 0) continue;
            ++pairs;
            if (b.scores[i] > b.scores[j])
                num += 1.0;
            else if (b.scores[i] == b.scores[j])
                num += 0.5;
        }
    }
    return num / static_cast<double>(pairs);
}

ExperimentConfig blob_config() {
    ExperimentConfig cfg;
    cfg.dataset = "blob";
    cfg.model = ModelKind::Autoencoder;
    cfg.hidden_dims = {4, 2};
    cfg.batch_size = 32;
    cfg.method = EvalMethod::Mse;
    cfg.gamma0 = 0.0;
    cfg.seeds = {1, 2};
    cfg.epochs = 40;
    cfg.learning_rate = 1e-2; // smoke-test scale
    return cfg;
}

} // namespace

TEST_SUITE("eval") {

TEST_CASE("auroc on perfect, inverted and tied rankings") {
    CHECK(auroc(labeled({0.1, 0.2, 0.9}, {0, 0, 1})) == doctest::Approx(1.0));
    CHECK(auroc(labeled({0.9, 0.2, 0.1}, {0, 0, 1})) == doctest::Approx(0.0));
    CHECK(auroc(labeled({0.5, 0.5}, {0, 1})) == doctest::Approx(0.5));
    CHECK_THROWS_AS(auroc(labeled({1, 2}, {0, 0})), InvalidInput);
    ScoreBatch unlabeled;
    unlabeled.scores = {1, 2};
    CHECK_THROWS_AS(auroc(unlabeled), InvalidInput);
}

TEST_CASE("auroc equals the pairwise oracle on random batches") {
    Rng rng(1);
    for (int rep = 0; rep < 50; ++rep) {
        std::size_t n = 10 + rng.integer(120);
        ScoreBatch b;
        std::vector<int> y;
        bool has0 = false, has1 = false;
        for (std::size_t i = 0; i < n; ++i) {
            // Quantized scores force plenty of ties.
            b.scores.push_back(std::floor(rng.uniform() * 8.0) / 8.0);
            int label = rng.uniform() < 0.3 ? 1 : 0;
            y.push_back(label);
            (label ? has1 : has0) = true;
        }
        if (!has0 || !has1) continue;
        b.labels = y;
        CHECK(auroc(b) == doctest::Approx(auroc_pairwise(b)).epsilon(1e-12));
    }
}

TEST_CASE("auroc is invariant under strictly increasing transforms") {
    Rng rng(2);
    ScoreBatch b;
    std::vector<int> y;
    for (int i = 0; i < 200; ++i) {
        b.scores.push_back(rng.uniform() * 4.0);
        y.push_back(rng.uniform() < 0.25 ? 1 : 0);
    }
    b.labels = y;
    double base = auroc(b);
    ScoreBatch mapped = b;
    for (double& s : mapped.scores) s = std::exp(2.0 * s) + 1.0;
    CHECK(auroc(mapped) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("run_experiment separates a clean blob") {
    Dataset ds = make_blob_dataset(300, 60, 4, 4.0, 0.6, 11);
    ds.name = "blob";
    RunReport report = run_experiment(blob_config(), ds);
    CHECK(report.mean_auroc > 0.9);
    CHECK(report.per_seed.size() == 2);
}

TEST_CASE("run_experiment is deterministic") {
    Dataset ds = make_blob_dataset(200, 40, 4, 4.0, 0.6, 12);
    ds.name = "blob";
    ExperimentConfig cfg = blob_config();
    cfg.epochs = 15;
    RunReport a = run_experiment(cfg, ds);
    RunReport b = run_experiment(cfg, ds);
    nlohmann::json ja = report_to_json(a, "test");
    nlohmann::json jb = report_to_json(b, "test");
    ja.erase("timing");
    jb.erase("timing");
    CHECK(ja.dump() == jb.dump());
}

TEST_CASE("run_experiment with parallel seed workers matches sequential") {
    Dataset ds = make_blob_dataset(200, 40, 4, 4.0, 0.6, 13);
    ds.name = "blob";
    ExperimentConfig cfg = blob_config();
    cfg.epochs = 10;
    cfg.seeds = {1, 2, 3, 4};
    RunReport seq = run_experiment(cfg, ds);
    cfg.jobs = 4;
    RunReport par = run_experiment(cfg, ds);
    CHECK(seq.mean_auroc == par.mean_auroc);
    for (std::size_t i = 0; i < seq.per_seed.size(); ++i)
        CHECK(seq.per_seed[i].auroc == par.per_seed[i].auroc);
}

TEST_CASE("aggregate means, stability average and validation") {
    auto mk = [](const std::string& ds, EvalMethod m, double g, double mean) {
        RunReport r;
        r.config = ExperimentConfig{};
        r.config.dataset = ds;
        r.config.method = m;
        r.config.gamma0 = g;
        r.dataset_name = ds;
        r.mean_auroc = mean;
        return r;
    };

    SummaryTable one = aggregate({mk("a", EvalMethod::Aar, 0.2, 0.7)});
    REQUIRE(one.cells.size() == 1);
    CHECK(one.cells[0].mean_auroc == doctest::Approx(0.7));

    SummaryTable two =
        aggregate({mk("a", EvalMethod::Aar, 0.2, 0.6), mk("b", EvalMethod::Aar, 0.2, 0.8)});
    REQUIRE(two.cells.size() == 1);
    CHECK(two.cells[0].mean_auroc == doctest::Approx(0.7)); // unweighted dataset mean
    CHECK(two.cells[0].n_datasets == 2);

    SummaryTable stab = aggregate({mk("a", EvalMethod::Aar, 0.0, 0.9),
                                   mk("a", EvalMethod::Aar, 0.2, 0.7)});
    REQUIRE(stab.stability.size() == 1);
    CHECK(stab.stability[0].avg_auroc == doctest::Approx(0.8));

    CHECK_THROWS_AS(aggregate({}), InvalidInput);
    CHECK_THROWS_AS(aggregate({mk("a", EvalMethod::Aar, 0.2, 0.6),
                               mk("a", EvalMethod::Aar, 0.2, 0.7)}),
                    InvalidInput); // duplicate dataset
    CHECK_THROWS_AS(aggregate({mk("a", EvalMethod::Aar, 0.2, 0.6),
                               mk("b", EvalMethod::MzOnly, 0.2, 0.7)}),
                    InvalidInput); // methods over different dataset sets

    auto mixed = mk("a", EvalMethod::Aar, 0.2, 0.6);
    auto other = mk("b", EvalMethod::Aar, 0.2, 0.6);
    other.config.epochs = mixed.config.epochs + 1;
    CHECK_THROWS_AS(aggregate({mixed, other}), InvalidInput);
}

TEST_CASE("report mean and std recompute from the per-seed values") {
    Dataset ds = make_blob_dataset(200, 40, 4, 4.0, 0.6, 14);
    ds.name = "blob";
    ExperimentConfig cfg = blob_config();
    cfg.epochs = 10;
    cfg.seeds = {1, 2, 3};
    RunReport r = run_experiment(cfg, ds);
    double mean = 0.0;
    for (const auto& s : r.per_seed) mean += s.auroc;
    mean /= 3.0;
    double var = 0.0;
    for (const auto& s : r.per_seed) var += (s.auroc - mean) * (s.auroc - mean);
    CHECK(std::fabs(r.mean_auroc - mean) < 1e-12);
    CHECK(std::fabs(r.std_auroc - std::sqrt(var / 2.0)) < 1e-12);
}

TEST_CASE("config JSON round trip") {
    ExperimentConfig cfg = blob_config();
    cfg.method = EvalMethod::FixedQuantile;
    cfg.fixed_gamma = 0.15;
    cfg.seeds = {7, 8, 9};
    ExperimentConfig back = config_from_json(config_to_json(cfg));
    CHECK(config_to_json(back).dump() == config_to_json(cfg).dump());
    CHECK_THROWS_AS(config_from_json(nlohmann::json::array()), InvalidInput);
    CHECK_THROWS_AS(config_from_json(nlohmann::json{{"dataset", ""}}), InvalidInput);
}

} // TEST_SUITE
