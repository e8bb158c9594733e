#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "modmon/dcsbm.hpp"
#include "modmon/dmon.hpp"
#include "modmon/errors.hpp"
#include "modmon/modularity.hpp"
#include "modmon/rng.hpp"
#include "modmon/snapshot.hpp"
#include "modmon/tolerances.hpp"

using namespace modmon;

namespace {

AttributedSnapshot random_snapshot(int n, int s, RngStream& rng) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (int u = 0; u < n; ++u) {
        for (int v = u + 1; v < n; ++v) {
            if (rng.next_double() < 0.5) {
                a(u, v) = a(v, u) = static_cast<double>(1 + rng.next_below(3));
            }
        }
    }
    if (a.sum() == 0.0) a(0, 1) = a(1, 0) = 1.0;
    Eigen::MatrixXd x(n, s);
    for (int u = 0; u < n; ++u) {
        for (int j = 0; j < s; ++j) x(u, j) = 2.0 * rng.next_double() - 1.0;
    }
    return AttributedSnapshot(0, a, x);
}

SoftAssignment uniform_assignment(int n, int k) {
    return SoftAssignment(Eigen::MatrixXd::Constant(n, k, 1.0 / k));
}

// Balanced one-hot: node u belongs to community u mod k; requires k | n.
SoftAssignment balanced_one_hot(int n, int k) {
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, k);
    for (int u = 0; u < n; ++u) c(u, u % k) = 1.0;
    return SoftAssignment(c);
}

SoftAssignment collapsed_assignment(int n, int k) {
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, k);
    c.col(0).setOnes();
    return SoftAssignment(c);
}

std::vector<AttributedSnapshot> scenario_phase1(int n, int k, int s, int len,
                                                std::uint64_t seed) {
    ScenarioSpec spec;
    spec.base = DcsbmConfig::balanced(n, k, 18.0, 2.0);
    spec.attribute_dim = s;
    spec.phase1_len = len;
    spec.phase2_len = 0;
    RngStream rng(seed, 0);
    const DynamicNetwork net = generate_dynamic_network(spec, rng);
    return net.snapshots();
}

}  // namespace

TEST_CASE("forward rows sum to one and zero weights give the exact uniform") {
    RngStream rng(41, 0);
    const auto snap = random_snapshot(7, 3, rng);

    DmonModel zero(3, 5, 4);
    const SoftAssignment c = zero.forward(snap);
    CHECK(c.node_count() == 7);
    CHECK(c.communities() == 4);
    for (Eigen::Index u = 0; u < 7; ++u) {
        CHECK(c.matrix().row(u).sum() == doctest::Approx(1.0).epsilon(1e-14));
        for (Eigen::Index j = 0; j < 4; ++j) CHECK(c.matrix()(u, j) == 0.25);
    }

    DmonModel trained = DmonModel::glorot(3, 5, 4, rng);
    const SoftAssignment d = trained.forward(snap);
    for (Eigen::Index u = 0; u < 7; ++u) {
        CHECK(std::abs(d.matrix().row(u).sum() - 1.0) < tol::kRowStochastic);
    }
}

TEST_CASE("one weight set serves snapshots of any node count") {
    RngStream rng(42, 0);
    DmonModel model = DmonModel::glorot(3, 4, 3, rng);
    for (int n : {4, 9, 17}) {
        const auto snap = random_snapshot(n, 3, rng);
        const SoftAssignment c = model.forward(snap);
        CHECK(c.node_count() == n);
        CHECK(c.communities() == 3);
    }
}

TEST_CASE("forward rejects a wrong attribute dimension") {
    RngStream rng(43, 0);
    DmonModel model(4, 4, 3);
    const auto snap = random_snapshot(5, 3, rng);
    CHECK_THROWS_AS(model.forward(snap), DimensionMismatchError);
}

TEST_CASE("collapse regularizer closed forms") {
    for (int n : {2, 9, 20, 50}) {
        for (int k : {2, 3, 5}) {
            CAPTURE(n);
            CAPTURE(k);
            CHECK(std::abs(collapse_regularizer(uniform_assignment(n, k))) < 1e-12);
            CHECK(std::abs(collapse_regularizer(collapsed_assignment(n, k)) -
                           (std::sqrt(static_cast<double>(k)) - 1.0)) < 1e-12);
            if (n % k == 0) {
                CHECK(std::abs(collapse_regularizer(balanced_one_hot(n, k))) < 1e-12);
            }
        }
    }
}

TEST_CASE("srco closed forms and the nine-by-three spot values") {
    for (int n : {2, 9, 20, 50}) {
        for (int k : {2, 3, 5}) {
            CAPTURE(n);
            CAPTURE(k);
            const double sqrt_n = std::sqrt(static_cast<double>(n));
            CHECK(std::abs(srco(uniform_assignment(n, k)) - (sqrt_n - 1.0)) < 1e-12);
            if (n % k == 0) {
                const double expect = std::sqrt(static_cast<double>(n) / k) - 1.0;
                CHECK(std::abs(srco(balanced_one_hot(n, k)) - expect) < 1e-12);
            }
        }
    }
    CHECK(srco(uniform_assignment(9, 3)) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(srco(balanced_one_hot(9, 3)) ==
          doctest::Approx(std::sqrt(3.0) - 1.0).epsilon(1e-14));
}

TEST_CASE("srco strictly separates the two pathologies the CR conflates") {
    for (int n : {4, 12, 30}) {
        for (int k : {2, 3, 4}) {
            if (n % k != 0) continue;
            const double at_uniform = srco(uniform_assignment(n, k));
            const double at_one_hot = srco(balanced_one_hot(n, k));
            CHECK(at_uniform > at_one_hot);
            CHECK(std::abs(collapse_regularizer(uniform_assignment(n, k)) -
                           collapse_regularizer(balanced_one_hot(n, k))) < 1e-12);
        }
    }
}

TEST_CASE("loss without a regularizer is exactly negative modularity") {
    RngStream rng(44, 0);
    const auto snap = random_snapshot(10, 3, rng);
    DmonModel model = DmonModel::glorot(3, 4, 3, rng);
    TrainConfig config;
    config.regularizer = RegularizerKind::None;
    const double q = modularity_soft(snap, model.forward(snap));
    CHECK(dmon_loss(model, snap, config) == doctest::Approx(-q).epsilon(1e-12));
}

TEST_CASE("zero weights with srco give the uniform closed-form loss") {
    RngStream rng(45, 0);
    const int n = 12;
    const auto snap = random_snapshot(n, 3, rng);
    DmonModel model(3, 4, 4);
    TrainConfig config;
    config.regularizer = RegularizerKind::Srco;
    const double expected = std::sqrt(static_cast<double>(n)) - 1.0;
    CHECK(dmon_loss(model, snap, config) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("reg_weight scales the penalty term linearly") {
    RngStream rng(46, 0);
    const auto snap = random_snapshot(8, 3, rng);
    DmonModel model = DmonModel::glorot(3, 4, 3, rng);
    TrainConfig config;
    config.regularizer = RegularizerKind::Srco;
    config.reg_weight = 0.0;
    const double base = dmon_loss(model, snap, config);
    config.reg_weight = 2.5;
    const double penalty = srco(model.forward(snap));
    CHECK(dmon_loss(model, snap, config) ==
          doctest::Approx(base + 2.5 * penalty).epsilon(1e-12));
}

TEST_CASE("forward is equivariant under node permutations") {
    RngStream rng(47, 0);
    const int n = 9, s = 3;
    const auto snap = random_snapshot(n, s, rng);
    DmonModel model = DmonModel::glorot(s, 5, 3, rng);
    const Eigen::MatrixXd c = model.forward_matrix(snap);

    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = perm.size() - 1; i > 0; --i) {
        std::swap(perm[i], perm[rng.next_below(i + 1)]);
    }
    Eigen::MatrixXd pa(n, n);
    Eigen::MatrixXd px(n, s);
    for (int u = 0; u < n; ++u) {
        px.row(u) = snap.attributes().row(perm[u]);
        for (int v = 0; v < n; ++v) pa(u, v) = snap.adjacency()(perm[u], perm[v]);
    }
    const Eigen::MatrixXd pc =
        model.forward_matrix(AttributedSnapshot(0, pa, px));
    for (int u = 0; u < n; ++u) {
        CHECK((pc.row(u) - c.row(perm[u])).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("glorot initialization respects the fan-based bound") {
    RngStream rng(48, 0);
    DmonModel model = DmonModel::glorot(6, 10, 4, rng);
    const double limit_conv = std::sqrt(6.0 / (6 + 10));
    const double limit_out = std::sqrt(6.0 / (10 + 4));
    CHECK(model.w_conv().cwiseAbs().maxCoeff() <= limit_conv);
    CHECK(model.w_skip().cwiseAbs().maxCoeff() <= limit_conv);
    CHECK(model.w_out().cwiseAbs().maxCoeff() <= limit_out);
    CHECK(model.w_conv().cwiseAbs().maxCoeff() > 0.0);

    RngStream again(48, 0);
    DmonModel replay = DmonModel::glorot(6, 10, 4, again);
    CHECK((replay.w_conv() - model.w_conv()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((replay.w_out() - model.w_out()).cwiseAbs().maxCoeff() == 0.0);

    RngStream other(48, 1);
    DmonModel different = DmonModel::glorot(6, 10, 4, other);
    CHECK((different.w_conv() - model.w_conv()).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("zero epochs leave the model untouched") {
    RngStream rng(49, 0);
    const std::vector<AttributedSnapshot> snaps = {random_snapshot(8, 3, rng)};
    DmonModel model = DmonModel::glorot(3, 4, 3, rng);
    const Eigen::MatrixXd before = model.w_conv();
    TrainConfig config;
    config.epochs = 0;
    RngStream train_rng(49, 1);
    const TrainResult result = train_phase1(std::move(model), snaps, config, train_rng);
    CHECK((result.model.w_conv() - before).cwiseAbs().maxCoeff() == 0.0);
    CHECK(result.epoch_losses.empty());
}

TEST_CASE("training is deterministic and reduces the loss") {
    const auto snaps = scenario_phase1(60, 3, 4, 6, 50);
    TrainConfig config;
    config.epochs = 40;

    auto run = [&] {
        RngStream init_rng(7, 1);
        DmonModel init = DmonModel::glorot(4, 16, 3, init_rng);
        return train_phase1(std::move(init), snaps, config, init_rng);
    };
    const TrainResult first = run();
    const TrainResult second = run();
    CHECK((first.model.w_conv() - second.model.w_conv()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((first.model.w_skip() - second.model.w_skip()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((first.model.w_out() - second.model.w_out()).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(first.epoch_losses.size() == 40);
    CHECK(first.epoch_losses.back() < first.epoch_losses.front());
}

TEST_CASE("dropout draws change the outcome but keep it reproducible") {
    const auto snaps = scenario_phase1(40, 2, 3, 4, 51);
    TrainConfig config;
    config.epochs = 5;
    config.dropout_rate = 0.5;

    auto run = [&](std::uint64_t stream) {
        RngStream rng(11, stream);
        DmonModel init = DmonModel::glorot(3, 8, 2, rng);
        return train_phase1(std::move(init), snaps, config, rng);
    };
    const TrainResult a = run(1);
    const TrainResult b = run(1);
    CHECK((a.model.w_out() - b.model.w_out()).cwiseAbs().maxCoeff() == 0.0);

    TrainConfig no_dropout = config;
    no_dropout.dropout_rate = 0.0;
    RngStream rng(11, 1);
    DmonModel init = DmonModel::glorot(3, 8, 2, rng);
    const TrainResult c = train_phase1(std::move(init), snaps, no_dropout, rng);
    CHECK((a.model.w_out() - c.model.w_out()).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("training rejects bad configs and empty phase one") {
    RngStream rng(52, 0);
    const std::vector<AttributedSnapshot> snaps = {random_snapshot(6, 3, rng)};
    TrainConfig config;

    config.learning_rate = 0.0;
    CHECK_THROWS_AS(train_phase1(DmonModel(3, 4, 2), snaps, config, rng),
                    InvalidArgumentError);

    config.learning_rate = 1e-3;
    config.dropout_rate = 1.0;
    CHECK_THROWS_AS(train_phase1(DmonModel(3, 4, 2), snaps, config, rng),
                    InvalidArgumentError);

    config.dropout_rate = 0.0;
    CHECK_THROWS_AS(train_phase1(DmonModel(3, 4, 2), {}, config, rng),
                    InsufficientDataError);
}

TEST_CASE("score is the soft modularity of the forward assignment") {
    RngStream rng(53, 0);
    const auto snap = random_snapshot(10, 3, rng);
    DmonModel model = DmonModel::glorot(3, 4, 3, rng);
    const double s1 = score(model, snap);
    const double s2 = score(model, snap);
    CHECK(s1 == s2);
    CHECK(s1 == modularity_soft(snap, model.forward(snap)));

    DmonModel zero(3, 4, 3);
    CHECK(std::abs(score(zero, snap)) <= tol::kOracleEquality);
}

TEST_CASE("trained modularity approaches the ground-truth labeling") {
    ScenarioSpec spec;
    spec.base = DcsbmConfig::balanced(80, 4, 18.0, 2.0);
    spec.attribute_dim = 8;
    spec.phase1_len = 10;
    spec.phase2_len = 0;
    RngStream gen(99, 0);
    const DynamicNetwork net = generate_dynamic_network(spec, gen);

    RngStream train_rng(99, 1);
    DmonModel init = DmonModel::glorot(8, 32, 4, train_rng);
    TrainConfig config;
    config.epochs = 120;
    const TrainResult trained =
        train_phase1(std::move(init), net.snapshots(), config, train_rng);

    double model_sum = 0.0, truth_sum = 0.0;
    for (const auto& snap : net.snapshots()) {
        model_sum += score(trained.model, snap);
        truth_sum += modularity_pairwise(snap, *snap.labels());
    }
    CHECK(model_sum / net.size() >= 0.9 * truth_sum / net.size());
}
