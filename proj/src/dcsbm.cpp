#include "modmon/dcsbm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace modmon {

DcsbmConfig DcsbmConfig::balanced(int n, int k, double lambda_intra,
                                  double lambda_inter) {
    DcsbmConfig config;
    config.n = n;
    config.k = k;
    config.community_sizes.assign(static_cast<std::size_t>(k), n / k);
    for (int r = 0; r < n % k; ++r) config.community_sizes[static_cast<std::size_t>(r)]++;
    config.lambda = Eigen::MatrixXd::Constant(k, k, lambda_inter);
    config.lambda.diagonal().setConstant(lambda_intra);
    config.validate();
    return config;
}

void DcsbmConfig::validate() const {
    if (n < 1 || k < 1) throw InvalidArgumentError("dcsbm: need n >= 1 and k >= 1");
    if (static_cast<int>(community_sizes.size()) != k) {
        throw InvalidArgumentError("dcsbm: community_sizes length must equal k");
    }
    if (std::accumulate(community_sizes.begin(), community_sizes.end(), 0) != n) {
        throw InvalidArgumentError("dcsbm: community_sizes must sum to n");
    }
    for (int size : community_sizes) {
        if (size < 1) throw InvalidArgumentError("dcsbm: every community needs >= 1 node");
    }
    if (lambda.rows() != k || lambda.cols() != k) {
        throw InvalidArgumentError("dcsbm: lambda must be k x k");
    }
    for (int r = 0; r < k; ++r) {
        for (int s = r; s < k; ++s) {
            if (lambda(r, s) < 0.0) throw InvalidArgumentError("dcsbm: lambda entries must be >= 0");
            if (lambda(r, s) != lambda(s, r)) {
                throw InvalidArgumentError("dcsbm: lambda must be symmetric");
            }
        }
    }
    if (!(0.0 < theta_lower && theta_lower < theta_upper)) {
        throw InvalidArgumentError("dcsbm: need 0 < theta_lower < theta_upper");
    }
}

void ScenarioSpec::validate() const {
    base.validate();
    if (attribute_dim < 1) throw InvalidArgumentError("scenario: attribute_dim must be >= 1");
    if (phase1_len < 0 || phase2_len < 0) {
        throw InvalidArgumentError("scenario: phase lengths must be >= 0");
    }
    if (change == ChangeType::StructuralShift && shift_step < 1) {
        throw InvalidArgumentError("scenario: structural shift needs step >= 1");
    }
    if (change == ChangeType::AttributeDrift && drift_cadence < 1) {
        throw InvalidArgumentError("scenario: drift cadence must be >= 1");
    }
}

std::vector<int> block_communities(const DcsbmConfig& config) {
    std::vector<int> communities;
    communities.reserve(static_cast<std::size_t>(config.n));
    for (int r = 0; r < config.k; ++r) {
        communities.insert(communities.end(),
                           static_cast<std::size_t>(config.community_sizes[static_cast<std::size_t>(r)]),
                           r);
    }
    return communities;
}

namespace {

// Normalize theta so each community's entries sum to exactly 1.
void normalize_theta_within(Eigen::VectorXd& theta, const std::vector<int>& communities,
                            int community) {
    double sum = 0.0;
    for (Eigen::Index u = 0; u < theta.size(); ++u) {
        if (communities[static_cast<std::size_t>(u)] == community) sum += theta[u];
    }
    for (Eigen::Index u = 0; u < theta.size(); ++u) {
        if (communities[static_cast<std::size_t>(u)] == community) theta[u] /= sum;
    }
}

double pair_scale(const DcsbmConfig& config, int r, int s) {
    if (config.density == DensityInterpretation::Literal) return 1.0;
    const double nr = config.community_sizes[static_cast<std::size_t>(r)];
    const double ns = config.community_sizes[static_cast<std::size_t>(s)];
    return r == s ? nr : 0.5 * (nr + ns);
}

// Reference rates for extending lambda by one community. Scenario matrices
// carry one intra and one inter value, so the first entries are those rates.
double intra_reference(const Eigen::MatrixXd& lambda, int community) {
    return lambda(community, community);
}

double inter_reference(const Eigen::MatrixXd& lambda) {
    return lambda.rows() >= 2 ? lambda(0, 1) : 0.0;
}

Eigen::MatrixXd extend_lambda(const Eigen::MatrixXd& lambda, double new_diag,
                              double new_offdiag) {
    const Eigen::Index k = lambda.rows();
    Eigen::MatrixXd out(k + 1, k + 1);
    out.topLeftCorner(k, k) = lambda;
    out.row(k).setConstant(new_offdiag);
    out.col(k).setConstant(new_offdiag);
    out(k, k) = new_diag;
    return out;
}

Eigen::MatrixXd shrink_lambda(const Eigen::MatrixXd& lambda, int removed) {
    const Eigen::Index k = lambda.rows();
    Eigen::MatrixXd out(k - 1, k - 1);
    for (Eigen::Index r = 0, ro = 0; r < k; ++r) {
        if (r == removed) continue;
        for (Eigen::Index s = 0, so = 0; s < k; ++s) {
            if (s == removed) continue;
            out(ro, so) = lambda(r, s);
            ++so;
        }
        ++ro;
    }
    return out;
}

std::vector<int> members_of(const std::vector<int>& communities, int community) {
    std::vector<int> members;
    for (std::size_t u = 0; u < communities.size(); ++u) {
        if (communities[u] == community) members.push_back(static_cast<int>(u));
    }
    return members;
}

}  // namespace

ThetaVector sample_theta(const DcsbmConfig& config, RngStream& rng) {
    config.validate();
    ThetaVector result;
    result.communities = block_communities(config);
    result.theta.resize(config.n);
    for (int u = 0; u < config.n; ++u) {
        result.theta[u] = sample_bounded_power_law(config.theta_lower, config.theta_upper,
                                                   config.theta_exponent, rng);
    }
    for (int r = 0; r < config.k; ++r) {
        normalize_theta_within(result.theta, result.communities, r);
    }
    return result;
}

Eigen::MatrixXd sample_graph(const ThetaVector& theta, const DcsbmConfig& config,
                             RngStream& rng) {
    const int n = config.n;
    if (static_cast<int>(theta.communities.size()) != n || theta.theta.size() != n) {
        throw DimensionMismatchError("sample_graph: theta inconsistent with config");
    }
    Eigen::MatrixXd adjacency = Eigen::MatrixXd::Zero(n, n);
    for (int u = 0; u < n; ++u) {
        const int cu = theta.communities[static_cast<std::size_t>(u)];
        if (config.density == DensityInterpretation::Literal) {
            // Self-pair term: the loop weight is twice the half-loop count.
            const double mean = config.lambda(cu, cu) * theta.theta[u] * theta.theta[u] / 2.0;
            adjacency(u, u) = 2.0 * static_cast<double>(sample_poisson(mean, rng));
        }
        for (int v = u + 1; v < n; ++v) {
            const int cv = theta.communities[static_cast<std::size_t>(v)];
            const double mean = config.lambda(cu, cv) * theta.theta[u] * theta.theta[v] *
                                pair_scale(config, cu, cv);
            const double weight = static_cast<double>(sample_poisson(mean, rng));
            adjacency(u, v) = weight;
            adjacency(v, u) = weight;
        }
    }
    if (config.zero_self_loops) adjacency.diagonal().setZero();
    return adjacency;
}

AttributeModel sample_attribute_centers(int k, int s, RngStream& rng,
                                        double center_variance) {
    if (k < 1 || s < 1) throw InvalidArgumentError("attribute centers need k >= 1, s >= 1");
    AttributeModel model;
    model.centers.resize(k, s);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(k);
    for (int j = 0; j < s; ++j) {
        model.centers.col(j) = sample_gaussian_vector(zero, center_variance, rng);
    }
    return model;
}

Eigen::MatrixXd sample_attributes(const std::vector<int>& communities,
                                  const AttributeModel& model, RngStream& rng) {
    const auto n = static_cast<Eigen::Index>(communities.size());
    const auto s = model.centers.cols();
    Eigen::MatrixXd attributes(n, s);
    for (Eigen::Index u = 0; u < n; ++u) {
        const int c = communities[static_cast<std::size_t>(u)];
        if (c < 0 || c >= model.centers.rows()) {
            throw InvalidArgumentError("sample_attributes: community id outside center rows");
        }
        attributes.row(u) = sample_gaussian_vector(model.centers.row(c).transpose(),
                                                   model.within_cluster_variance, rng)
                                .transpose();
    }
    return attributes;
}

void inject_split(GeneratorState& state, RngStream& rng) {
    auto& config = state.config;
    std::vector<int> eligible;
    for (int r = 0; r < config.k; ++r) {
        if (config.community_sizes[static_cast<std::size_t>(r)] >= 2) eligible.push_back(r);
    }
    if (eligible.empty()) throw InvalidArgumentError("split: no community has >= 2 nodes");
    const int target = eligible[rng.next_below(eligible.size())];

    std::vector<int> members = members_of(state.theta.communities, target);
    // Fisher-Yates; the first half (extra node included when odd) keeps the
    // old label, the rest become community k.
    for (std::size_t i = members.size() - 1; i > 0; --i) {
        std::swap(members[i], members[rng.next_below(i + 1)]);
    }
    const std::size_t first_half = (members.size() + 1) / 2;
    const int new_id = config.k;
    for (std::size_t i = first_half; i < members.size(); ++i) {
        state.theta.communities[static_cast<std::size_t>(members[i])] = new_id;
    }

    config.community_sizes[static_cast<std::size_t>(target)] = static_cast<int>(first_half);
    config.community_sizes.push_back(static_cast<int>(members.size() - first_half));
    config.lambda = extend_lambda(config.lambda, intra_reference(config.lambda, target),
                                  inter_reference(config.lambda));
    config.k += 1;

    normalize_theta_within(state.theta.theta, state.theta.communities, target);
    normalize_theta_within(state.theta.theta, state.theta.communities, new_id);

    const int s = static_cast<int>(state.attributes.centers.cols());
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(s);
    state.attributes.centers.conservativeResize(config.k, s);
    state.attributes.centers.row(target) = sample_gaussian_vector(zero, 3.0, rng).transpose();
    state.attributes.centers.row(new_id) = sample_gaussian_vector(zero, 3.0, rng).transpose();
}

void inject_merge(GeneratorState& state, RngStream& rng) {
    auto& config = state.config;
    if (config.k < 2) throw InvalidArgumentError("merge: needs k >= 2");
    const int first = static_cast<int>(rng.next_below(config.k));
    int second = static_cast<int>(rng.next_below(config.k - 1));
    if (second >= first) ++second;
    const int keep = std::min(first, second);
    const int drop = std::max(first, second);

    for (auto& c : state.theta.communities) {
        if (c == drop) c = keep;
        else if (c > drop) c -= 1;
    }

    state.attributes.centers.row(keep) =
        0.5 * (state.attributes.centers.row(keep) + state.attributes.centers.row(drop));
    Eigen::MatrixXd centers(config.k - 1, state.attributes.centers.cols());
    for (int r = 0, ro = 0; r < config.k; ++r) {
        if (r == drop) continue;
        centers.row(ro++) = state.attributes.centers.row(r);
    }
    state.attributes.centers = std::move(centers);

    config.community_sizes[static_cast<std::size_t>(keep)] +=
        config.community_sizes[static_cast<std::size_t>(drop)];
    config.community_sizes.erase(config.community_sizes.begin() + drop);
    config.lambda = shrink_lambda(config.lambda, drop);
    config.k -= 1;

    normalize_theta_within(state.theta.theta, state.theta.communities, keep);
}

void inject_new_community(GeneratorState& state, RngStream& rng) {
    auto& config = state.config;
    const int added = static_cast<int>(std::llround(0.25 * config.n));
    if (added < 1) throw InvalidArgumentError("new community: 25% of n rounds to zero nodes");
    const int new_id = config.k;

    state.theta.communities.insert(state.theta.communities.end(),
                                   static_cast<std::size_t>(added), new_id);
    Eigen::VectorXd theta(config.n + added);
    theta.head(config.n) = state.theta.theta;
    for (int i = 0; i < added; ++i) {
        theta[config.n + i] = sample_bounded_power_law(config.theta_lower, config.theta_upper,
                                                       config.theta_exponent, rng);
    }
    state.theta.theta = std::move(theta);

    config.n += added;
    config.community_sizes.push_back(added);
    config.lambda = extend_lambda(config.lambda, intra_reference(config.lambda, 0),
                                  inter_reference(config.lambda));
    config.k += 1;

    normalize_theta_within(state.theta.theta, state.theta.communities, new_id);

    const int s = static_cast<int>(state.attributes.centers.cols());
    state.attributes.centers.conservativeResize(config.k, s);
    state.attributes.centers.row(new_id) =
        sample_gaussian_vector(Eigen::VectorXd::Zero(s), 3.0, rng).transpose();
}

void apply_attribute_drift(AttributeModel& model, RngStream& rng) {
    for (Eigen::Index i = 0; i < model.centers.rows(); ++i) {
        for (Eigen::Index j = 0; j < model.centers.cols(); ++j) {
            model.centers(i, j) += rng.next_double();
        }
    }
}

DcsbmConfig apply_structural_shift(const DcsbmConfig& config, int step) {
    if (step < 0) throw InvalidArgumentError("structural shift: step must be >= 0");
    DcsbmConfig shifted = config;
    shifted.lambda.array() += static_cast<double>(step);
    shifted.lambda.diagonal().array() -= 2.0 * static_cast<double>(step);
    if ((shifted.lambda.array() < 0.0).any()) {
        throw InvalidArgumentError("structural shift: step drives a lambda entry negative");
    }
    return shifted;
}

DynamicNetwork generate_dynamic_network(const ScenarioSpec& spec, RngStream& rng) {
    spec.validate();
    GeneratorState state;
    state.config = spec.base;
    state.theta = sample_theta(state.config, rng);
    state.attributes =
        sample_attribute_centers(state.config.k, spec.attribute_dim, rng);

    std::vector<AttributedSnapshot> snapshots;
    snapshots.reserve(static_cast<std::size_t>(spec.phase1_len + spec.phase2_len));

    auto emit = [&](int t) {
        Eigen::MatrixXd adjacency = sample_graph(state.theta, state.config, rng);
        Eigen::MatrixXd attributes =
            sample_attributes(state.theta.communities, state.attributes, rng);
        snapshots.emplace_back(t, std::move(adjacency), std::move(attributes),
                               state.theta.communities);
    };

    for (int t = 0; t < spec.phase1_len; ++t) emit(t);

    switch (spec.change) {
        case ChangeType::None:
        case ChangeType::AttributeDrift:
            break;  // drift is applied per Phase II snapshot below
        case ChangeType::Split:
            inject_split(state, rng);
            break;
        case ChangeType::Merge:
            inject_merge(state, rng);
            break;
        case ChangeType::NewCommunity:
            inject_new_community(state, rng);
            break;
        case ChangeType::StructuralShift:
            state.config = apply_structural_shift(state.config, spec.shift_step);
            break;
    }

    for (int i = 0; i < spec.phase2_len; ++i) {
        if (spec.change == ChangeType::AttributeDrift && i % spec.drift_cadence == 0) {
            apply_attribute_drift(state.attributes, rng);
        }
        emit(spec.phase1_len + i);
    }

    std::optional<int> changepoint;
    if (spec.change != ChangeType::None && spec.phase2_len > 0) {
        changepoint = spec.phase1_len;
    }
    return DynamicNetwork(std::move(snapshots), spec.attribute_dim, changepoint);
}

}  // namespace modmon
