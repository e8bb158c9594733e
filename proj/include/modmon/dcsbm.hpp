#pragma once

#include <vector>

#include <Eigen/Dense>

#include "modmon/rng.hpp"
#include "modmon/samplers.hpp"
#include "modmon/snapshot.hpp"

namespace modmon {

// How the community propensity matrix translates into Poisson pair means.
// PerNodeDegree rescales lambda by block size so lambda_rr approximates the
// expected intra-community degree; Literal uses lambda * theta_u * theta_v
// exactly as written, which at n = 1000 produces a nearly empty graph.
enum class DensityInterpretation { PerNodeDegree, Literal };

struct DcsbmConfig {
    int n = 0;
    int k = 0;
    std::vector<int> community_sizes;  // sums to n
    Eigen::MatrixXd lambda;            // k x k, symmetric, entries >= 0
    double theta_lower = 4.0;
    double theta_upper = 64.0;
    double theta_exponent = 2.0;
    DensityInterpretation density = DensityInterpretation::PerNodeDegree;
    // Self-loops are only sampled under the Literal interpretation and are
    // zeroed before monitoring unless this is cleared.
    bool zero_self_loops = true;

    // Equal-sized communities (remainder spread over the first ones) and a
    // two-level lambda matrix.
    static DcsbmConfig balanced(int n, int k, double lambda_intra, double lambda_inter);

    void validate() const;
};

// Per-node degree propensities theta, normalized so the entries of each
// community sum to 1, together with the community assignment they refer to.
struct ThetaVector {
    Eigen::VectorXd theta;
    std::vector<int> communities;
};

// Gaussian attribute model: row r of centers is the cluster center of
// community r; node attributes are drawn with isotropic within-cluster
// variance around their community center.
struct AttributeModel {
    Eigen::MatrixXd centers;  // k x s
    double within_cluster_variance = 1.0;
};

enum class ChangeType { None, Split, Merge, NewCommunity, AttributeDrift, StructuralShift };

struct ScenarioSpec {
    DcsbmConfig base;
    int attribute_dim = 0;
    int phase1_len = 50;
    int phase2_len = 50;
    ChangeType change = ChangeType::None;
    int shift_step = 0;     // StructuralShift only
    int drift_cadence = 1;  // AttributeDrift: snapshots between applications

    void validate() const;
};

// Contiguous ground-truth labels implied by community_sizes.
std::vector<int> block_communities(const DcsbmConfig& config);

// Raw propensities from the bounded power law, normalized per community.
ThetaVector sample_theta(const DcsbmConfig& config, RngStream& rng);

// Symmetric integer-weighted adjacency with independent Poisson pair weights.
Eigen::MatrixXd sample_graph(const ThetaVector& theta, const DcsbmConfig& config,
                             RngStream& rng);

// Cluster centers: for each of the s attributes a k-vector ~ Normal(0, 3I).
AttributeModel sample_attribute_centers(int k, int s, RngStream& rng,
                                        double center_variance = 3.0);

// Row u ~ Normal(centers[c_u], within_cluster_variance * I).
Eigen::MatrixXd sample_attributes(const std::vector<int>& communities,
                                  const AttributeModel& model, RngStream& rng);

// Everything a scenario mutates when its change is injected. The injectors
// below are exposed individually so tests can drive them directly;
// generate_dynamic_network composes them.
struct GeneratorState {
    DcsbmConfig config;
    ThetaVector theta;
    AttributeModel attributes;
};

// Split one community (chosen uniformly among those with >= 2 nodes) into two
// equal halves; both halves get freshly sampled centers. Theta is
// renormalized within each half; lambda grows by one row/column reusing the
// existing intra rate on the diagonal and inter rate off it.
void inject_split(GeneratorState& state, RngStream& rng);

// Merge two distinct communities (chosen uniformly) into one; the merged
// center is the average of the two, lambda shrinks, labels stay contiguous.
void inject_merge(GeneratorState& state, RngStream& rng);

// Grow the node set by 25%; the new nodes form a fresh community with a
// freshly sampled center and freshly sampled, normalized theta.
void inject_new_community(GeneratorState& state, RngStream& rng);

// Add an independent Uniform(0,1) draw to every center entry.
void apply_attribute_drift(AttributeModel& model, RngStream& rng);

// Off-diagonal lambda entries increase by step, diagonal entries decrease by
// step. Throws InvalidArgumentError if any entry would go negative.
DcsbmConfig apply_structural_shift(const DcsbmConfig& config, int step);

// Full scenario: phase1_len in-control snapshots, the change, phase2_len
// post-change snapshots. Adjacency and attributes are fresh draws per
// snapshot; theta and centers persist except where the change dictates.
DynamicNetwork generate_dynamic_network(const ScenarioSpec& spec, RngStream& rng);

}  // namespace modmon
