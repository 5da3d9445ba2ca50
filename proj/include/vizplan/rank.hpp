#ifndef VIZPLAN_RANK_HPP
#define VIZPLAN_RANK_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "vizplan/plan.hpp"

namespace vizplan {

using FeatureVec = std::array<double, 2 * kPlanKinds>;

//! Names for the feature slots, in the order PlanVector::features() emits
//! them: per-kind operator counts, then scaled per-kind cardinality sums.
const std::array<std::string, 2 * kPlanKinds> &feature_names();

//! One labeled comparison. y = +1 when the first plan measured faster,
//! -1 when the second did.
struct TrainingPair {
    FeatureVec v1{};
    FeatureVec v2{};
    int y = 1;
};

struct RankHyperparams {
    double learning_rate = 0.1;
    size_t epochs = 500;
    double lambda = 1e-4; // L2 regularization
    uint64_t seed = 1;
};

//! Linear pairwise ranker. Cost(v) = w . v, lower is better, and a pair's
//! predicted order is the sign of Cost(v1) - Cost(v2). feature_range records
//! the per-feature (min, max) seen in training; it is carried for
//! diagnostics and serialization, the cost itself is the raw dot product
//! (vectors arrive already scaled within their own candidate set).
struct LinearRankModel {
    std::vector<double> w;
    std::array<std::pair<double, double>, 2 * kPlanKinds> feature_range{};
    RankHyperparams hyper;
    double training_loss = 0;

    double cost(const FeatureVec &v) const;
};

enum class Preference { First, Second, Tie };

//! Fit by deterministic full-batch subgradient descent on the regularized
//! hinge objective L(w) = mean(max(0, 1 - y * w.(v2 - v1))) + lambda*|w|^2,
//! starting from w = 0 (so one epoch at w = 0 sees L = 1 exactly). The
//! margin direction makes a faster first plan (y = +1) train toward the
//! lower cost, consistent with compare() and the argmin selectors.
//! Throws ValidationError on an empty set or a label outside {+1, -1}.
LinearRankModel train_ranksvm(const std::vector<TrainingPair> &pairs,
                              const RankHyperparams &hyper = {});

//! Regularized objective at a given weight vector, for convergence checks.
double rank_loss(const std::vector<double> &w, const std::vector<TrainingPair> &pairs,
                 double lambda);

//! Sign of Cost(v1) - Cost(v2); margins within 1e-12 of zero are a TIE.
Preference compare(const LinearRankModel &m, const FeatureVec &v1, const FeatureVec &v2);

//! One candidate plan of one dashboard, ready to rank.
struct PlanChoice {
    size_t plan_id = 0;
    PlanVector vec;
};

//! Lowest model cost wins; exact cost ties go to the lowest plan id.
size_t select_best_linear(const LinearRankModel &m, const std::vector<PlanChoice> &plans);

//! Prioritized comparison rules. The order is fixed; only the cardinality
//! dominance factor is tunable. Always decides (the last rule is an id
//! comparison).
struct HeuristicRuleSet {
    double alpha = 2.0;
};

//! Rules in priority order: total cardinality smaller by a factor of alpha;
//! more client-side aggregate operators; fewer query spans; lower plan id.
Preference heuristic_compare(const HeuristicRuleSet &rules, const PlanChoice &p1,
                             const PlanChoice &p2);

using PlanComparator = std::function<Preference(const PlanChoice &, const PlanChoice &)>;

//! Uniform coin flip per pair from a seeded generator. Stateful: the same
//! comparator instance replays the same sequence for the same seed.
PlanComparator random_compare(uint64_t seed);

//! Round-robin vote over all n(n-1)/2 pairs; most wins, ties to the lowest
//! plan id. Ties reported by the comparator award no vote.
size_t select_best_voting(const PlanComparator &cmp, const std::vector<PlanChoice> &plans);

//! Per-episode candidate vectors for one simulated session. Episode 0 is
//! the initial render. Every episode must list the same plan ids.
struct SessionTrace {
    std::vector<std::vector<PlanChoice>> episodes;
    std::vector<double> weights; // per episode; empty means all 1
};

//! Weighted total model cost per plan across the session, lowest wins
//! (ties to the lowest plan id). A single-episode session degenerates to
//! select_best_linear.
size_t consolidate(const SessionTrace &session, const LinearRankModel &m);

//! Comparator variant: weighted win counts per episode, most wins overall.
size_t consolidate_voting(const SessionTrace &session, const PlanComparator &cmp);

//! Seeded shuffle of 0..n-1 split into a train part (first `train_frac`)
//! and a test part.
std::pair<std::vector<size_t>, std::vector<size_t>> split_indices(size_t n, double train_frac,
                                                                  uint64_t seed);

//! Structured text round trip. The format is line-based and stable; see the
//! golden test for the exact shape.
std::string model_to_text(const LinearRankModel &m);
LinearRankModel model_from_text(const std::string &text);

} // namespace vizplan

#endif
