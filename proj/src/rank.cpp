#include "vizplan/rank.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "vizplan/errors.hpp"
#include "vizplan/table.hpp"

namespace vizplan {

namespace {

constexpr size_t kDim = 2 * kPlanKinds;

const char *kKindNames[kPlanKinds] = {"extent", "bin",     "aggregate", "filter", "collect",
                                      "project", "stack",  "timeunit",  "span"};

} // namespace

const std::array<std::string, kDim> &feature_names() {
    static const std::array<std::string, kDim> names = [] {
        std::array<std::string, kDim> out;
        for (size_t k = 0; k < kPlanKinds; ++k) {
            out[k] = std::string("n_") + kKindNames[k];
            out[kPlanKinds + k] = std::string("card_") + kKindNames[k];
        }
        return out;
    }();
    return names;
}

double LinearRankModel::cost(const FeatureVec &v) const {
    if (w.size() != kDim) throw ValidationError("model weight dimensionality mismatch");
    double c = 0;
    for (size_t f = 0; f < kDim; ++f) c += w[f] * v[f];
    return c;
}

double rank_loss(const std::vector<double> &w, const std::vector<TrainingPair> &pairs,
                 double lambda) {
    if (w.size() != kDim) throw ValidationError("weight dimensionality mismatch");
    if (pairs.empty()) throw ValidationError("empty training set");
    double hinge = 0;
    for (const auto &p : pairs) {
        // margin on the cost gap: a faster first plan (y = +1) should end up
        // cheaper, so the hinge rewards cost(v2) - cost(v1) reaching +1
        double margin = 0;
        for (size_t f = 0; f < kDim; ++f) margin += w[f] * (p.v2[f] - p.v1[f]);
        hinge += std::max(0.0, 1.0 - static_cast<double>(p.y) * margin);
    }
    double reg = 0;
    for (double x : w) reg += x * x;
    return hinge / static_cast<double>(pairs.size()) + lambda * reg;
}

LinearRankModel train_ranksvm(const std::vector<TrainingPair> &pairs,
                              const RankHyperparams &hyper) {
    if (pairs.empty()) throw ValidationError("empty training set");
    for (const auto &p : pairs)
        if (p.y != 1 && p.y != -1) throw ValidationError("pair label must be +1 or -1");

    LinearRankModel m;
    m.hyper = hyper;
    m.w.assign(kDim, 0.0);
    for (size_t f = 0; f < kDim; ++f) {
        double lo = pairs[0].v1[f], hi = pairs[0].v1[f];
        for (const auto &p : pairs) {
            lo = std::min({lo, p.v1[f], p.v2[f]});
            hi = std::max({hi, p.v1[f], p.v2[f]});
        }
        m.feature_range[f] = {lo, hi};
    }

    const double inv = 1.0 / static_cast<double>(pairs.size());
    std::vector<double> grad(kDim);
    for (size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
        std::fill(grad.begin(), grad.end(), 0.0);
        for (const auto &p : pairs) {
            double margin = 0;
            for (size_t f = 0; f < kDim; ++f) margin += m.w[f] * (p.v2[f] - p.v1[f]);
            if (1.0 - static_cast<double>(p.y) * margin > 0.0)
                for (size_t f = 0; f < kDim; ++f)
                    grad[f] -= static_cast<double>(p.y) * (p.v2[f] - p.v1[f]) * inv;
        }
        for (size_t f = 0; f < kDim; ++f)
            m.w[f] -= hyper.learning_rate * (grad[f] + 2.0 * hyper.lambda * m.w[f]);
    }
    m.training_loss = rank_loss(m.w, pairs, hyper.lambda);
    return m;
}

Preference compare(const LinearRankModel &m, const FeatureVec &v1, const FeatureVec &v2) {
    const double margin = m.cost(v1) - m.cost(v2);
    if (std::fabs(margin) < 1e-12) return Preference::Tie;
    return margin < 0 ? Preference::First : Preference::Second;
}

size_t select_best_linear(const LinearRankModel &m, const std::vector<PlanChoice> &plans) {
    if (plans.empty()) throw ValidationError("no plans to rank");
    size_t best_id = plans[0].plan_id;
    double best_cost = m.cost(plans[0].vec.features());
    for (size_t i = 1; i < plans.size(); ++i) {
        const double c = m.cost(plans[i].vec.features());
        if (c < best_cost || (c == best_cost && plans[i].plan_id < best_id)) {
            best_cost = c;
            best_id = plans[i].plan_id;
        }
    }
    return best_id;
}

Preference heuristic_compare(const HeuristicRuleSet &rules, const PlanChoice &p1,
                             const PlanChoice &p2) {
    double s1 = 0, s2 = 0;
    for (size_t k = 0; k < kPlanKinds; ++k) {
        s1 += p1.vec.card_sums[k];
        s2 += p2.vec.card_sums[k];
    }
    if (s1 * rules.alpha < s2) return Preference::First;
    if (s2 * rules.alpha < s1) return Preference::Second;

    const size_t agg = kind_slot(TransformKind::Aggregate);
    if (p1.vec.counts[agg] > p2.vec.counts[agg]) return Preference::First;
    if (p2.vec.counts[agg] > p1.vec.counts[agg]) return Preference::Second;

    if (p1.vec.counts[kSpanSlot] < p2.vec.counts[kSpanSlot]) return Preference::First;
    if (p2.vec.counts[kSpanSlot] < p1.vec.counts[kSpanSlot]) return Preference::Second;

    return p1.plan_id <= p2.plan_id ? Preference::First : Preference::Second;
}

PlanComparator random_compare(uint64_t seed) {
    auto rng = std::make_shared<std::mt19937_64>(seed);
    return [rng](const PlanChoice &, const PlanChoice &) {
        return ((*rng)() & 1) ? Preference::First : Preference::Second;
    };
}

size_t select_best_voting(const PlanComparator &cmp, const std::vector<PlanChoice> &plans) {
    if (plans.empty()) throw ValidationError("no plans to rank");
    std::vector<size_t> wins(plans.size(), 0);
    for (size_t i = 0; i < plans.size(); ++i)
        for (size_t j = i + 1; j < plans.size(); ++j) switch (cmp(plans[i], plans[j])) {
            case Preference::First: ++wins[i]; break;
            case Preference::Second: ++wins[j]; break;
            case Preference::Tie: break;
            }
    size_t best = 0;
    for (size_t i = 1; i < plans.size(); ++i)
        if (wins[i] > wins[best] ||
            (wins[i] == wins[best] && plans[i].plan_id < plans[best].plan_id))
            best = i;
    return plans[best].plan_id;
}

namespace {

// every episode must rank the same candidates; returns the id set
std::set<size_t> session_ids(const SessionTrace &s) {
    if (s.episodes.empty()) throw ValidationError("empty session");
    if (!s.weights.empty() && s.weights.size() != s.episodes.size())
        throw ValidationError("one weight per episode required");
    std::set<size_t> ids;
    for (const auto &c : s.episodes[0]) ids.insert(c.plan_id);
    for (const auto &ep : s.episodes) {
        std::set<size_t> got;
        for (const auto &c : ep) got.insert(c.plan_id);
        if (got != ids) throw ValidationError("episodes disagree on candidate plans");
    }
    if (ids.empty()) throw ValidationError("no plans in session");
    return ids;
}

double episode_weight(const SessionTrace &s, size_t t) {
    return s.weights.empty() ? 1.0 : s.weights[t];
}

} // namespace

size_t consolidate(const SessionTrace &session, const LinearRankModel &m) {
    session_ids(session);
    std::map<size_t, double> total;
    for (size_t t = 0; t < session.episodes.size(); ++t)
        for (const auto &c : session.episodes[t])
            total[c.plan_id] += episode_weight(session, t) * m.cost(c.vec.features());
    auto best = total.begin();
    for (auto it = std::next(total.begin()); it != total.end(); ++it)
        if (it->second < best->second) best = it; // ties keep the lowest id
    return best->first;
}

size_t consolidate_voting(const SessionTrace &session, const PlanComparator &cmp) {
    session_ids(session);
    std::map<size_t, double> total;
    for (size_t t = 0; t < session.episodes.size(); ++t) {
        const auto &ep = session.episodes[t];
        for (const auto &c : ep) total.try_emplace(c.plan_id, 0.0);
        for (size_t i = 0; i < ep.size(); ++i)
            for (size_t j = i + 1; j < ep.size(); ++j) switch (cmp(ep[i], ep[j])) {
                case Preference::First:
                    total[ep[i].plan_id] += episode_weight(session, t);
                    break;
                case Preference::Second:
                    total[ep[j].plan_id] += episode_weight(session, t);
                    break;
                case Preference::Tie: break;
                }
    }
    auto best = total.begin();
    for (auto it = std::next(total.begin()); it != total.end(); ++it)
        if (it->second > best->second) best = it; // ties keep the lowest id
    return best->first;
}

std::pair<std::vector<size_t>, std::vector<size_t>> split_indices(size_t n, double train_frac,
                                                                  uint64_t seed) {
    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    const size_t cut = static_cast<size_t>(std::llround(train_frac * static_cast<double>(n)));
    std::vector<size_t> train(idx.begin(), idx.begin() + static_cast<long>(cut));
    std::vector<size_t> test(idx.begin() + static_cast<long>(cut), idx.end());
    return {std::move(train), std::move(test)};
}

std::string model_to_text(const LinearRankModel &m) {
    if (m.w.size() != kDim) throw ValidationError("model weight dimensionality mismatch");
    std::ostringstream out;
    out << "rank-model v1\n";
    out << "learning_rate " << format_number(m.hyper.learning_rate) << "\n";
    out << "epochs " << m.hyper.epochs << "\n";
    out << "lambda " << format_number(m.hyper.lambda) << "\n";
    out << "seed " << m.hyper.seed << "\n";
    out << "training_loss " << format_number(m.training_loss) << "\n";
    out << "features " << kDim << "\n";
    const auto &names = feature_names();
    for (size_t f = 0; f < kDim; ++f)
        out << "w " << names[f] << " " << format_number(m.w[f]) << "\n";
    for (size_t f = 0; f < kDim; ++f)
        out << "range " << names[f] << " " << format_number(m.feature_range[f].first) << " "
            << format_number(m.feature_range[f].second) << "\n";
    return out.str();
}

namespace {

struct LineReader {
    const std::string &text;
    size_t pos = 0;

    // next line split on single spaces; empty at end of input
    std::vector<std::string> next(size_t &line_off) {
        line_off = pos;
        if (pos >= text.size()) return {};
        size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        std::vector<std::string> toks;
        size_t s = pos;
        while (s < end) {
            size_t e = text.find(' ', s);
            if (e == std::string::npos || e > end) e = end;
            toks.push_back(text.substr(s, e - s));
            s = e + 1;
        }
        pos = end + 1;
        return toks;
    }
};

double parse_double(const std::string &tok, size_t off) {
    char *end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size()) throw ParseError("malformed number", off);
    return v;
}

} // namespace

LinearRankModel model_from_text(const std::string &text) {
    LineReader rd{text};
    size_t off = 0;
    auto want = [&](const char *key, size_t arity) {
        auto toks = rd.next(off);
        if (toks.size() != arity + 1 || toks[0] != key)
            throw ParseError(std::string("expected '") + key + "' line", off);
        return toks;
    };

    {
        auto toks = rd.next(off);
        if (toks.size() != 2 || toks[0] != "rank-model" || toks[1] != "v1")
            throw ParseError("not a rank-model document", off);
    }
    LinearRankModel m;
    m.hyper.learning_rate = parse_double(want("learning_rate", 1)[1], off);
    m.hyper.epochs = static_cast<size_t>(parse_double(want("epochs", 1)[1], off));
    m.hyper.lambda = parse_double(want("lambda", 1)[1], off);
    m.hyper.seed = static_cast<uint64_t>(parse_double(want("seed", 1)[1], off));
    m.training_loss = parse_double(want("training_loss", 1)[1], off);
    const size_t dim = static_cast<size_t>(parse_double(want("features", 1)[1], off));
    if (dim != kDim) throw ParseError("unexpected feature dimensionality", off);

    const auto &names = feature_names();
    m.w.assign(kDim, 0.0);
    for (size_t f = 0; f < kDim; ++f) {
        auto toks = want("w", 2);
        if (toks[1] != names[f]) throw ParseError("weight order mismatch", off);
        m.w[f] = parse_double(toks[2], off);
    }
    for (size_t f = 0; f < kDim; ++f) {
        auto toks = want("range", 3);
        if (toks[1] != names[f]) throw ParseError("range order mismatch", off);
        m.feature_range[f] = {parse_double(toks[2], off), parse_double(toks[3], off)};
    }
    return m;
}

} // namespace vizplan
