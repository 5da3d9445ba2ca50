#include "vizplan/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "vizplan/errors.hpp"

namespace vizplan {

namespace {

constexpr int64_t kMsPerDay = 86400000;

Column col(std::string name, ValueKind kind, FieldRole role) {
    Column c;
    c.name = std::move(name);
    c.kind = kind;
    c.role = role;
    return c;
}

} // namespace

DataTable make_flights(size_t rows, uint64_t seed) {
    DataTable t;
    t.schema.columns = {
        col("date", ValueKind::Timestamp, FieldRole::Temporal),
        col("delay", ValueKind::Number, FieldRole::Quantitative),
        col("distance", ValueKind::Number, FieldRole::Quantitative),
        col("carrier", ValueKind::Text, FieldRole::Categorical),
        col("origin", ValueKind::Text, FieldRole::Categorical),
    };

    static const char *kCarriers[] = {"AA", "B6", "DL", "UA", "WN", "ZQ"};
    static const char *kAirports[] = {"ATL", "BOS", "DEN", "JFK",
                                      "LAX", "ORD", "SEA", "SFO"};
    // Carrier draw is intentionally lopsided so group-bys have uneven groups.
    static const int kCarrierCum[] = {30, 45, 65, 80, 95, 100};

    const int64_t year_start = 1704067200000; // 2024-01-01T00:00:00Z
    const int64_t year_ms = 366 * kMsPerDay;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> on_time(5.0, 12.0);
    std::normal_distribution<double> disrupted(70.0, 35.0);

    t.rows.reserve(rows);
    for (size_t i = 0; i < rows; ++i) {
        int64_t date = year_start + static_cast<int64_t>(unit(rng) * static_cast<double>(year_ms - 1));
        // Delay is a two-mode mixture: mostly near zero, a long late tail.
        double delay = unit(rng) < 0.8 ? on_time(rng) : disrupted(rng);
        delay = std::round(std::max(delay, -20.0) * 10.0) / 10.0;
        double distance = std::floor(100.0 + unit(rng) * 2900.0);
        int pick = static_cast<int>(unit(rng) * 100.0);
        size_t carrier = 0;
        while (carrier + 1 < std::size(kCarrierCum) && pick >= kCarrierCum[carrier]) ++carrier;
        size_t origin = static_cast<size_t>(unit(rng) * 8.0) % 8;

        t.rows.push_back({Value::timestamp(date), Value::number(delay),
                          Value::number(distance), Value::text(kCarriers[carrier]),
                          Value::text(kAirports[origin])});
    }
    return t;
}

DataTable make_events(size_t rows, uint64_t seed) {
    DataTable t;
    t.schema.columns = {
        col("ts", ValueKind::Timestamp, FieldRole::Temporal),
        col("duration", ValueKind::Number, FieldRole::Quantitative),
        col("score", ValueKind::Number, FieldRole::Quantitative),
        col("category", ValueKind::Text, FieldRole::Categorical),
        col("region", ValueKind::Text, FieldRole::Categorical),
    };

    static const char *kCategories[] = {"alpha", "beta", "gamma", "delta"};
    static const char *kRegions[] = {"east", "north", "south", "west"};

    const int64_t start = 1740787200000; // 2025-03-01T00:00:00Z
    const int64_t span_ms = 90 * kMsPerDay;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::exponential_distribution<double> wait(1.0 / 40.0);

    t.rows.reserve(rows);
    for (size_t i = 0; i < rows; ++i) {
        int64_t ts = start + static_cast<int64_t>(unit(rng) * static_cast<double>(span_ms - 1));
        double duration = std::round(std::min(wait(rng), 600.0) * 100.0) / 100.0;
        double score = std::round(unit(rng) * 1000.0) / 10.0;
        size_t category = static_cast<size_t>(unit(rng) * 4.0) % 4;
        size_t region = static_cast<size_t>(unit(rng) * 4.0) % 4;

        t.rows.push_back({Value::timestamp(ts), Value::number(duration),
                          Value::number(score), Value::text(kCategories[category]),
                          Value::text(kRegions[region])});
    }
    return t;
}

std::vector<std::string> dataset_names() { return {"flights", "events"}; }

DataTable make_dataset(const std::string &name, size_t rows, uint64_t seed) {
    if (name == "flights") return make_flights(rows, seed);
    if (name == "events") return make_events(rows, seed);
    throw ConfigError("unknown dataset '" + name + "'");
}

const FieldStats *DatasetStats::find(const std::string &name) const {
    for (const auto &f : fields)
        if (f.name == name) return &f;
    return nullptr;
}

std::vector<std::string> DatasetStats::fields_with_role(FieldRole role) const {
    std::vector<std::string> out;
    for (const auto &f : fields)
        if (f.role == role) out.push_back(f.name);
    return out;
}

DatasetStats dataset_stats(const DataTable &table) {
    DatasetStats stats;
    stats.fields.reserve(table.num_cols());
    for (size_t c = 0; c < table.num_cols(); ++c) {
        FieldStats f;
        f.name = table.schema.columns[c].name;
        f.kind = table.schema.columns[c].kind;
        f.role = table.schema.columns[c].role;

        bool seen = false;
        std::set<std::string> uniq;
        for (const auto &row : table.rows) {
            const Value &v = row[c];
            if (v.is_null()) continue;
            switch (v.kind()) {
            case ValueKind::Number: {
                double d = v.as_number();
                f.min = seen ? std::min(f.min, d) : d;
                f.max = seen ? std::max(f.max, d) : d;
                break;
            }
            case ValueKind::Timestamp: {
                int64_t ts = v.as_timestamp();
                f.ts_min = seen ? std::min(f.ts_min, ts) : ts;
                f.ts_max = seen ? std::max(f.ts_max, ts) : ts;
                break;
            }
            case ValueKind::Text:
                uniq.insert(v.as_text());
                break;
            default:
                break;
            }
            seen = true;
        }
        f.uniques.assign(uniq.begin(), uniq.end());
        stats.fields.push_back(std::move(f));
    }
    return stats;
}

} // namespace vizplan
