#ifndef VIZPLAN_DATASETS_HPP
#define VIZPLAN_DATASETS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "vizplan/table.hpp"

namespace vizplan {

//! Synthetic tables for benchmarks and examples. Each carries every field
//! role a dashboard template can ask for: two quantitative, two categorical,
//! one temporal. Same (rows, seed) always builds the same table.

//! Columns: date (Temporal, one year), delay (Quantitative, skewed mixture),
//! distance (Quantitative, uniform), carrier / origin (Categorical).
DataTable make_flights(size_t rows, uint64_t seed);

//! Columns: ts (Temporal, ninety days), duration (Quantitative, long tail),
//! score (Quantitative, uniform), category / region (Categorical).
DataTable make_events(size_t rows, uint64_t seed);

//! Names accepted by make_dataset, in registry order.
std::vector<std::string> dataset_names();

//! Build a bundled dataset by name. Throws ConfigError for unknown names.
DataTable make_dataset(const std::string &name, size_t rows, uint64_t seed);

//! Observed shape of one column: value bounds for numbers and timestamps,
//! the sorted distinct values for text. Nulls are skipped.
struct FieldStats {
    std::string name;
    ValueKind kind = ValueKind::Null;
    FieldRole role = FieldRole::Categorical;
    double min = 0.0;
    double max = 0.0;
    int64_t ts_min = 0;
    int64_t ts_max = 0;
    std::vector<std::string> uniques;
};

struct DatasetStats {
    std::vector<FieldStats> fields;

    //! Stats for `name`, or nullptr if the column does not exist.
    const FieldStats *find(const std::string &name) const;
    //! Column names carrying `role`, in schema order.
    std::vector<std::string> fields_with_role(FieldRole role) const;
};

//! One pass over the table. Columns with no non-null cells keep zero
//! bounds and an empty distinct list.
DatasetStats dataset_stats(const DataTable &table);

} // namespace vizplan

#endif
