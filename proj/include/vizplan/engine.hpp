#ifndef VIZPLAN_ENGINE_HPP
#define VIZPLAN_ENGINE_HPP

#include <cstdint>
#include <map>
#include <string>

#include "vizplan/sql.hpp"
#include "vizplan/table.hpp"

namespace vizplan {

using Catalog = std::map<std::string, const DataTable *>;

//! Execute one query tree over in-memory tables. Pinned behaviors that the
//! in-memory transform path relies on: GROUP BY emits groups in first-seen
//! order, ORDER BY is a stable sort with Null ordered lowest, the window
//! running sum advances row by row in sort order (ties do not pool), value
//! aggregates skip Nulls, COUNT(*) counts rows, an ungrouped aggregate over
//! zero rows produces its single summary row, comparisons touching Null are
//! false, and division (or mod) by zero is Null rather than an error.
//! Unresolved :holes and type violations raise ExecError.
DataTable reference_execute(const SqlQuery &q, const Catalog &catalog);
DataTable reference_execute(const std::string &sql, const Catalog &catalog);

//! Output-row estimate from a deterministic sample of the base table: the
//! whole table when it holds at most 1000 rows, else a seeded sample of 1%
//! of rows (at least 1000). A query whose outer block groups reports the
//! observed group count; anything else scales the observed row count by the
//! sampling factor. Exact whenever the sample is the full table.
double estimate_cardinality(const SqlQuery &q, const Catalog &catalog, uint64_t seed);

//! What the runtime talks to. execute is deterministic for a fixed catalog
//! and may be called from several sessions at once; register_table needs
//! exclusive access. estimate_rows throws ParseError on malformed text but
//! never fails on a grammatical query; estimation trouble reports 0 rows.
struct QueryExecutor {
    virtual ~QueryExecutor() = default;
    virtual DataTable execute(const std::string &sql) = 0;
    virtual double estimate_rows(const std::string &sql) = 0;
    virtual void register_table(const std::string &name, DataTable rows) = 0;
};

//! In-process executor over the reference engine, owning its tables.
class LocalExecutor : public QueryExecutor {
  public:
    explicit LocalExecutor(uint64_t sample_seed = 7) : sample_seed_(sample_seed) {}

    void register_table(const std::string &name, DataTable rows) override;
    DataTable execute(const std::string &sql) override;
    double estimate_rows(const std::string &sql) override;

    const DataTable *table(const std::string &name) const;

  private:
    Catalog catalog() const;

    std::map<std::string, DataTable> tables_;
    uint64_t sample_seed_;
};

} // namespace vizplan

#endif
