#ifndef VIZPLAN_CACHE_HPP
#define VIZPLAN_CACHE_HPP

#include <cstddef>
#include <deque>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "vizplan/engine.hpp"
#include "vizplan/table.hpp"

namespace vizplan {

struct CacheConfig {
    size_t capacity = 128;       // max entries per level
    size_t row_threshold = 10000; // results above this many rows are never cached
};

struct CacheStats {
    size_t hits = 0;
    size_t misses = 0;
    size_t evictions = 0;
};

//! One FIFO cache level keyed by exact SQL text. Insertion order is the
//! eviction order; a key already present is never reinserted or reordered.
//! Results wider than the row threshold are rejected outright, as is
//! everything when capacity is zero.
class CacheLevel {
public:
    explicit CacheLevel(CacheConfig cfg = {}) : cfg_(cfg) {}

    //! Shared handle on a hit (stable across later evictions), null on miss.
    std::shared_ptr<const DataTable> lookup(const std::string &sql) const;

    //! Returns the keys evicted to make room (empty when rejected or deduped).
    std::vector<std::string> insert(const std::string &sql,
                                    std::shared_ptr<const DataTable> result);

    bool contains(const std::string &sql) const { return entries_.count(sql) > 0; }
    size_t size() const { return order_.size(); }
    //! Keys oldest first, for order inspection.
    std::vector<std::string> keys() const { return {order_.begin(), order_.end()}; }
    const CacheConfig &config() const { return cfg_; }

private:
    CacheConfig cfg_;
    std::unordered_map<std::string, std::shared_ptr<const DataTable>> entries_;
    std::deque<std::string> order_;
};

//! The middleware-resident level. Many sessions share one instance, so all
//! access is serialized internally and hit/miss/eviction counters live here.
class SharedCache {
public:
    explicit SharedCache(CacheConfig cfg = {}) : level_(cfg) {}

    std::shared_ptr<const DataTable> lookup(const std::string &sql);
    void offer(const std::string &sql, std::shared_ptr<const DataTable> result);
    CacheStats stats() const;
    size_t size() const;

private:
    mutable std::mutex mu_;
    CacheLevel level_;
    CacheStats stats_;
};

enum class ResultSource { ClientCache, ServerCache, Backend };

//! Wire tag for a source: CLIENT_CACHE, SERVER_CACHE or BACKEND.
const char *source_name(ResultSource s);

struct FetchResult {
    std::shared_ptr<const DataTable> table;
    ResultSource source = ResultSource::Backend;
};

//! A session's view of the query path: its own client level, then the shared
//! middleware level, then the backend. Backend results are offered to both
//! levels; a middleware hit is also offered to the client level so the
//! session keeps a local copy. Implements QueryExecutor, so a dataflow can
//! run against it unchanged; estimation and registration pass through.
class CachedExecutor : public QueryExecutor {
public:
    CachedExecutor(CacheConfig client_cfg, std::shared_ptr<SharedCache> server,
                   QueryExecutor &backend)
        : client_(client_cfg), server_(std::move(server)), backend_(backend) {}

    //! client -> server -> backend, tagged with where the result came from.
    FetchResult fetch(const std::string &sql);

    DataTable execute(const std::string &sql) override { return *fetch(sql).table; }
    double estimate_rows(const std::string &sql) override {
        return backend_.estimate_rows(sql);
    }
    void register_table(const std::string &name, DataTable rows) override {
        backend_.register_table(name, std::move(rows));
    }

    const CacheStats &client_stats() const { return client_stats_; }
    CacheStats server_stats() const;
    const CacheLevel &client_level() const { return client_; }

private:
    CacheLevel client_;
    CacheStats client_stats_;
    std::shared_ptr<SharedCache> server_; // null means no middleware tier
    QueryExecutor &backend_;
};

} // namespace vizplan

#endif
