#include "vizplan/cache.hpp"

#include "vizplan/errors.hpp"

namespace vizplan {

std::shared_ptr<const DataTable> CacheLevel::lookup(const std::string &sql) const {
    auto it = entries_.find(sql);
    return it == entries_.end() ? nullptr : it->second;
}

std::vector<std::string> CacheLevel::insert(const std::string &sql,
                                            std::shared_ptr<const DataTable> result) {
    if (!result) throw ValidationError("cache insert of a null result");
    if (cfg_.capacity == 0) return {};
    if (result->num_rows() > cfg_.row_threshold) return {};
    if (entries_.count(sql)) return {};

    entries_.emplace(sql, std::move(result));
    order_.push_back(sql);
    std::vector<std::string> evicted;
    while (order_.size() > cfg_.capacity) {
        evicted.push_back(order_.front());
        entries_.erase(order_.front());
        order_.pop_front();
    }
    return evicted;
}

std::shared_ptr<const DataTable> SharedCache::lookup(const std::string &sql) {
    std::lock_guard<std::mutex> lock(mu_);
    auto hit = level_.lookup(sql);
    if (hit)
        ++stats_.hits;
    else
        ++stats_.misses;
    return hit;
}

void SharedCache::offer(const std::string &sql, std::shared_ptr<const DataTable> result) {
    std::lock_guard<std::mutex> lock(mu_);
    stats_.evictions += level_.insert(sql, std::move(result)).size();
}

CacheStats SharedCache::stats() const {
    std::lock_guard<std::mutex> lock(mu_);
    return stats_;
}

size_t SharedCache::size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return level_.size();
}

const char *source_name(ResultSource s) {
    switch (s) {
    case ResultSource::ClientCache: return "CLIENT_CACHE";
    case ResultSource::ServerCache: return "SERVER_CACHE";
    case ResultSource::Backend: return "BACKEND";
    }
    return "BACKEND";
}

FetchResult CachedExecutor::fetch(const std::string &sql) {
    if (auto hit = client_.lookup(sql)) {
        ++client_stats_.hits;
        return {hit, ResultSource::ClientCache};
    }
    ++client_stats_.misses;

    if (server_) {
        if (auto hit = server_->lookup(sql)) {
            client_stats_.evictions += client_.insert(sql, hit).size();
            return {hit, ResultSource::ServerCache};
        }
    }

    auto fresh = std::make_shared<const DataTable>(backend_.execute(sql));
    if (server_) server_->offer(sql, fresh);
    client_stats_.evictions += client_.insert(sql, fresh).size();
    return {fresh, ResultSource::Backend};
}

CacheStats CachedExecutor::server_stats() const {
    return server_ ? server_->stats() : CacheStats{};
}

} // namespace vizplan
