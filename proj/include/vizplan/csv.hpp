#ifndef VIZPLAN_CSV_HPP
#define VIZPLAN_CSV_HPP

#include <optional>
#include <string>

#include "vizplan/table.hpp"

namespace vizplan {

//! Parse RFC-4180 CSV text. The first record is the header and is required.
//! Column kinds are inferred per column from the non-empty cells: all cells
//! numeric -> Number, else all cells ISO-8601 -> Timestamp, else Text.
//! Empty cells load as Null and do not veto inference. "NaN"/"inf" tokens are
//! not numeric. A hint pins kind and role for any column it names; cells that
//! do not convert under a hinted kind raise SchemaError.
DataTable parse_csv(const std::string &text, const std::optional<Schema> &hint = {});

DataTable load_csv(const std::string &path, const std::optional<Schema> &hint = {});

std::string to_csv(const DataTable &table);

void write_csv(const DataTable &table, const std::string &path);

//! Strict decimal number check used by inference: optional sign, digits with
//! at most one dot, optional exponent. Rejects hex, inf and nan spellings.
std::optional<double> parse_strict_number(const std::string &s);

} // namespace vizplan

#endif
