#include "vizplan/csv.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "vizplan/timeutil.hpp"

namespace vizplan {

std::optional<double> parse_strict_number(const std::string &s) {
    if (s.empty()) return std::nullopt;
    size_t i = 0;
    if (s[i] == '+' || s[i] == '-') ++i;
    size_t int_digits = 0, frac_digits = 0;
    while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i, ++int_digits;
    if (i < s.size() && s[i] == '.') {
        ++i;
        while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i, ++frac_digits;
    }
    if (int_digits + frac_digits == 0) return std::nullopt;
    if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
        ++i;
        if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
        size_t exp_digits = 0;
        while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i, ++exp_digits;
        if (exp_digits == 0) return std::nullopt;
    }
    if (i != s.size()) return std::nullopt;
    errno = 0;
    const double v = std::strtod(s.c_str(), nullptr);
    if (errno == ERANGE || !std::isfinite(v)) return std::nullopt;
    return v;
}

namespace {

// One pass over the raw text; records plus a flag for unterminated quotes.
std::vector<std::vector<std::string>> split_records(const std::string &text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> rec;
    std::string field;
    bool in_quotes = false, field_started = false;
    size_t i = 0;
    const size_t n = text.size();
    auto end_field = [&] {
        rec.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        records.push_back(std::move(rec));
        rec.clear();
    };
    while (i < n) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < n && text[i + 1] == '"') {
                    field += '"';
                    i += 2;
                    continue;
                }
                in_quotes = false;
                ++i;
                continue;
            }
            field += c;
            ++i;
            continue;
        }
        switch (c) {
        case '"':
            if (!field_started && field.empty()) {
                in_quotes = true;
                field_started = true;
            } else {
                field += c; // stray quote inside an unquoted field; keep it
            }
            ++i;
            break;
        case ',':
            end_field();
            ++i;
            break;
        case '\r':
            if (i + 1 < n && text[i + 1] == '\n') ++i;
            [[fallthrough]];
        case '\n':
            end_record();
            ++i;
            break;
        default:
            field += c;
            field_started = true;
            ++i;
        }
    }
    if (in_quotes) throw SchemaError("unterminated quoted field in CSV input");
    if (field_started || !field.empty() || !rec.empty()) end_record();
    return records;
}

Value convert_cell(const std::string &cell, ValueKind kind, size_t row, const std::string &col) {
    if (cell.empty()) return Value::null();
    auto fail = [&]() -> SchemaError {
        return SchemaError("row " + std::to_string(row) + ", column '" + col + "': '" + cell +
                           "' is not a valid " + value_kind_name(kind));
    };
    switch (kind) {
    case ValueKind::Number: {
        auto v = parse_strict_number(cell);
        if (!v) throw fail();
        return Value::number(*v);
    }
    case ValueKind::Timestamp: {
        auto v = parse_iso8601(cell);
        if (!v) throw fail();
        return Value::timestamp(*v);
    }
    case ValueKind::Bool:
        if (cell == "true") return Value::boolean(true);
        if (cell == "false") return Value::boolean(false);
        throw fail();
    case ValueKind::Text:
        return Value::text(cell);
    default:
        throw fail();
    }
}

} // namespace

DataTable parse_csv(const std::string &text, const std::optional<Schema> &hint) {
    auto records = split_records(text);
    if (records.empty()) throw SchemaError("CSV input has no header row");
    const auto &header = records.front();
    const size_t ncols = header.size();
    for (size_t i = 0; i < ncols; ++i) {
        if (header[i].empty()) throw SchemaError("empty column name in CSV header");
        for (size_t j = i + 1; j < ncols; ++j)
            if (header[i] == header[j])
                throw SchemaError("duplicate column name '" + header[i] + "' in CSV header");
    }
    for (size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != ncols)
            throw SchemaError("row " + std::to_string(r) + " has " +
                              std::to_string(records[r].size()) + " fields, expected " +
                              std::to_string(ncols));
    }

    DataTable out;
    out.schema.columns.resize(ncols);
    for (size_t c = 0; c < ncols; ++c) {
        Column &col = out.schema.columns[c];
        col.name = header[c];
        const int h = hint ? hint->find(col.name) : -1;
        if (h >= 0) {
            col.kind = hint->columns[h].kind;
            col.role = hint->columns[h].role;
            continue;
        }
        bool any = false, all_number = true, all_time = true;
        for (size_t r = 1; r < records.size(); ++r) {
            const std::string &cell = records[r][c];
            if (cell.empty()) continue;
            any = true;
            if (all_number && !parse_strict_number(cell)) all_number = false;
            if (all_time && !parse_iso8601(cell)) all_time = false;
            if (!all_number && !all_time) break;
        }
        col.kind = (any && all_number) ? ValueKind::Number
                   : (any && all_time) ? ValueKind::Timestamp
                                       : ValueKind::Text;
        col.role = default_role(col.kind);
    }

    out.rows.reserve(records.size() - 1);
    for (size_t r = 1; r < records.size(); ++r) {
        Row row(ncols);
        for (size_t c = 0; c < ncols; ++c)
            row[c] = convert_cell(records[r][c], out.schema.columns[c].kind, r,
                                  out.schema.columns[c].name);
        out.rows.push_back(std::move(row));
    }
    return out;
}

DataTable load_csv(const std::string &path, const std::optional<Schema> &hint) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_csv(ss.str(), hint);
}

static void append_csv_field(std::string &out, const std::string &s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) {
        out += s;
        return;
    }
    out += '"';
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
}

std::string to_csv(const DataTable &table) {
    std::string out;
    for (size_t c = 0; c < table.num_cols(); ++c) {
        if (c) out += ',';
        append_csv_field(out, table.schema.columns[c].name);
    }
    out += '\n';
    for (const Row &row : table.rows) {
        for (size_t c = 0; c < row.size(); ++c) {
            if (c) out += ',';
            append_csv_field(out, format_value(row[c]));
        }
        out += '\n';
    }
    return out;
}

void write_csv(const DataTable &table, const std::string &path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f << to_csv(table);
    if (!f) throw IoError("failed writing '" + path + "'");
}

} // namespace vizplan
