#include "idsbench/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include "idsbench/error.hpp"

namespace idsbench {

namespace {

std::string_view trim(std::string_view s) {
    const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

enum class CellStatus { ok, nonfinite, malformed };

CellStatus parse_number(std::string_view text, double& out) {
    text = trim(text);
    if (text.empty()) return CellStatus::malformed;
    if (text.front() == '+') text.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    if (ec == std::errc::result_out_of_range) {
        return CellStatus::nonfinite;
    }
    if (ec != std::errc() || ptr != text.data() + text.size()) return CellStatus::malformed;
    if (!std::isfinite(out)) return CellStatus::nonfinite;
    return CellStatus::ok;
}

bool parse_uint(std::string_view s, int& out) {
    if (s.empty()) return false;
    out = 0;
    for (char c : s) {
        if (c < '0' || c > '9') return false;
        out = out * 10 + (c - '0');
    }
    return true;
}

struct Fields {
    int year, month, day, hour, minute, second;
};

std::optional<Fields> split_timestamp(std::string_view raw, TimestampFormat format) {
    raw = trim(raw);
    std::string_view date_part;
    std::string_view time_part;
    const auto sep = raw.find_first_of(" T");
    if (sep == std::string_view::npos) {
        date_part = raw;
    } else {
        date_part = raw.substr(0, sep);
        time_part = trim(raw.substr(sep + 1));
    }

    const char date_sep = format == TimestampFormat::iso8601 ? '-' : '/';
    std::vector<std::string_view> d;
    for (std::size_t start = 0;;) {
        const auto pos = date_part.find(date_sep, start);
        d.push_back(date_part.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    if (d.size() != 3) return std::nullopt;

    Fields f{};
    bool ok = true;
    switch (format) {
        case TimestampFormat::day_first:
            ok = parse_uint(d[0], f.day) && parse_uint(d[1], f.month) && parse_uint(d[2], f.year);
            break;
        case TimestampFormat::month_first:
            ok = parse_uint(d[0], f.month) && parse_uint(d[1], f.day) && parse_uint(d[2], f.year);
            break;
        case TimestampFormat::iso8601:
            ok = parse_uint(d[0], f.year) && parse_uint(d[1], f.month) && parse_uint(d[2], f.day);
            break;
    }
    if (!ok) return std::nullopt;

    if (!time_part.empty()) {
        if (time_part.back() == 'Z') time_part.remove_suffix(1);
        std::vector<std::string_view> t;
        for (std::size_t start = 0;;) {
            const auto pos = time_part.find(':', start);
            t.push_back(time_part.substr(start, pos - start));
            if (pos == std::string_view::npos) break;
            start = pos + 1;
        }
        if (t.size() < 2 || t.size() > 3) return std::nullopt;
        if (!parse_uint(t[0], f.hour) || !parse_uint(t[1], f.minute)) return std::nullopt;
        if (t.size() == 3 && !parse_uint(t[2], f.second)) return std::nullopt;
    }
    return f;
}

}  // namespace

DatasetPreset parse_dataset_preset(std::string_view name) {
    if (name == "cicids2018") return DatasetPreset::cicids2018;
    if (name == "kdd99") return DatasetPreset::kdd99;
    if (name == "custom") return DatasetPreset::custom;
    throw ConfigError("unknown dataset preset '" + std::string(name) + "' (expected cicids2018, kdd99 or custom)");
}

std::string_view to_string(DatasetPreset preset) {
    switch (preset) {
        case DatasetPreset::cicids2018: return "cicids2018";
        case DatasetPreset::kdd99: return "kdd99";
        case DatasetPreset::custom: return "custom";
    }
    return "custom";
}

TimestampFormat parse_timestamp_format(std::string_view name) {
    if (name == "day_first") return TimestampFormat::day_first;
    if (name == "month_first") return TimestampFormat::month_first;
    if (name == "iso8601") return TimestampFormat::iso8601;
    throw ConfigError("unknown timestamp format '" + std::string(name) + "'");
}

void Schema::validate() const {
    if (label_column.empty()) throw ConfigError("schema: label column name is empty");
    if (std::find(drop_columns.begin(), drop_columns.end(), label_column) != drop_columns.end()) {
        throw ConfigError("schema: label column '" + label_column + "' is listed in drop_columns");
    }
    std::unordered_set<std::string> seen;
    for (const auto& c : column_names) {
        if (!seen.insert(c).second) throw ConfigError("schema: duplicate column name '" + c + "'");
    }
}

const std::vector<std::string>& kdd99_header() {
    static const std::vector<std::string> header = {
        "duration", "protocol_type", "service", "flag", "src_bytes", "dst_bytes", "land",
        "wrong_fragment", "urgent", "hot", "num_failed_logins", "logged_in", "num_compromised",
        "root_shell", "su_attempted", "num_root", "num_file_creations", "num_shells",
        "num_access_files", "num_outbound_cmds", "is_host_login", "is_guest_login", "count",
        "srv_count", "serror_rate", "srv_serror_rate", "rerror_rate", "srv_rerror_rate",
        "same_srv_rate", "diff_srv_rate", "srv_diff_host_rate", "dst_host_count",
        "dst_host_srv_count", "dst_host_same_srv_rate", "dst_host_diff_srv_rate",
        "dst_host_same_src_port_rate", "dst_host_srv_diff_host_rate", "dst_host_serror_rate",
        "dst_host_srv_serror_rate", "dst_host_rerror_rate", "dst_host_srv_rerror_rate", "Label"};
    return header;
}

Schema preset_schema(DatasetPreset preset) {
    Schema s;
    switch (preset) {
        case DatasetPreset::kdd99:
            s.column_names = kdd99_header();
            // Symbolic attributes; no one-hot encoding is performed.
            s.drop_columns = {"protocol_type", "service", "flag"};
            break;
        case DatasetPreset::cicids2018:
            s.timestamp_columns = {"Timestamp"};
            s.timestamp_format = TimestampFormat::day_first;
            // Only present in the 02-20-2018 capture.
            s.drop_columns = {"Flow ID", "Src IP", "Src Port", "Dst IP"};
            break;
        case DatasetPreset::custom:
            break;
    }
    return s;
}

std::optional<double> convert_timestamp(std::string_view raw, TimestampFormat format) {
    const auto f = split_timestamp(raw, format);
    if (!f) return std::nullopt;
    if (f->month < 1 || f->month > 12 || f->day < 1 || f->hour > 23 || f->minute > 59 || f->second > 60) {
        return std::nullopt;
    }
    using namespace std::chrono;
    const year_month_day ymd{year{f->year}, month{static_cast<unsigned>(f->month)},
                             day{static_cast<unsigned>(f->day)}};
    if (!ymd.ok()) return std::nullopt;
    const auto days = sys_days{ymd}.time_since_epoch().count();
    return static_cast<double>(days) * 86400.0 + f->hour * 3600.0 + f->minute * 60.0 + f->second;
}

std::vector<Label> binarize_labels(std::span<const std::string> raw_labels,
                                   const std::set<std::string, std::less<>>& benign_tokens) {
    std::vector<Label> out;
    out.reserve(raw_labels.size());
    for (const auto& token : raw_labels) {
        out.push_back(benign_tokens.contains(trim(token)) ? Label{0} : Label{1});
    }
    return out;
}

std::vector<std::string> split_csv_record(std::string_view line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r' && c != '\n') {
            cur.push_back(c);
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

bool read_csv_record(std::istream& in, std::string& record) {
    record.clear();
    std::string line;
    if (!std::getline(in, line)) return false;
    record = std::move(line);
    // An odd number of quotes means a quoted field continues on the next line.
    auto open_quotes = [](const std::string& s) { return std::count(s.begin(), s.end(), '"') % 2 == 1; };
    while (open_quotes(record) && std::getline(in, line)) {
        record.push_back('\n');
        record += line;
    }
    return true;
}

LoadedTable load_csv(const std::filesystem::path& path, const Schema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    return load_csv(in, schema, path.string());
}

LoadedTable load_csv(std::istream& in, const Schema& schema, const std::string& source_name) {
    schema.validate();

    std::string record;
    if (!read_csv_record(in, record)) throw EmptyDatasetError(source_name + ": missing header row");
    if (record.size() >= 3 && record.compare(0, 3, "\xEF\xBB\xBF") == 0) record.erase(0, 3);
    std::vector<std::string> header = split_csv_record(record);
    for (auto& h : header) h = std::string(trim(h));

    std::unordered_map<std::string, std::size_t> header_index;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (!header_index.emplace(header[j], j).second) {
            throw DataError(source_name + ": duplicate header column '" + header[j] + "'");
        }
    }
    const auto label_it = header_index.find(schema.label_column);
    if (label_it == header_index.end()) {
        throw ConfigError(source_name + ": label column '" + schema.label_column + "' not in header");
    }
    for (const auto& expected : schema.column_names) {
        if (!header_index.contains(expected)) {
            throw DataError(source_name + ": header lacks expected column '" + expected + "'");
        }
    }
    const std::size_t label_idx = label_it->second;

    LoadedTable result;
    IngestReport& report = result.report;

    std::unordered_set<std::string> drop(schema.drop_columns.begin(), schema.drop_columns.end());
    std::unordered_set<std::string> ts(schema.timestamp_columns.begin(), schema.timestamp_columns.end());

    struct Source {
        std::size_t field;
        bool timestamp;
    };
    std::vector<Source> sources;
    std::vector<Column> columns;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (j == label_idx) continue;
        if (drop.contains(header[j])) {
            report.columns_dropped.push_back(header[j]);
            continue;
        }
        sources.push_back({j, ts.contains(header[j])});
        columns.push_back({header[j], {}});
    }

    std::vector<Label> labels;
    std::vector<double> row(sources.size());
    while (read_csv_record(in, record)) {
        if (trim(record).empty()) continue;
        const auto fields = split_csv_record(record);

        std::string_view label_token;
        if (fields.size() > label_idx) label_token = trim(fields[label_idx]);
        if (!schema.label_filter.empty() && fields.size() == header.size() &&
            !schema.benign_tokens.contains(label_token) && !schema.label_filter.contains(label_token)) {
            ++report.rows_skipped_slice;
            continue;
        }
        ++report.rows_read;
        if (fields.size() != header.size() || label_token.empty()) {
            ++report.rows_dropped_malformed;
            continue;
        }

        bool malformed = false;
        bool nonfinite = false;
        for (std::size_t k = 0; k < sources.size(); ++k) {
            const std::string& cell = fields[sources[k].field];
            if (sources[k].timestamp) {
                const auto t = convert_timestamp(cell, schema.timestamp_format);
                if (!t) {
                    malformed = true;
                    break;
                }
                row[k] = *t;
                continue;
            }
            const CellStatus st = parse_number(cell, row[k]);
            if (st == CellStatus::malformed) {
                malformed = true;
                break;
            }
            if (st == CellStatus::nonfinite) nonfinite = true;
        }
        if (malformed) {
            ++report.rows_dropped_malformed;
            continue;
        }
        if (nonfinite) {
            ++report.rows_dropped_nonfinite;
            continue;
        }
        for (std::size_t k = 0; k < sources.size(); ++k) columns[k].values.push_back(row[k]);
        labels.push_back(schema.benign_tokens.contains(label_token) ? Label{0} : Label{1});
        ++report.label_histogram[std::string(label_token)];
    }
    if (in.bad()) throw DataError(source_name + ": read error");
    if (labels.empty()) throw EmptyDatasetError(source_name + ": no rows retained after cleaning");

    if (schema.drop_constant_columns && labels.size() >= 2) {
        std::vector<Column> kept;
        for (auto& c : columns) {
            const auto [lo, hi] = std::minmax_element(c.values.begin(), c.values.end());
            if (*lo == *hi) {
                report.columns_dropped.push_back(c.name);
            } else {
                kept.push_back(std::move(c));
            }
        }
        columns = std::move(kept);
    }

    const std::size_t attacks = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), Label{1}));
    report.single_class = attacks == 0 || attacks == labels.size();
    result.table = ColumnarTable(std::move(columns), std::move(labels));
    return result;
}

}  // namespace idsbench
