#include "idsbench/table.hpp"

#include <algorithm>
#include <unordered_set>

#include "idsbench/error.hpp"

namespace idsbench {

ColumnarTable::ColumnarTable(std::vector<Column> columns, std::vector<Label> labels)
    : columns_(std::move(columns)), labels_(std::move(labels)) {
    std::unordered_set<std::string> seen;
    for (const auto& c : columns_) {
        if (c.values.size() != labels_.size()) {
            throw ContractViolation("column '" + c.name + "' has " + std::to_string(c.values.size()) +
                                    " values, expected " + std::to_string(labels_.size()));
        }
        if (!seen.insert(c.name).second) throw ContractViolation("duplicate column name '" + c.name + "'");
    }
    for (Label l : labels_) {
        if (l > 1) throw ContractViolation("labels must be 0 or 1");
    }
}

std::vector<std::string> ColumnarTable::column_names() const {
    std::vector<std::string> names;
    names.reserve(columns_.size());
    for (const auto& c : columns_) names.push_back(c.name);
    return names;
}

std::optional<std::size_t> ColumnarTable::find_column(std::string_view name) const {
    for (std::size_t j = 0; j < columns_.size(); ++j) {
        if (columns_[j].name == name) return j;
    }
    return std::nullopt;
}

std::vector<double> ColumnarTable::row(std::size_t i) const {
    std::vector<double> out(columns_.size());
    for (std::size_t j = 0; j < columns_.size(); ++j) out[j] = columns_[j].values[i];
    return out;
}

std::size_t ColumnarTable::count_label(Label l) const {
    return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), l));
}

ColumnarTable ColumnarTable::select_rows(std::span<const std::size_t> rows) const {
    ColumnarTable out;
    out.columns_.reserve(columns_.size());
    for (const auto& c : columns_) {
        Column nc{c.name, {}};
        nc.values.reserve(rows.size());
        for (std::size_t r : rows) nc.values.push_back(c.values.at(r));
        out.columns_.push_back(std::move(nc));
    }
    out.labels_.reserve(rows.size());
    for (std::size_t r : rows) out.labels_.push_back(labels_.at(r));
    return out;
}

ColumnarTable ColumnarTable::select_columns(std::span<const std::size_t> cols) const {
    ColumnarTable out;
    for (std::size_t j : cols) out.columns_.push_back(columns_.at(j));
    out.labels_ = labels_;
    std::unordered_set<std::string> seen;
    for (const auto& c : out.columns_) {
        if (!seen.insert(c.name).second) throw ContractViolation("duplicate column name '" + c.name + "'");
    }
    return out;
}

ColumnarTable ColumnarTable::drop_columns(std::span<const std::size_t> cols) const {
    std::vector<bool> dropped(columns_.size(), false);
    for (std::size_t j : cols) dropped.at(j) = true;
    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < columns_.size(); ++j) {
        if (!dropped[j]) keep.push_back(j);
    }
    return select_columns(keep);
}

std::vector<double> to_row_major(const ColumnarTable& table) {
    const std::size_t n = table.n_rows();
    const std::size_t d = table.n_features();
    std::vector<double> out(n * d);
    for (std::size_t j = 0; j < d; ++j) {
        auto col = table.values(j);
        for (std::size_t i = 0; i < n; ++i) out[i * d + j] = col[i];
    }
    return out;
}

}  // namespace idsbench
