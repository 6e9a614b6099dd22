#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace idsbench {

// 0 = benign, 1 = attack.
using Label = std::uint8_t;

struct Column {
    std::string name;
    std::vector<double> values;

    bool operator==(const Column&) const = default;
};

// Column-major feature matrix with a parallel binary label vector.
class ColumnarTable {
public:
    ColumnarTable() = default;
    // Throws ContractViolation when column lengths disagree with labels or names repeat.
    ColumnarTable(std::vector<Column> columns, std::vector<Label> labels);

    std::size_t n_rows() const noexcept { return labels_.size(); }
    std::size_t n_features() const noexcept { return columns_.size(); }
    bool empty() const noexcept { return labels_.empty(); }

    const std::vector<Column>& columns() const noexcept { return columns_; }
    const Column& column(std::size_t j) const { return columns_.at(j); }
    std::span<const double> values(std::size_t j) const { return columns_.at(j).values; }
    std::span<const Label> labels() const noexcept { return labels_; }
    std::vector<std::string> column_names() const;
    std::optional<std::size_t> find_column(std::string_view name) const;

    double at(std::size_t row, std::size_t col) const { return columns_[col].values[row]; }

    // Row-major copy of one row.
    std::vector<double> row(std::size_t i) const;

    std::size_t count_label(Label l) const;

    ColumnarTable select_rows(std::span<const std::size_t> rows) const;
    ColumnarTable select_columns(std::span<const std::size_t> cols) const;
    ColumnarTable drop_columns(std::span<const std::size_t> cols) const;

    bool operator==(const ColumnarTable&) const = default;

private:
    std::vector<Column> columns_;
    std::vector<Label> labels_;
};

// Row-major dense copy of all features, n_rows x n_features.
std::vector<double> to_row_major(const ColumnarTable& table);

}  // namespace idsbench
