#ifndef PROXCLUST_IO_HPP
#define PROXCLUST_IO_HPP

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "proxclust/error.hpp"
#include "proxclust/model.hpp"

/**
 * @file io.hpp
 *
 * @brief Dataset CSV files and their JSON header sidecars.
 *
 * A dataset CSV has a header row `x0,...,x{d-1}[,label]` followed by one
 * point per row; reals are written with 17 significant digits so a
 * write/read cycle is bit-exact. The sidecar `<stem>.json` next to the CSV
 * records {n, d, k, seed, generator}.
 */

namespace proxclust::io {

using nlohmann::json;

inline std::string format_real(double x) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

inline std::optional<double> parse_real(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    if (!s.empty() && s.front() == '+') {
        s.remove_prefix(1);
    }
    double value = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return value;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

inline std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
    auto p = csv;
    p.replace_extension(".json");
    return p;
}

inline std::ofstream open_for_write(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw RuntimeFailure("cannot open " + path.string() + " for writing");
    }
    return out;
}

inline void write_json(const std::filesystem::path& path, const json& value) {
    auto out = open_for_write(path);
    out << value.dump(2) << '\n';
}

inline json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open " + path.string());
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

/// Plain numeric CSV of a matrix, no header.
inline void write_matrix_csv(const std::filesystem::path& path, const DenseMatrix& m) {
    auto out = open_for_write(path);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) {
                out << ',';
            }
            out << format_real(m(i, j));
        }
        out << '\n';
    }
}

/// Writes the dataset CSV and its sidecar. `extra` is merged into the sidecar.
inline void write_dataset(const std::filesystem::path& path, const Dataset& data, const json& extra = json::object()) {
    {
        auto out = open_for_write(path);
        for (std::size_t j = 0; j < data.d(); ++j) {
            out << (j ? ",x" : "x") << j;
        }
        if (data.has_truth()) {
            out << ",label";
        }
        out << '\n';
        for (std::size_t i = 0; i < data.n(); ++i) {
            const auto row = data.points().row(i);
            for (std::size_t j = 0; j < row.size(); ++j) {
                if (j) {
                    out << ',';
                }
                out << format_real(row[j]);
            }
            if (data.has_truth()) {
                out << ',' << (*data.truth())[i];
            }
            out << '\n';
        }
        if (!out) {
            throw RuntimeFailure("write failed: " + path.string());
        }
    }
    json header = extra.is_object() ? extra : json::object();
    header["n"] = data.n();
    header["d"] = data.d();
    header["k"] = data.k();
    header["labels"] = data.has_truth();
    write_json(sidecar_path(path), header);
}

/**
 * @brief Reads a dataset CSV.
 *
 * k comes from `k_override`, else the sidecar, else max(label)+1. A label
 * column is recognized from the header row (`label`) or the sidecar's
 * `labels` flag. Files without a header or sidecar are all coordinates.
 */
inline Dataset read_dataset(const std::filesystem::path& path, std::optional<std::size_t> k_override = std::nullopt) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open dataset " + path.string());
    }

    std::optional<json> sidecar;
    if (const auto sp = sidecar_path(path); sp != path && std::filesystem::exists(sp)) {
        sidecar = read_json(sp);
    }

    bool has_labels = sidecar && sidecar->value("labels", false);
    std::vector<double> values;
    Labels labels;
    std::size_t cols = 0;
    std::size_t rows = 0;
    std::string line;
    std::size_t line_no = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const auto fields = split_csv_line(line);
        if (first) {
            first = false;
            if (!parse_real(fields.front())) {
                has_labels = fields.back() == "label";
                continue;
            }
        }
        const std::size_t width = fields.size();
        const std::size_t point_cols = has_labels ? width - 1 : width;
        if (cols == 0) {
            detail::require(point_cols >= 1, path.string() + ": no coordinate columns");
            cols = point_cols;
        }
        detail::require(point_cols == cols, path.string() + ":" + std::to_string(line_no) + ": expected " +
                                                std::to_string(cols) + " coordinates, found " +
                                                std::to_string(point_cols));
        for (std::size_t j = 0; j < point_cols; ++j) {
            const auto v = parse_real(fields[j]);
            detail::require(v.has_value(), path.string() + ":" + std::to_string(line_no) + ": bad number '" +
                                               std::string(fields[j]) + "'");
            values.push_back(*v);
        }
        if (has_labels) {
            const auto v = parse_real(fields.back());
            detail::require(v && *v >= 0 && *v == static_cast<double>(static_cast<std::size_t>(*v)),
                            path.string() + ":" + std::to_string(line_no) + ": bad label");
            labels.push_back(static_cast<std::size_t>(*v));
        }
        ++rows;
    }
    detail::require(rows > 0, path.string() + ": no data rows");

    std::size_t k = 0;
    if (k_override) {
        k = *k_override;
    } else if (sidecar && sidecar->contains("k")) {
        k = sidecar->at("k").get<std::size_t>();
    } else if (has_labels) {
        k = *std::max_element(labels.begin(), labels.end()) + 1;
    } else {
        throw ValidationError(path.string() + ": cluster count unknown (no sidecar, no labels); pass k explicitly");
    }

    DenseMatrix points(rows, cols, std::move(values));
    if (has_labels) {
        return Dataset(std::move(points), k, std::move(labels));
    }
    return Dataset(std::move(points), k);
}

/// (index, label) rows.
inline void write_assignment_csv(const std::filesystem::path& path, const Labels& labels,
                                 const std::vector<std::size_t>* indices = nullptr) {
    auto out = open_for_write(path);
    out << "index,label\n";
    for (std::size_t i = 0; i < labels.size(); ++i) {
        out << (indices ? (*indices)[i] : i) << ',' << labels[i] << '\n';
    }
}

} // namespace proxclust::io

#endif
