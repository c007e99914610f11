#include "sinbad/uea.hpp"

#include "sinbad/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string_view>

namespace sinbad {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            parts.push_back(s.substr(start));
            return parts;
        }
        parts.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> parts;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        const auto start = i;
        while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        if (i > start) parts.push_back(s.substr(start, i - start));
    }
    return parts;
}

bool parse_bool(std::string_view token, const std::string& where) {
    const auto t = lower(token);
    if (t == "true") return true;
    if (t == "false") return false;
    throw DataError(where + ": expected true/false, got '" + std::string(token) + "'");
}

bool is_missing(std::string_view token) {
    return token == "?" || lower(token) == "nan";
}

// Missing values are returned as NaN.
double parse_value(std::string_view token, const std::string& where) {
    token = trim(token);
    if (is_missing(token)) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    if (!token.empty() && token.front() == '+') token.remove_prefix(1);
    double value = 0.0;
    const auto* end = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(token.data(), end, value);
    if (token.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
        throw DataError(where + ": unparseable numeric token '" + std::string(token) + "'");
    }
    return value;
}

// Trailing missing values are padding; interior ones are rejected.
std::vector<double> parse_channel(std::string_view field, const std::string& where) {
    std::vector<double> values;
    for (auto token : split(field, ',')) {
        values.push_back(parse_value(token, where));
    }
    while (!values.empty() && std::isnan(values.back())) values.pop_back();
    if (values.empty()) {
        throw DataError(where + ": empty channel");
    }
    if (std::any_of(values.begin(), values.end(), [](double v) { return std::isnan(v); })) {
        throw DataError(where + ": missing value inside a channel");
    }
    return values;
}

}  // namespace

UeaDataset parse_uea_ts(std::istream& in, const std::string& source_name) {
    UeaDataset dataset;
    auto& header = dataset.header;
    bool in_data = false;
    std::optional<int> channels = header.dimensions;
    std::optional<Eigen::Index> common_length;

    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const std::string where = source_name + ":" + std::to_string(line_no);

        if (!in_data) {
            if (line.front() != '@') {
                throw DataError(where + ": data before @data section");
            }
            const auto words = split_ws(line);
            const auto key = lower(words.front());
            auto arg = [&](std::size_t i) -> std::string_view {
                if (words.size() <= i) throw DataError(where + ": " + key + " needs an argument");
                return words[i];
            };
            if (key == "@problemname") {
                header.problem_name = std::string(arg(1));
            } else if (key == "@timestamps") {
                if (parse_bool(arg(1), where)) {
                    throw DataError(where + ": timestamped series are not supported");
                }
            } else if (key == "@univariate") {
                if (parse_bool(arg(1), where)) header.dimensions = 1;
            } else if (key == "@dimensions") {
                int dims = 0;
                const auto token = arg(1);
                auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), dims);
                if (ec != std::errc() || ptr != token.data() + token.size() || dims < 1) {
                    throw DataError(where + ": @dimensions must be a positive integer");
                }
                header.dimensions = dims;
            } else if (key == "@equallength") {
                header.equal_length = parse_bool(arg(1), where);
            } else if (key == "@classlabel") {
                header.class_label = parse_bool(arg(1), where);
                header.class_values.assign(words.begin() + 2, words.end());
            } else if (key == "@data") {
                in_data = true;
                channels = header.dimensions;
            }
            // @missing, @seriesLength, @targetLabel and unknown tags carry no parsing rules.
            continue;
        }

        auto fields = split(line, ':');
        std::string label;
        if (header.class_label) {
            if (fields.size() < 2) throw DataError(where + ": missing class label");
            label = std::string(trim(fields.back()));
            fields.pop_back();
        }
        if (!channels) {
            channels = static_cast<int>(fields.size());
        } else if (static_cast<int>(fields.size()) != *channels) {
            throw DataError(where + ": inconsistent dimension count: expected " +
                            std::to_string(*channels) + ", found " + std::to_string(fields.size()));
        }

        std::vector<std::vector<double>> columns;
        columns.reserve(fields.size());
        for (auto field : fields) {
            columns.push_back(parse_channel(field, where));
        }
        const auto length = static_cast<Eigen::Index>(columns.front().size());
        for (const auto& column : columns) {
            if (static_cast<Eigen::Index>(column.size()) != length) {
                throw DataError(where + ": channels of one series differ in length");
            }
        }
        if (header.equal_length.value_or(false)) {
            if (common_length && *common_length != length) {
                throw DataError(where + ": series length " + std::to_string(length) +
                                " differs from " + std::to_string(*common_length) +
                                " under @equalLength true");
            }
            common_length = length;
        }

        TimeSeries series;
        series.values.resize(length, static_cast<Eigen::Index>(columns.size()));
        for (std::size_t c = 0; c < columns.size(); ++c) {
            for (Eigen::Index t = 0; t < length; ++t) {
                series.values(t, static_cast<Eigen::Index>(c)) = columns[c][std::size_t(t)];
            }
        }
        series.series_id = std::to_string(dataset.series.size());
        series.label = std::move(label);
        dataset.series.push_back(std::move(series));
    }
    if (!in_data) {
        throw DataError(source_name + ": missing @data section");
    }
    return dataset;
}

UeaDataset parse_uea_ts(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    return parse_uea_ts(in, path.filename().string());
}

std::vector<TimeSeries> filter_by_length(std::vector<TimeSeries> series, Eigen::Index min_length,
                                         Eigen::Index max_length) {
    std::erase_if(series, [&](const TimeSeries& s) {
        return s.length() < min_length || s.length() > max_length;
    });
    return series;
}

std::vector<std::string> distinct_labels(const std::vector<TimeSeries>& series) {
    std::vector<std::string> labels;
    for (const auto& s : series) {
        if (std::find(labels.begin(), labels.end(), s.label) == labels.end()) {
            labels.push_back(s.label);
        }
    }
    return labels;
}

}  // namespace sinbad
