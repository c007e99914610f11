#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace sinbad {

/// A raw multivariate series: rows are time steps, columns are channels.
struct TimeSeries {
    Eigen::MatrixXd values;
    std::string series_id;
    std::string label;

    Eigen::Index length() const { return values.rows(); }
    Eigen::Index channels() const { return values.cols(); }
};

/// Header fields of a UEA/sktime `.ts` file that influence parsing.
struct UeaHeader {
    std::string problem_name;
    std::optional<int> dimensions;  // from @univariate / @dimensions
    std::optional<bool> equal_length;
    bool class_label = false;
    std::vector<std::string> class_values;
};

struct UeaDataset {
    UeaHeader header;
    std::vector<TimeSeries> series;
};

/**
 * Parses the UEA multivariate `.ts` text format.
 *
 * Header lines start with `@`; `#` lines are comments. After `@data`, each
 * line is one series: channels separated by `:`, values by `,`, and the
 * class label last when `@classLabel true`. Missing values (`?`, `NaN`) are
 * accepted only as trailing padding and are trimmed; a missing value inside
 * a channel is an error. All channels of one series must end up with equal
 * length, and with `@equalLength true` all series must share one length.
 *
 * Throws DataError on inconsistent dimension counts, unparseable numbers, a
 * missing `@data` section, or timestamped data (unsupported).
 */
UeaDataset parse_uea_ts(std::istream& in, const std::string& source_name = "<stream>");
UeaDataset parse_uea_ts(const std::filesystem::path& path);

/// Keeps series whose length lies in [min_length, max_length].
std::vector<TimeSeries> filter_by_length(std::vector<TimeSeries> series, Eigen::Index min_length,
                                         Eigen::Index max_length);

/// Distinct labels in first-appearance order.
std::vector<std::string> distinct_labels(const std::vector<TimeSeries>& series);

}  // namespace sinbad
