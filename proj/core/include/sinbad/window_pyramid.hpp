#pragma once

#include "sinbad/element_set.hpp"
#include "sinbad/uea.hpp"

namespace sinbad {

/// Window-pyramid shape: `levels` windows of `window` samples each, the
/// window at scale c (1-based) sampling every c-th time step.
struct PyramidConfig {
    int window = 10;  // tau; must be even
    int levels = 9;   // L

    void validate() const;
    Eigen::Index element_dims(Eigen::Index channels) const {
        return Eigen::Index(levels) * window * channels;
    }
};

/// Zero-pads the series by stride*window/2 rows on each side.
Eigen::MatrixXd pad_series(const TimeSeries& series, int window, int stride);

/**
 * One element per time step t: the concatenation over scales c = 1..L of the
 * window reading rows t, t+c, ..., t+(window-1)c of the scale-c padded series.
 * Inside a window, values are laid out time-major then channel.
 *
 * Result shape: T x (L * window * C).
 */
ElementSet extract_pyramid_elements(const TimeSeries& series, const PyramidConfig& config);

}  // namespace sinbad
