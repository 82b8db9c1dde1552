#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "gravitykg/errors.hpp"

namespace gravitykg {

// MAE / MAPE / MPE / R-square bundle. MAPE and MPE are percentages computed
// over rows with a non-zero actual; when every actual is zero they are
// absent. mape_skipped counts the excluded rows.
struct RegressionMetrics {
    double mae = 0.0;
    std::optional<double> mape;
    std::optional<double> mpe;
    double r_square = 0.0;
    std::size_t mape_skipped = 0;
};

inline RegressionMetrics regression_metrics(const std::vector<double>& actual,
                                            const std::vector<double>& predicted) {
    if (actual.size() != predicted.size()) throw ShapeError("regression_metrics: length mismatch");
    if (actual.empty()) throw ShapeError("regression_metrics: empty input");

    const std::size_t n = actual.size();
    double abs_sum = 0.0, pct_abs_sum = 0.0, pct_sum = 0.0;
    std::size_t pct_count = 0;
    double mean_actual = 0.0;
    for (double y : actual) mean_actual += y;
    mean_actual /= static_cast<double>(n);

    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double err = actual[i] - predicted[i];
        abs_sum += std::abs(err);
        ss_res += err * err;
        const double dev = actual[i] - mean_actual;
        ss_tot += dev * dev;
        if (actual[i] != 0.0) {
            pct_abs_sum += std::abs(err / actual[i]);
            pct_sum += err / actual[i];
            ++pct_count;
        }
    }

    RegressionMetrics m;
    m.mae = abs_sum / static_cast<double>(n);
    m.mape_skipped = n - pct_count;
    if (pct_count > 0) {
        m.mape = 100.0 * pct_abs_sum / static_cast<double>(pct_count);
        m.mpe = 100.0 * pct_sum / static_cast<double>(pct_count);
    }
    if (ss_tot == 0.0) {
        m.r_square = ss_res == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity();
    } else {
        m.r_square = 1.0 - ss_res / ss_tot;
    }
    return m;
}

// Counts and percentage rates for a thresholded binary predictor. Rates with
// an empty denominator are reported as 0.
struct ConfusionMatrix {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    double tp_rate = 0.0, fp_rate = 0.0, fn_rate = 0.0, tn_rate = 0.0;
    double accuracy = 0.0;
};

inline ConfusionMatrix confusion(const std::vector<int>& actual, const std::vector<double>& scores,
                                 double threshold) {
    if (actual.size() != scores.size()) throw ShapeError("confusion: length mismatch");
    if (actual.empty()) throw ShapeError("confusion: empty input");
    ConfusionMatrix m;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const bool predicted = scores[i] >= threshold;
        if (actual[i] != 0) {
            predicted ? ++m.tp : ++m.fn;
        } else {
            predicted ? ++m.fp : ++m.tn;
        }
    }
    const auto rate = [](std::size_t num, std::size_t denom) {
        return denom == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(denom);
    };
    m.tp_rate = rate(m.tp, m.tp + m.fn);
    m.fn_rate = rate(m.fn, m.tp + m.fn);
    m.fp_rate = rate(m.fp, m.fp + m.tn);
    m.tn_rate = rate(m.tn, m.fp + m.tn);
    m.accuracy = static_cast<double>(m.tp + m.tn) / static_cast<double>(actual.size());
    return m;
}

} // namespace gravitykg
