#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "gravitykg/errors.hpp"
#include "gravitykg/rng.hpp"

namespace gravitykg::cluster {

enum class Method { KMeans, Agglomerative, DBSCAN, GaussianMixture, MeanShift };

inline std::string to_string(Method m) {
    switch (m) {
        case Method::KMeans: return "kmeans";
        case Method::Agglomerative: return "agglomerative";
        case Method::DBSCAN: return "dbscan";
        case Method::GaussianMixture: return "gmm";
        case Method::MeanShift: return "meanshift";
    }
    return "?";
}

inline Method method_from_string(const std::string& s) {
    if (s == "kmeans") return Method::KMeans;
    if (s == "agglomerative") return Method::Agglomerative;
    if (s == "dbscan") return Method::DBSCAN;
    if (s == "gmm") return Method::GaussianMixture;
    if (s == "meanshift") return Method::MeanShift;
    throw ConfigError("unknown clustering method: " + s);
}

// Cluster ids are canonical: ordinal 0 has the lowest member mean. Noise
// indices (DBSCAN only) carry assignment -1 and are listed separately.
struct ClusteringResult {
    std::vector<int> assignments; // score index -> cluster id, -1 for noise
    std::vector<double> centers;  // member means, strictly ascending
    Method method = Method::KMeans;
    std::size_t k = 0;
    std::vector<std::size_t> noise_indices;
};

namespace detail {

inline std::size_t count_distinct(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    return std::unique(values.begin(), values.end()) - values.begin();
}

// Relabels raw cluster ids so ordinals ascend with the member mean and
// recomputes centers as member means. Raw id -1 marks noise.
inline ClusteringResult canonicalize(const std::vector<double>& scores, const std::vector<int>& raw,
                                     Method method) {
    int max_id = -1;
    for (int id : raw) max_id = std::max(max_id, id);
    std::vector<double> sum(max_id + 1, 0.0);
    std::vector<std::size_t> count(max_id + 1, 0);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] < 0) continue;
        sum[raw[i]] += scores[i];
        ++count[raw[i]];
    }
    std::vector<int> ids;
    for (int id = 0; id <= max_id; ++id)
        if (count[id] > 0) ids.push_back(id);
    std::sort(ids.begin(), ids.end(),
              [&](int a, int b) { return sum[a] / count[a] < sum[b] / count[b]; });

    std::vector<int> remap(max_id + 1, -1);
    ClusteringResult result;
    result.method = method;
    result.k = ids.size();
    result.centers.reserve(ids.size());
    for (std::size_t ordinal = 0; ordinal < ids.size(); ++ordinal) {
        remap[ids[ordinal]] = static_cast<int>(ordinal);
        result.centers.push_back(sum[ids[ordinal]] / count[ids[ordinal]]);
    }
    result.assignments.resize(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        result.assignments[i] = raw[i] < 0 ? -1 : remap[raw[i]];
        if (raw[i] < 0) result.noise_indices.push_back(i);
    }
    return result;
}

// k-means++ D^2 seeding over the raw values.
inline std::vector<double> kmeanspp_seed(const std::vector<double>& values, std::size_t k, Rng& rng) {
    std::vector<double> centers;
    centers.reserve(k);
    centers.push_back(values[rng.uniform_index(values.size())]);
    std::vector<double> d2(values.size());
    while (centers.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (double c : centers) best = std::min(best, (values[i] - c) * (values[i] - c));
            d2[i] = best;
            total += best;
        }
        const double r = rng.uniform() * total;
        double acc = 0.0;
        std::size_t chosen = values.size() - 1;
        for (std::size_t i = 0; i < values.size(); ++i) {
            acc += d2[i];
            if (acc > r && d2[i] > 0.0) {
                chosen = i;
                break;
            }
        }
        centers.push_back(values[chosen]);
    }
    return centers;
}

inline int nearest_center(double x, const std::vector<double>& centers) {
    int best = 0;
    double best_d = std::abs(x - centers[0]);
    for (std::size_t j = 1; j < centers.size(); ++j) {
        const double d = std::abs(x - centers[j]);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(j);
        }
    }
    return best;
}

} // namespace detail

// Lloyd's algorithm with k-means++ seeding. Converged when the max center
// shift drops below tol. Assignment is a function of the score value alone,
// so permuting the input permutes the assignments identically.
inline ClusteringResult kmeans_1d(const std::vector<double>& scores, std::size_t k, std::uint64_t seed,
                                  std::size_t max_iter = 100, double tol = 1e-9) {
    if (scores.empty() || k < 1 || k > detail::count_distinct(scores))
        throw InfeasibleK("kmeans: k=" + std::to_string(k) + " infeasible for " +
                          std::to_string(scores.size()) + " scores");

    std::vector<double> values = scores;
    std::sort(values.begin(), values.end());
    Rng rng(seed);
    std::vector<double> centers = detail::kmeanspp_seed(values, k, rng);
    std::sort(centers.begin(), centers.end());

    std::vector<int> assign(values.size(), 0);
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        for (std::size_t i = 0; i < values.size(); ++i) assign[i] = detail::nearest_center(values[i], centers);
        std::vector<double> sum(k, 0.0);
        std::vector<std::size_t> count(k, 0);
        for (std::size_t i = 0; i < values.size(); ++i) {
            sum[assign[i]] += values[i];
            ++count[assign[i]];
        }
        // Reseat an emptied center at the point farthest from its own center.
        for (std::size_t j = 0; j < k; ++j) {
            if (count[j] > 0) continue;
            std::size_t far = 0;
            double far_d = -1.0;
            for (std::size_t i = 0; i < values.size(); ++i) {
                const double d = std::abs(values[i] - centers[assign[i]]);
                if (d > far_d && count[assign[i]] > 1) {
                    far_d = d;
                    far = i;
                }
            }
            sum[assign[far]] -= values[far];
            --count[assign[far]];
            assign[far] = static_cast<int>(j);
            sum[j] = values[far];
            count[j] = 1;
        }
        double shift = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            const double next = sum[j] / static_cast<double>(count[j]);
            shift = std::max(shift, std::abs(next - centers[j]));
            centers[j] = next;
        }
        std::sort(centers.begin(), centers.end());
        if (shift < tol) break;
    }

    std::vector<int> raw(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) raw[i] = detail::nearest_center(scores[i], centers);
    return detail::canonicalize(scores, raw, Method::KMeans);
}

// Single-linkage agglomeration. In one dimension merging the smallest gaps
// first leaves cluster boundaries exactly at the k-1 largest gaps of the
// sorted scores, which is what is computed here.
inline ClusteringResult agglomerative_1d(const std::vector<double>& scores, std::size_t k) {
    if (scores.empty() || k < 1 || k > detail::count_distinct(scores))
        throw InfeasibleK("agglomerative: k=" + std::to_string(k) + " infeasible for " +
                          std::to_string(scores.size()) + " scores");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // gap i sits between sorted positions i and i+1
    std::vector<std::size_t> gap_pos(scores.size() > 0 ? scores.size() - 1 : 0);
    std::iota(gap_pos.begin(), gap_pos.end(), 0);
    std::stable_sort(gap_pos.begin(), gap_pos.end(), [&](std::size_t a, std::size_t b) {
        return scores[order[a + 1]] - scores[order[a]] > scores[order[b + 1]] - scores[order[b]];
    });

    std::vector<bool> boundary(gap_pos.size(), false);
    for (std::size_t i = 0; i + 1 < k; ++i) boundary[gap_pos[i]] = true;

    std::vector<int> raw(scores.size());
    int cluster = 0;
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        raw[order[pos]] = cluster;
        if (pos < boundary.size() && boundary[pos]) ++cluster;
    }
    return detail::canonicalize(scores, raw, Method::Agglomerative);
}

// Classic core/border/noise semantics on the metric |a-b|. A point is core
// when its eps-neighborhood (self included) holds at least min_pts points;
// border points join the cluster of their nearest core.
inline ClusteringResult dbscan_1d(const std::vector<double>& scores, double eps, std::size_t min_pts) {
    if (eps <= 0.0) throw ConfigError("dbscan: eps must be > 0");
    if (min_pts < 1) throw ConfigError("dbscan: min_pts must be >= 1");
    if (scores.empty()) return ClusteringResult{{}, {}, Method::DBSCAN, 0, {}};

    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = scores[order[i]];

    std::vector<bool> core(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        const auto lo = std::lower_bound(v.begin(), v.end(), v[i] - eps);
        const auto hi = std::upper_bound(v.begin(), v.end(), v[i] + eps);
        core[i] = static_cast<std::size_t>(hi - lo) >= min_pts;
    }

    // Runs of core points whose consecutive gaps are <= eps form clusters.
    std::vector<int> cluster_of(n, -1);
    int cluster = -1;
    double prev_core = 0.0;
    bool have_prev = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (!core[i]) continue;
        if (!have_prev || v[i] - prev_core > eps) ++cluster;
        cluster_of[i] = cluster;
        prev_core = v[i];
        have_prev = true;
    }
    // Border points: within eps of a core point, take the nearest one.
    for (std::size_t i = 0; i < n; ++i) {
        if (core[i]) continue;
        double best_d = std::numeric_limits<double>::infinity();
        int best_cluster = -1;
        for (std::size_t j = i; j-- > 0;) {
            if (v[i] - v[j] > eps) break;
            if (core[j]) {
                best_d = v[i] - v[j];
                best_cluster = cluster_of[j];
                break;
            }
        }
        for (std::size_t j = i + 1; j < n; ++j) {
            if (v[j] - v[i] > eps) break;
            if (core[j]) {
                if (v[j] - v[i] < best_d) best_cluster = cluster_of[j];
                break;
            }
        }
        cluster_of[i] = best_cluster;
    }

    std::vector<int> raw(n, -1);
    for (std::size_t i = 0; i < n; ++i) raw[order[i]] = cluster_of[i];
    return detail::canonicalize(scores, raw, Method::DBSCAN);
}

// Extra diagnostics for the Gaussian mixture fit.
struct GmmInfo {
    std::vector<double> weights;
    std::vector<double> means;
    std::vector<double> variances;
    std::vector<double> loglik_trace; // one entry per EM iteration
};

// EM on univariate Gaussians with hard assignment by final responsibility.
// Variances are floored at 1e-9 to keep point-mass components finite.
inline ClusteringResult gmm_1d(const std::vector<double>& scores, std::size_t k, std::uint64_t seed,
                               std::size_t max_iter = 200, double tol = 1e-8, GmmInfo* info = nullptr) {
    if (scores.empty() || k < 1 || k > detail::count_distinct(scores))
        throw InfeasibleK("gmm: k=" + std::to_string(k) + " infeasible for " +
                          std::to_string(scores.size()) + " scores");
    constexpr double kVarFloor = 1e-9;
    const std::size_t n = scores.size();

    double mean_all = 0.0;
    for (double x : scores) mean_all += x;
    mean_all /= static_cast<double>(n);
    double var_all = 0.0;
    for (double x : scores) var_all += (x - mean_all) * (x - mean_all);
    var_all = std::max(var_all / static_cast<double>(n), kVarFloor);

    std::vector<double> values = scores;
    std::sort(values.begin(), values.end());
    Rng rng(seed);
    std::vector<double> mu = detail::kmeanspp_seed(values, k, rng);
    std::sort(mu.begin(), mu.end());
    std::vector<double> var(k, var_all), weight(k, 1.0 / static_cast<double>(k));

    std::vector<std::vector<double>> resp(n, std::vector<double>(k, 0.0));
    double prev_ll = -std::numeric_limits<double>::infinity();
    std::vector<double> ll_trace;
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        // E step in log space
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double max_term = -std::numeric_limits<double>::infinity();
            std::vector<double> term(k);
            for (std::size_t j = 0; j < k; ++j) {
                const double d = scores[i] - mu[j];
                term[j] = std::log(weight[j]) - 0.5 * std::log(2.0 * 3.141592653589793 * var[j]) -
                          d * d / (2.0 * var[j]);
                max_term = std::max(max_term, term[j]);
            }
            double denom = 0.0;
            for (std::size_t j = 0; j < k; ++j) denom += std::exp(term[j] - max_term);
            ll += max_term + std::log(denom);
            for (std::size_t j = 0; j < k; ++j) resp[i][j] = std::exp(term[j] - max_term) / denom;
        }
        ll_trace.push_back(ll);
        // M step
        for (std::size_t j = 0; j < k; ++j) {
            double nj = 0.0, sj = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                nj += resp[i][j];
                sj += resp[i][j] * scores[i];
            }
            if (nj <= 1e-12) continue; // starved component keeps its params
            const double m = sj / nj;
            double vj = 0.0;
            for (std::size_t i = 0; i < n; ++i) vj += resp[i][j] * (scores[i] - m) * (scores[i] - m);
            mu[j] = m;
            var[j] = std::max(vj / nj, kVarFloor);
            weight[j] = nj / static_cast<double>(n);
        }
        if (ll - prev_ll < tol && iter > 0) break;
        prev_ll = ll;
    }

    std::vector<int> raw(n);
    for (std::size_t i = 0; i < n; ++i) {
        int best = 0;
        for (std::size_t j = 1; j < k; ++j)
            if (resp[i][j] > resp[i][best]) best = static_cast<int>(j);
        raw[i] = best;
    }
    if (info) {
        info->weights = weight;
        info->means = mu;
        info->variances = var;
        info->loglik_trace = std::move(ll_trace);
    }
    return detail::canonicalize(scores, raw, Method::GaussianMixture);
}

// Flat-kernel mean shift; modes closer than bandwidth/2 merge into one
// cluster. The cluster count is determined by the data.
inline ClusteringResult mean_shift_1d(const std::vector<double>& scores, double bandwidth,
                                      std::size_t max_iter = 300, double tol = 1e-9) {
    if (bandwidth <= 0.0) throw ConfigError("mean_shift: bandwidth must be > 0");
    if (scores.empty()) return ClusteringResult{{}, {}, Method::MeanShift, 0, {}};

    const std::size_t n = scores.size();
    std::vector<double> v = scores;
    std::sort(v.begin(), v.end());

    auto window_mean = [&](double x) {
        const auto lo = std::lower_bound(v.begin(), v.end(), x - bandwidth);
        const auto hi = std::upper_bound(v.begin(), v.end(), x + bandwidth);
        double s = 0.0;
        for (auto it = lo; it != hi; ++it) s += *it;
        return s / static_cast<double>(hi - lo);
    };

    std::vector<double> mode(n);
    for (std::size_t i = 0; i < n; ++i) {
        double x = scores[i];
        for (std::size_t iter = 0; iter < max_iter; ++iter) {
            const double next = window_mean(x);
            const double shift = std::abs(next - x);
            x = next;
            if (shift < tol) break;
        }
        mode[i] = x;
    }

    // Group modes: ascending order, chain-merge gaps below bandwidth/2.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return mode[a] < mode[b]; });
    std::vector<int> raw(n);
    int cluster = 0;
    for (std::size_t pos = 0; pos < n; ++pos) {
        if (pos > 0 && mode[order[pos]] - mode[order[pos - 1]] >= bandwidth / 2.0) ++cluster;
        raw[order[pos]] = cluster;
    }
    return detail::canonicalize(scores, raw, Method::MeanShift);
}

// Mean silhouette coefficient of a hard partition; singleton clusters score 0.
inline double silhouette(const std::vector<double>& scores, const std::vector<int>& assignments,
                         std::size_t k) {
    const std::size_t n = scores.size();
    if (k < 2) return -1.0;
    double total = 0.0;
    std::size_t counted = 0;
    std::vector<std::size_t> size(k, 0);
    for (int a : assignments)
        if (a >= 0) ++size[a];
    for (std::size_t i = 0; i < n; ++i) {
        if (assignments[i] < 0) continue;
        std::vector<double> dist_sum(k, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (assignments[j] < 0 || i == j) continue;
            dist_sum[assignments[j]] += std::abs(scores[i] - scores[j]);
        }
        const std::size_t own = assignments[i];
        ++counted;
        if (size[own] <= 1) continue; // s(i) = 0
        const double a = dist_sum[own] / static_cast<double>(size[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            if (c == own || size[c] == 0) continue;
            b = std::min(b, dist_sum[c] / static_cast<double>(size[c]));
        }
        const double denom = std::max(a, b);
        if (denom > 0.0) total += (b - a) / denom;
    }
    return counted ? total / static_cast<double>(counted) : -1.0;
}

struct ClusterParams {
    std::optional<std::size_t> k; // absent: silhouette-selected for k-based methods
    std::uint64_t seed = 0;
    std::size_t max_iter = 100;
    double tol = 1e-9;
    double eps = 0.5;                      // DBSCAN
    std::size_t min_pts = 5;               // DBSCAN
    std::optional<double> bandwidth;       // MeanShift; absent: Silverman's rule
};

namespace detail {

inline double silverman_bandwidth(const std::vector<double>& scores) {
    const std::size_t n = scores.size();
    double mean = 0.0;
    for (double x : scores) mean += x;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double x : scores) var += (x - mean) * (x - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    const double h = 1.06 * sd * std::pow(static_cast<double>(n), -0.2);
    return h > 0.0 ? h : 1.0;
}

} // namespace detail

// Dispatches to the chosen method. For the k-parameterized methods with k
// unspecified, picks k in [2, 8] by maximizing the silhouette coefficient
// (ties break toward the smaller k).
inline ClusteringResult select_partition(const std::vector<double>& scores, Method method,
                                         const ClusterParams& params) {
    if (scores.empty()) throw InfeasibleK("select_partition: empty scores");

    switch (method) {
        case Method::DBSCAN:
            return dbscan_1d(scores, params.eps, params.min_pts);
        case Method::MeanShift: {
            const double bw = params.bandwidth.value_or(detail::silverman_bandwidth(scores));
            return mean_shift_1d(scores, bw, std::max<std::size_t>(params.max_iter, 300), params.tol);
        }
        default: break;
    }

    auto run = [&](std::size_t k) {
        switch (method) {
            case Method::KMeans: return kmeans_1d(scores, k, params.seed, params.max_iter, params.tol);
            case Method::Agglomerative: return agglomerative_1d(scores, k);
            case Method::GaussianMixture:
                return gmm_1d(scores, k, params.seed, std::max<std::size_t>(params.max_iter, 200), params.tol);
            default: throw ConfigError("unreachable clustering method");
        }
    };

    if (params.k) return run(*params.k);

    const std::size_t distinct = detail::count_distinct(scores);
    if (distinct < 2) return run(1);
    const std::size_t kmax = std::min<std::size_t>(8, distinct);
    ClusteringResult best;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 2; k <= kmax; ++k) {
        ClusteringResult candidate = run(k);
        const double s = silhouette(scores, candidate.assignments, candidate.k);
        if (s > best_score) {
            best_score = s;
            best = std::move(candidate);
        }
    }
    return best;
}

} // namespace gravitykg::cluster
