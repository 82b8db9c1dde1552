#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gravitykg/core.hpp"
#include "gravitykg/csv.hpp"
#include "gravitykg/errors.hpp"

namespace gravitykg {

// 3-D view of the entity embedding cloud for the explainability plots.
struct Projection3D {
    std::vector<std::pair<EntityId, std::array<double, 3>>> coordinates;
    std::array<double, 3> explained_variance = {0.0, 0.0, 0.0}; // fractions, descending
    bool padded = false; // embedding dimension was below 3
};

// PCA onto the top three principal directions of the mean-centered entity
// vectors. Sign convention: the largest-magnitude component of each
// direction is positive, which makes the output deterministic.
inline Projection3D pca_3d(const EmbeddingSpace& space) {
    const std::size_t n = space.entities.size();
    const std::size_t d = space.dimension;
    if (n < 3) throw DomainError("pca_3d: need at least 3 entities");

    Eigen::MatrixXd x(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) x(i, j) = space.entity_vectors[i][j];
    const Eigen::RowVectorXd mean = x.colwise().mean();
    x.rowwise() -= mean;

    const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw DomainError("pca_3d: eigendecomposition failed");
    const Eigen::VectorXd eigenvalues = solver.eigenvalues();   // ascending
    const Eigen::MatrixXd eigenvectors = solver.eigenvectors(); // columns

    double total_variance = 0.0;
    for (Eigen::Index i = 0; i < eigenvalues.size(); ++i)
        total_variance += std::max(0.0, eigenvalues(i));

    Projection3D out;
    out.padded = d < 3;
    const std::size_t n_components = std::min<std::size_t>(3, d);
    Eigen::MatrixXd directions(d, n_components);
    for (std::size_t c = 0; c < n_components; ++c) {
        Eigen::VectorXd dir = eigenvectors.col(static_cast<Eigen::Index>(d - 1 - c));
        Eigen::Index arg_max = 0;
        dir.cwiseAbs().maxCoeff(&arg_max);
        if (dir(arg_max) < 0.0) dir = -dir;
        directions.col(static_cast<Eigen::Index>(c)) = dir;
        if (total_variance > 0.0)
            out.explained_variance[c] = std::max(0.0, eigenvalues(static_cast<Eigen::Index>(d - 1 - c))) /
                                        total_variance;
    }

    const Eigen::MatrixXd projected = x * directions;
    out.coordinates.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::array<double, 3> coord = {0.0, 0.0, 0.0};
        for (std::size_t c = 0; c < n_components; ++c)
            coord[c] = projected(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
        out.coordinates.emplace_back(space.entities[i], coord);
    }
    return out;
}

struct Neighbor {
    EntityId entity;
    double distance = 0.0;
};

// k nearest entities by L2 distance in the original embedding space (not the
// projection). The query entity is excluded; ties break by label.
inline std::vector<Neighbor> neighborhood(const EntityId& entity, const EmbeddingSpace& space,
                                          std::size_t k) {
    if (k >= space.entities.size()) throw ConfigError("neighborhood: k must be below the entity count");
    const auto& center = space.entity_vec(entity.label);
    std::vector<Neighbor> all;
    all.reserve(space.entities.size());
    for (std::size_t i = 0; i < space.entities.size(); ++i) {
        if (space.entities[i].label == entity.label) continue;
        double d2 = 0.0;
        for (std::size_t j = 0; j < space.dimension; ++j) {
            const double diff = space.entity_vectors[i][j] - center[j];
            d2 += diff * diff;
        }
        all.push_back({space.entities[i], std::sqrt(d2)});
    }
    std::sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.entity.label < b.entity.label;
    });
    all.resize(k);
    return all;
}

inline void write_projection_csv(const std::string& path, const Projection3D& projection) {
    csv::Writer w(path);
    w.write_row({"entity", "x", "y", "z"});
    for (const auto& [entity, coord] : projection.coordinates)
        w.write_row({entity.label, csv::format_double(coord[0]), csv::format_double(coord[1]),
                     csv::format_double(coord[2])});
}

inline void write_neighbors_csv(const std::string& path, const EmbeddingSpace& space, std::size_t k) {
    csv::Writer w(path);
    w.write_row({"entity", "rank", "neighbor", "distance"});
    if (space.entities.size() < 2) return;
    const std::size_t kk = std::min(k, space.entities.size() - 1);
    for (const auto& entity : space.entities) {
        const auto neighbors = neighborhood(entity, space, kk);
        for (std::size_t r = 0; r < neighbors.size(); ++r)
            w.write_row({entity.label, std::to_string(r + 1), neighbors[r].entity.label,
                         csv::format_double(neighbors[r].distance)});
    }
}

} // namespace gravitykg
