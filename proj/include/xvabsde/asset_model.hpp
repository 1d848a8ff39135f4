#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <utility>

#include "linalg.hpp"

namespace xvabsde {

struct AssetModel {
    std::size_t dimension = 0;
    VectorXd s0;
    // drift(t, s, out): writes mu(t,s) into out (length n)
    std::function<void(double, std::span<const double>, std::span<double>)> drift;
    // diffusion(t, s, out): writes sigma(t,s) into out (n x n)
    std::function<void(double, std::span<const double>, Eigen::Ref<MatrixXd>)> diffusion;
    // set by factories when sigma is diagonal with sigma_aa depending on s_a only
    bool diagonal_noise = false;
};

// dS = diag(kappa) S dt + diag(S) L dW
inline AssetModel make_geometric_model(VectorXd kappa, MatrixXd vol, VectorXd s0) {
    const std::size_t n = static_cast<std::size_t>(s0.size());
    if (static_cast<std::size_t>(kappa.size()) != n ||
        static_cast<std::size_t>(vol.rows()) != n || static_cast<std::size_t>(vol.cols()) != n) {
        throw std::invalid_argument("make_geometric_model: inconsistent dimensions");
    }
    AssetModel model;
    model.dimension = n;
    model.s0 = std::move(s0);
    model.diagonal_noise = vol.isDiagonal(0.0);
    model.drift = [kappa, n](double, std::span<const double> s, std::span<double> out) {
        for (std::size_t a = 0; a < n; ++a) out[a] = kappa(a) * s[a];
    };
    model.diffusion = [vol, n](double, std::span<const double> s, Eigen::Ref<MatrixXd> out) {
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = 0; b < n; ++b) out(a, b) = s[a] * vol(a, b);
        }
    };
    return model;
}

// dS = mu dt + sigma dW with constant coefficients
inline AssetModel make_constant_model(VectorXd mu, MatrixXd sigma, VectorXd s0) {
    const std::size_t n = static_cast<std::size_t>(s0.size());
    if (static_cast<std::size_t>(mu.size()) != n ||
        static_cast<std::size_t>(sigma.rows()) != n ||
        static_cast<std::size_t>(sigma.cols()) != n) {
        throw std::invalid_argument("make_constant_model: inconsistent dimensions");
    }
    AssetModel model;
    model.dimension = n;
    model.s0 = std::move(s0);
    model.diagonal_noise = sigma.isDiagonal(0.0);
    model.drift = [mu, n](double, std::span<const double>, std::span<double> out) {
        for (std::size_t a = 0; a < n; ++a) out[a] = mu(a);
    };
    model.diffusion = [sigma](double, std::span<const double>, Eigen::Ref<MatrixXd> out) {
        out = sigma;
    };
    return model;
}

// dS = A S dt + sigma dW (linear drift, constant diffusion)
inline AssetModel make_linear_drift_model(MatrixXd a_matrix, MatrixXd sigma, VectorXd s0) {
    const std::size_t n = static_cast<std::size_t>(s0.size());
    if (static_cast<std::size_t>(a_matrix.rows()) != n ||
        static_cast<std::size_t>(a_matrix.cols()) != n ||
        static_cast<std::size_t>(sigma.rows()) != n ||
        static_cast<std::size_t>(sigma.cols()) != n) {
        throw std::invalid_argument("make_linear_drift_model: inconsistent dimensions");
    }
    AssetModel model;
    model.dimension = n;
    model.s0 = std::move(s0);
    model.diagonal_noise = sigma.isDiagonal(0.0);
    model.drift = [a_matrix, n](double, std::span<const double> s, std::span<double> out) {
        for (std::size_t a = 0; a < n; ++a) {
            double acc = 0.0;
            for (std::size_t b = 0; b < n; ++b) acc += a_matrix(a, b) * s[b];
            out[a] = acc;
        }
    };
    model.diffusion = [sigma](double, std::span<const double>, Eigen::Ref<MatrixXd> out) {
        out = sigma;
    };
    return model;
}

}  // namespace xvabsde
