#pragma once

// Image-quality metrics: SSIM, PSNR, and a Frechet distance over substitute
// PCA features (reported as "fid_proxy" everywhere; the values are not
// comparable to Inception-based FID).

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "qdd/image.hpp"

namespace qdd {

/// Global-statistics SSIM with c1 = (0.01 L)^2, c2 = (0.03 L)^2; no sliding
/// window. Means/variances/covariance are taken over all pixels.
inline double ssim(const ImageTensor& x, const ImageTensor& y, double dynamic_range = 1.0) {
    if (!x.same_shape(y)) throw std::invalid_argument("ssim: shape mismatch");
    const double n = double(x.values.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.values.size(); ++i) {
        mx += x.values[i];
        my += y.values[i];
    }
    mx /= n;
    my /= n;
    double vx = 0.0, vy = 0.0, cxy = 0.0;
    for (std::size_t i = 0; i < x.values.size(); ++i) {
        const double dx = x.values[i] - mx, dy = y.values[i] - my;
        vx += dx * dx;
        vy += dy * dy;
        cxy += dx * dy;
    }
    vx /= n;
    vy /= n;
    cxy /= n;
    const double c1 = 0.01 * dynamic_range * 0.01 * dynamic_range;
    const double c2 = 0.03 * dynamic_range * 0.03 * dynamic_range;
    return ((2 * mx * my + c1) / (mx * mx + my * my + c1)) * ((2 * cxy + c2) / (vx + vy + c2));
}

inline constexpr double kPsnrCapDb = 100.0;

/// 10 log10(max^2 / MSE), capped at 100 dB (the value reported for identical
/// images).
inline double psnr(const ImageTensor& x, const ImageTensor& y, double max_value = 1.0) {
    const double mse = image_mse(x, y);
    if (mse == 0.0) return kPsnrCapDb;
    return std::min(kPsnrCapDb, 10.0 * std::log10(max_value * max_value / mse));
}

namespace detail {

/// Tr sqrt(M) for a symmetric PSD matrix; eigenvalues below -1e-8 are an
/// error, small negatives are clamped to zero.
inline double trace_sqrt_psd(const Eigen::MatrixXd& m) {
    const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    if (es.info() != Eigen::Success) throw std::runtime_error("frechet: eigendecomposition failed");
    double tr = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        double lam = es.eigenvalues()[i];
        if (lam < -1e-8) throw std::runtime_error("frechet: matrix square root of an indefinite product");
        tr += std::sqrt(std::max(lam, 0.0));
    }
    return tr;
}

inline Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& m) {
    const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    if (es.info() != Eigen::Success) throw std::runtime_error("frechet: eigendecomposition failed");
    Eigen::VectorXd lam = es.eigenvalues();
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
        if (lam[i] < -1e-8) throw std::runtime_error("frechet: negative eigenvalue in covariance");
        lam[i] = std::sqrt(std::max(lam[i], 0.0));
    }
    return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace detail

/// Squared Wasserstein-2 distance between Gaussian fits of both sets in a
/// shared PCA feature space (components fitted on the union of the sets):
/// d^2 = |mu_a - mu_b|^2 + Tr(S_a + S_b - 2 (S_a S_b)^{1/2}).
inline double frechet_distance(std::span<const ImageTensor> set_a, std::span<const ImageTensor> set_b,
                               int feature_dim = 16) {
    if (feature_dim < 1) throw std::invalid_argument("frechet_distance: feature_dim must be positive");
    if (int(set_a.size()) < feature_dim + 1 || int(set_b.size()) < feature_dim + 1)
        throw std::invalid_argument("frechet_distance: each set needs at least feature_dim + 1 images");
    const std::size_t d = set_a[0].values.size();
    for (const auto& img : set_a)
        if (img.values.size() != d) throw std::invalid_argument("frechet_distance: inconsistent image sizes");
    for (const auto& img : set_b)
        if (img.values.size() != d) throw std::invalid_argument("frechet_distance: inconsistent image sizes");

    const Eigen::Index na = Eigen::Index(set_a.size()), nb = Eigen::Index(set_b.size());
    Eigen::MatrixXd all(na + nb, Eigen::Index(d));
    for (Eigen::Index i = 0; i < na; ++i)
        all.row(i) = Eigen::Map<const Eigen::VectorXd>(set_a[std::size_t(i)].values.data(), Eigen::Index(d));
    for (Eigen::Index i = 0; i < nb; ++i)
        all.row(na + i) =
            Eigen::Map<const Eigen::VectorXd>(set_b[std::size_t(i)].values.data(), Eigen::Index(d));

    const Eigen::RowVectorXd center = all.colwise().mean();
    all.rowwise() -= center;
    const Eigen::MatrixXd cov = all.transpose() * all / double(na + nb - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    if (es.info() != Eigen::Success) throw std::runtime_error("frechet: PCA eigendecomposition failed");
    // eigenvalues come sorted ascending; take the top feature_dim components
    const Eigen::Index f = std::min<Eigen::Index>(feature_dim, Eigen::Index(d));
    const Eigen::MatrixXd basis = es.eigenvectors().rightCols(f);
    const Eigen::MatrixXd feats = all * basis;  // (na+nb) x f

    const Eigen::MatrixXd fa = feats.topRows(na), fb = feats.bottomRows(nb);
    const Eigen::RowVectorXd mu_a = fa.colwise().mean(), mu_b = fb.colwise().mean();
    const Eigen::MatrixXd ca = (fa.rowwise() - mu_a).transpose() * (fa.rowwise() - mu_a) / double(na - 1);
    const Eigen::MatrixXd cb = (fb.rowwise() - mu_b).transpose() * (fb.rowwise() - mu_b) / double(nb - 1);

    const Eigen::MatrixXd sa_half = detail::sqrt_psd(ca);
    const double tr_cross = detail::trace_sqrt_psd(sa_half * cb * sa_half);
    const double d2 =
        (mu_a - mu_b).squaredNorm() + ca.trace() + cb.trace() - 2.0 * tr_cross;
    return std::max(d2, 0.0);
}

}  // namespace qdd
