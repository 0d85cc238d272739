#pragma once

#include <Eigen/Core>
#include <vector>

#include "fsens/grid.hpp"

namespace fsens::wavelet {

enum class Family { Haar, D4 };

// Orthonormal analysis/synthesis filter pair. The highpass is the quadrature
// mirror g_k = (-1)^k h_{L-1-k}; boundaries are periodic and decimation keeps
// even-indexed outputs, so the transform is exactly orthonormal.
struct FilterPair {
    std::vector<double> lowpass;
    std::vector<double> highpass;
};

FilterPair filters(Family family);

// Checks the defining filter constraints (sum h = sqrt(2), unit norm,
// double-shift orthogonality, vanishing moments of g) to 1e-12; throws on
// violation. Run once per family at startup by dwt2_forward.
void validate_filters(Family family);

struct WaveletSpec {
    Family family = Family::D4;
    int levels = 1;
};

// Per-level detail sub-bands plus the coarsest approximation. detail_h is
// row-highpass/column-lowpass, detail_v row-lowpass/column-highpass, detail_d
// highpass in both. bands[0] is level 1 (finest).
struct WaveletCoeffs {
    struct Level {
        Eigen::MatrixXd detail_h;
        Eigen::MatrixXd detail_v;
        Eigen::MatrixXd detail_d;
    };
    Eigen::MatrixXd approx;
    std::vector<Level> bands;
    Eigen::Index orig_rows = 0;
    Eigen::Index orig_cols = 0;
    WaveletSpec spec;

    Eigen::Index total_size() const;
};

// Separable periodic 2-D DWT (rows then columns per level, recursing on the
// approximation band).
WaveletCoeffs dwt2_forward(const SpatialMap& map, const WaveletSpec& spec);
WaveletCoeffs dwt2_forward(const Eigen::MatrixXd& values, const WaveletSpec& spec);

SpatialMap dwt2_inverse(const WaveletCoeffs& coeffs, const Rect& domain);
Eigen::MatrixXd dwt2_inverse_values(const WaveletCoeffs& coeffs);

// Fixed deterministic ordering: approximation first, then levels coarse to
// fine with H, V, D, row-major inside each band. Exact inverse pair.
Eigen::VectorXd coeffs_to_vector(const WaveletCoeffs& coeffs);
WaveletCoeffs vector_to_coeffs(const Eigen::VectorXd& vec, Eigen::Index rows,
                               Eigen::Index cols, const WaveletSpec& spec);

}  // namespace fsens::wavelet
