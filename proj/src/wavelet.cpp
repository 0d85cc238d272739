#include "fsens/wavelet.hpp"

#include <cmath>
#include <stdexcept>

namespace fsens::wavelet {

namespace {

std::vector<double> d4_lowpass() {
    const double s3 = std::sqrt(3.0);
    const double norm = 4.0 * std::sqrt(2.0);
    return {(1.0 + s3) / norm, (3.0 + s3) / norm, (3.0 - s3) / norm, (1.0 - s3) / norm};
}

std::vector<double> quadrature_mirror(const std::vector<double>& h) {
    const std::size_t L = h.size();
    std::vector<double> g(L);
    for (std::size_t k = 0; k < L; ++k) {
        const double sign = (k % 2 == 0) ? 1.0 : -1.0;
        g[k] = sign * h[L - 1 - k];
    }
    return g;
}

void check_levels(Eigen::Index rows, Eigen::Index cols, int levels) {
    if (levels < 1) throw std::invalid_argument("wavelet: levels must be >= 1");
    const Eigen::Index div = Eigen::Index(1) << levels;
    if (rows % div != 0 || cols % div != 0)
        throw std::invalid_argument("wavelet: " + std::to_string(rows) + "x" + std::to_string(cols) +
                                    " not divisible by 2^" + std::to_string(levels));
}

// Periodic analysis: a_i = sum_k h_k x[(2i+k) mod N], likewise for details.
void analyze_1d(const double* x, Eigen::Index n, const FilterPair& f, double* approx,
                double* detail) {
    const auto& h = f.lowpass;
    const auto& g = f.highpass;
    const Eigen::Index L = static_cast<Eigen::Index>(h.size());
    const Eigen::Index half = n / 2;
    for (Eigen::Index i = 0; i < half; ++i) {
        double a = 0.0, d = 0.0;
        for (Eigen::Index k = 0; k < L; ++k) {
            const double v = x[(2 * i + k) % n];
            a += h[static_cast<std::size_t>(k)] * v;
            d += g[static_cast<std::size_t>(k)] * v;
        }
        approx[i] = a;
        detail[i] = d;
    }
}

// Adjoint of analyze_1d; exact inverse because the filter bank is orthonormal.
void synthesize_1d(const double* approx, const double* detail, Eigen::Index n,
                   const FilterPair& f, double* x) {
    const auto& h = f.lowpass;
    const auto& g = f.highpass;
    const Eigen::Index L = static_cast<Eigen::Index>(h.size());
    const Eigen::Index half = n / 2;
    for (Eigen::Index i = 0; i < n; ++i) x[i] = 0.0;
    for (Eigen::Index i = 0; i < half; ++i) {
        for (Eigen::Index k = 0; k < L; ++k) {
            const Eigen::Index m = (2 * i + k) % n;
            x[m] += approx[i] * h[static_cast<std::size_t>(k)] +
                    detail[i] * g[static_cast<std::size_t>(k)];
        }
    }
}

// One analysis level: rows then columns, returns the four sub-bands packed
// as [LL LH; HL HH] in a single matrix (L/H refer to the row pass first).
Eigen::MatrixXd analyze_level(const Eigen::MatrixXd& m, const FilterPair& f) {
    const Eigen::Index n = m.rows(), c = m.cols();
    Eigen::MatrixXd t(n, c);
    std::vector<double> buf_in(static_cast<std::size_t>(std::max(n, c)));
    std::vector<double> buf_a(static_cast<std::size_t>(std::max(n, c) / 2));
    std::vector<double> buf_d(static_cast<std::size_t>(std::max(n, c) / 2));
    for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index j = 0; j < c; ++j) buf_in[static_cast<std::size_t>(j)] = m(r, j);
        analyze_1d(buf_in.data(), c, f, buf_a.data(), buf_d.data());
        for (Eigen::Index j = 0; j < c / 2; ++j) {
            t(r, j) = buf_a[static_cast<std::size_t>(j)];
            t(r, c / 2 + j) = buf_d[static_cast<std::size_t>(j)];
        }
    }
    Eigen::MatrixXd u(n, c);
    for (Eigen::Index j = 0; j < c; ++j) {
        for (Eigen::Index r = 0; r < n; ++r) buf_in[static_cast<std::size_t>(r)] = t(r, j);
        analyze_1d(buf_in.data(), n, f, buf_a.data(), buf_d.data());
        for (Eigen::Index r = 0; r < n / 2; ++r) {
            u(r, j) = buf_a[static_cast<std::size_t>(r)];
            u(n / 2 + r, j) = buf_d[static_cast<std::size_t>(r)];
        }
    }
    return u;
}

Eigen::MatrixXd synthesize_level(const Eigen::MatrixXd& u, const FilterPair& f) {
    const Eigen::Index n = u.rows(), c = u.cols();
    Eigen::MatrixXd t(n, c);
    std::vector<double> buf_a(static_cast<std::size_t>(std::max(n, c) / 2));
    std::vector<double> buf_d(static_cast<std::size_t>(std::max(n, c) / 2));
    std::vector<double> buf_out(static_cast<std::size_t>(std::max(n, c)));
    for (Eigen::Index j = 0; j < c; ++j) {
        for (Eigen::Index r = 0; r < n / 2; ++r) {
            buf_a[static_cast<std::size_t>(r)] = u(r, j);
            buf_d[static_cast<std::size_t>(r)] = u(n / 2 + r, j);
        }
        synthesize_1d(buf_a.data(), buf_d.data(), n, f, buf_out.data());
        for (Eigen::Index r = 0; r < n; ++r) t(r, j) = buf_out[static_cast<std::size_t>(r)];
    }
    Eigen::MatrixXd m(n, c);
    for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index j = 0; j < c / 2; ++j) {
            buf_a[static_cast<std::size_t>(j)] = t(r, j);
            buf_d[static_cast<std::size_t>(j)] = t(r, c / 2 + j);
        }
        synthesize_1d(buf_a.data(), buf_d.data(), c, f, buf_out.data());
        for (Eigen::Index j = 0; j < c; ++j) m(r, j) = buf_out[static_cast<std::size_t>(j)];
    }
    return m;
}

void ensure_validated(Family family) {
    if (family == Family::D4) {
        static const bool once = (validate_filters(Family::D4), true);
        (void)once;
    } else {
        static const bool once = (validate_filters(Family::Haar), true);
        (void)once;
    }
}

}  // namespace

FilterPair filters(Family family) {
    std::vector<double> h;
    if (family == Family::Haar) {
        const double r = 1.0 / std::sqrt(2.0);
        h = {r, r};
    } else {
        h = d4_lowpass();
    }
    return FilterPair{h, quadrature_mirror(h)};
}

void validate_filters(Family family) {
    const FilterPair f = filters(family);
    const auto& h = f.lowpass;
    const auto& g = f.highpass;
    const double tol = 1e-12;
    double sum_h = 0.0, norm_h = 0.0, sum_g = 0.0, mom1_g = 0.0;
    for (std::size_t k = 0; k < h.size(); ++k) {
        sum_h += h[k];
        norm_h += h[k] * h[k];
        sum_g += g[k];
        mom1_g += double(k) * g[k];
    }
    if (std::abs(sum_h - std::sqrt(2.0)) > tol)
        throw std::logic_error("wavelet filter: sum(h) != sqrt(2)");
    if (std::abs(norm_h - 1.0) > tol) throw std::logic_error("wavelet filter: |h|^2 != 1");
    if (std::abs(sum_g) > tol) throw std::logic_error("wavelet filter: sum(g) != 0");
    // Double-shift orthogonality sum_k h_k h_{k+2m} = 0 for m != 0.
    for (std::size_t shift = 2; shift < h.size(); shift += 2) {
        double dot = 0.0;
        for (std::size_t k = 0; k + shift < h.size(); ++k) dot += h[k] * h[k + shift];
        if (std::abs(dot) > tol) throw std::logic_error("wavelet filter: shift orthogonality violated");
    }
    // D4 has a first vanishing moment of the wavelet on top of sum(g) = 0.
    if (family == Family::D4 && std::abs(mom1_g) > tol)
        throw std::logic_error("wavelet filter: first moment of g != 0");
    validated[family == Family::D4 ? 1 : 0] = true;
}

Eigen::Index WaveletCoeffs::total_size() const {
    Eigen::Index t = approx.size();
    for (const auto& b : bands) t += b.detail_h.size() + b.detail_v.size() + b.detail_d.size();
    return t;
}

WaveletCoeffs dwt2_forward(const Eigen::MatrixXd& values, const WaveletSpec& spec) {
    check_levels(values.rows(), values.cols(), spec.levels);
    if (!validated[spec.family == Family::D4 ? 1 : 0]) validate_filters(spec.family);
    const FilterPair f = filters(spec.family);

    WaveletCoeffs out;
    out.orig_rows = values.rows();
    out.orig_cols = values.cols();
    out.spec = spec;
    out.bands.resize(static_cast<std::size_t>(spec.levels));

    Eigen::MatrixXd current = values;
    for (int j = 0; j < spec.levels; ++j) {
        const Eigen::MatrixXd u = analyze_level(current, f);
        const Eigen::Index hr = u.rows() / 2, hc = u.cols() / 2;
        auto& lvl = out.bands[static_cast<std::size_t>(j)];
        lvl.detail_h = u.topRightCorner(hr, hc);
        lvl.detail_v = u.bottomLeftCorner(hr, hc);
        lvl.detail_d = u.bottomRightCorner(hr, hc);
        current = u.topLeftCorner(hr, hc);
    }
    out.approx = std::move(current);
    return out;
}

WaveletCoeffs dwt2_forward(const SpatialMap& map, const WaveletSpec& spec) {
    return dwt2_forward(map.values(), spec);
}

Eigen::MatrixXd dwt2_inverse_values(const WaveletCoeffs& coeffs) {
    const FilterPair f = filters(coeffs.spec.family);
    Eigen::MatrixXd current = coeffs.approx;
    for (int j = coeffs.spec.levels - 1; j >= 0; --j) {
        const auto& lvl = coeffs.bands[static_cast<std::size_t>(j)];
        const Eigen::Index hr = current.rows(), hc = current.cols();
        if (lvl.detail_h.rows() != hr || lvl.detail_h.cols() != hc ||
            lvl.detail_v.rows() != hr || lvl.detail_v.cols() != hc ||
            lvl.detail_d.rows() != hr || lvl.detail_d.cols() != hc)
            throw std::invalid_argument("wavelet: inconsistent sub-band shapes at level " +
                                        std::to_string(j + 1));
        Eigen::MatrixXd u(2 * hr, 2 * hc);
        u.topLeftCorner(hr, hc) = current;
        u.topRightCorner(hr, hc) = lvl.detail_h;
        u.bottomLeftCorner(hr, hc) = lvl.detail_v;
        u.bottomRightCorner(hr, hc) = lvl.detail_d;
        current = synthesize_level(u, f);
    }
    if (current.rows() != coeffs.orig_rows || current.cols() != coeffs.orig_cols)
        throw std::invalid_argument("wavelet: sub-band shapes inconsistent with stored original shape");
    return current;
}

SpatialMap dwt2_inverse(const WaveletCoeffs& coeffs, const Rect& domain) {
    return SpatialMap(dwt2_inverse_values(coeffs), domain);
}

namespace {

void append_rowmajor(Eigen::VectorXd& vec, Eigen::Index& pos, const Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        vec.segment(pos, m.cols()) = m.row(r);
        pos += m.cols();
    }
}

Eigen::MatrixXd take_rowmajor(const Eigen::VectorXd& vec, Eigen::Index& pos, Eigen::Index rows,
                              Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        m.row(r) = vec.segment(pos, cols);
        pos += cols;
    }
    return m;
}

}  // namespace

Eigen::VectorXd coeffs_to_vector(const WaveletCoeffs& coeffs) {
    Eigen::VectorXd vec(coeffs.total_size());
    Eigen::Index pos = 0;
    append_rowmajor(vec, pos, coeffs.approx);
    for (int j = coeffs.spec.levels - 1; j >= 0; --j) {
        const auto& lvl = coeffs.bands[static_cast<std::size_t>(j)];
        append_rowmajor(vec, pos, lvl.detail_h);
        append_rowmajor(vec, pos, lvl.detail_v);
        append_rowmajor(vec, pos, lvl.detail_d);
    }
    return vec;
}

WaveletCoeffs vector_to_coeffs(const Eigen::VectorXd& vec, Eigen::Index rows, Eigen::Index cols,
                               const WaveletSpec& spec) {
    check_levels(rows, cols, spec.levels);
    if (vec.size() != rows * cols)
        throw std::invalid_argument("vector_to_coeffs: length " + std::to_string(vec.size()) +
                                    " != " + std::to_string(rows * cols));
    WaveletCoeffs out;
    out.orig_rows = rows;
    out.orig_cols = cols;
    out.spec = spec;
    out.bands.resize(static_cast<std::size_t>(spec.levels));
    Eigen::Index pos = 0;
    const Eigen::Index ar = rows >> spec.levels, ac = cols >> spec.levels;
    out.approx = take_rowmajor(vec, pos, ar, ac);
    for (int j = spec.levels - 1; j >= 0; --j) {
        const Eigen::Index hr = rows >> (j + 1), hc = cols >> (j + 1);
        auto& lvl = out.bands[static_cast<std::size_t>(j)];
        lvl.detail_h = take_rowmajor(vec, pos, hr, hc);
        lvl.detail_v = take_rowmajor(vec, pos, hr, hc);
        lvl.detail_d = take_rowmajor(vec, pos, hr, hc);
    }
    return out;
}

}  // namespace fsens::wavelet
