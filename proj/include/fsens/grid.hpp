#pragma once

#include <Eigen/Core>
#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace fsens {

// Rectangular spatial domain [z1_min,z1_max] x [z2_min,z2_max].
struct Rect {
    double z1_min = 0.0;
    double z1_max = 1.0;
    double z2_min = 0.0;
    double z2_max = 1.0;

    double len1() const { return z1_max - z1_min; }
    double len2() const { return z2_max - z2_min; }
    bool operator==(const Rect&) const = default;
};

// Uniform pixel grid over a Rect. Pixel (row k, col l) maps to
// z1 = z1_min + l*dz1 and z2 = z2_max - k*dz2 (image convention,
// top row carries the largest z2).
struct GridSpec {
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    Rect domain;

    double dz1() const { return cols > 1 ? domain.len1() / double(cols - 1) : 0.0; }
    double dz2() const { return rows > 1 ? domain.len2() / double(rows - 1) : 0.0; }
    double z1_at(Eigen::Index col) const { return domain.z1_min + double(col) * dz1(); }
    double z2_at(Eigen::Index row) const { return domain.z2_max - double(row) * dz2(); }
    Eigen::Index pixels() const { return rows * cols; }
    bool operator==(const GridSpec&) const = default;
};

// One simulator output map discretized on a uniform grid.
class SpatialMap {
public:
    SpatialMap() = default;
    SpatialMap(Eigen::MatrixXd values, Rect domain);

    const Eigen::MatrixXd& values() const { return values_; }
    Eigen::MatrixXd& values() { return values_; }
    const Rect& domain() const { return domain_; }
    Eigen::Index rows() const { return values_.rows(); }
    Eigen::Index cols() const { return values_.cols(); }
    GridSpec grid() const { return GridSpec{values_.rows(), values_.cols(), domain_}; }

private:
    Eigen::MatrixXd values_;
    Rect domain_;
};

struct Bounds1d {
    double lo = 0.0;
    double hi = 1.0;
    bool operator==(const Bounds1d&) const = default;
};

// A design of experiments paired with its simulated output maps.
class Ensemble {
public:
    Ensemble() = default;
    Ensemble(Eigen::MatrixXd inputs, std::vector<SpatialMap> maps,
             std::vector<Bounds1d> bounds);

    const Eigen::MatrixXd& inputs() const { return inputs_; }
    const std::vector<SpatialMap>& maps() const { return maps_; }
    const std::vector<Bounds1d>& bounds() const { return bounds_; }
    Eigen::Index size() const { return inputs_.rows(); }
    Eigen::Index dim() const { return inputs_.cols(); }
    GridSpec grid() const { return maps_.front().grid(); }

private:
    Eigen::MatrixXd inputs_;
    std::vector<SpatialMap> maps_;
    std::vector<Bounds1d> bounds_;
};

namespace grid {

// Row-major flattening; exact inverse pair.
Eigen::VectorXd flatten(const SpatialMap& map);
SpatialMap unflatten(const Eigen::VectorXd& vec, const GridSpec& spec);

// CSV matrix I/O (RFC-4180, '.' decimal separator). Values are written with
// shortest round-trip precision, so read(write(M)) == M bit-exactly.
Eigen::MatrixXd read_csv_matrix(const std::filesystem::path& path);
void write_csv_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m);

// Dense binary map format: 8-byte magic "FSGRID01", then n_rows and n_cols
// as little-endian uint32, then row-major little-endian float64 payload.
void write_grid_file(const std::filesystem::path& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_grid_file(const std::filesystem::path& path);

enum class MapFormat { Binary, Csv };

// Loads design CSV (n rows, d cols) plus one map file per row from maps_dir
// (map_000000.grid / .csv, named by row index). If bounds are not given they
// default to the per-column range of the design.
Ensemble load_ensemble(const std::filesystem::path& design_path,
                       const std::filesystem::path& maps_dir,
                       const GridSpec& grid_meta,
                       std::optional<std::vector<Bounds1d>> bounds = std::nullopt);

void save_ensemble(const Ensemble& ens, const std::filesystem::path& design_path,
                   const std::filesystem::path& maps_dir,
                   MapFormat format = MapFormat::Binary);

std::filesystem::path map_filename(std::size_t index, MapFormat format);

// 8-bit binary PGM with linear value->gray mapping; returns the (min,max)
// range used. Non-finite entries render as 0.
std::array<double, 2> write_pgm(const std::filesystem::path& path, const Eigen::MatrixXd& m);

}  // namespace grid
}  // namespace fsens
