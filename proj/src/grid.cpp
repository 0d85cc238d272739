#include "fsens/grid.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "binary .grid format assumes a little-endian host");

namespace fsens {

SpatialMap::SpatialMap(Eigen::MatrixXd values, Rect domain)
    : values_(std::move(values)), domain_(domain) {
    if (values_.rows() < 1 || values_.cols() < 1)
        throw std::invalid_argument("SpatialMap: empty value matrix");
    if (!values_.allFinite())
        throw std::invalid_argument("SpatialMap: non-finite values");
    if (!(domain_.z1_max > domain_.z1_min) || !(domain_.z2_max > domain_.z2_min))
        throw std::invalid_argument("SpatialMap: degenerate domain rectangle");
}

Ensemble::Ensemble(Eigen::MatrixXd inputs, std::vector<SpatialMap> maps,
                   std::vector<Bounds1d> bounds)
    : inputs_(std::move(inputs)), maps_(std::move(maps)), bounds_(std::move(bounds)) {
    const auto n = inputs_.rows();
    const auto d = inputs_.cols();
    if (n < 1 || d < 1) throw std::invalid_argument("Ensemble: empty design");
    if (static_cast<Eigen::Index>(maps_.size()) != n)
        throw std::invalid_argument("Ensemble: design has " + std::to_string(n) +
                                    " rows but " + std::to_string(maps_.size()) + " maps");
    if (static_cast<Eigen::Index>(bounds_.size()) != d)
        throw std::invalid_argument("Ensemble: bounds size != input dimension");
    if (!inputs_.allFinite())
        throw std::invalid_argument("Ensemble: non-finite design entry");
    const GridSpec g = maps_.front().grid();
    for (std::size_t i = 1; i < maps_.size(); ++i) {
        if (!(maps_[i].grid() == g))
            throw std::invalid_argument("Ensemble: map " + std::to_string(i) +
                                        " does not share the common grid");
    }
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            if (inputs_(i, j) < bounds_[j].lo || inputs_(i, j) > bounds_[j].hi)
                throw std::invalid_argument("Ensemble: design row " + std::to_string(i) +
                                            " outside bounds in column " + std::to_string(j));
}

namespace grid {

Eigen::VectorXd flatten(const SpatialMap& map) {
    const auto& v = map.values();
    Eigen::VectorXd out(v.size());
    for (Eigen::Index r = 0; r < v.rows(); ++r)
        out.segment(r * v.cols(), v.cols()) = v.row(r);
    return out;
}

SpatialMap unflatten(const Eigen::VectorXd& vec, const GridSpec& spec) {
    if (vec.size() != spec.pixels())
        throw std::invalid_argument("unflatten: vector length " + std::to_string(vec.size()) +
                                    " != grid pixels " + std::to_string(spec.pixels()));
    Eigen::MatrixXd m(spec.rows, spec.cols);
    for (Eigen::Index r = 0; r < spec.rows; ++r)
        m.row(r) = vec.segment(r * spec.cols, spec.cols);
    return SpatialMap(std::move(m), spec.domain);
}

namespace {

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
    return std::string(buf, ptr);
}

double parse_field(const std::string& field, const std::filesystem::path& path,
                   std::size_t line_no) {
    const char* begin = field.data();
    const char* end = begin + field.size();
    while (begin != end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end != begin && (*(end - 1) == ' ' || *(end - 1) == '\t')) --end;
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc{} || ptr != end)
        throw std::runtime_error("CSV parse error in " + path.string() + " line " +
                                 std::to_string(line_no) + ": '" + field + "'");
    return out;
}

}  // namespace

Eigen::MatrixXd read_csv_matrix(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) row.push_back(parse_field(field, path, line_no));
        if (line.back() == ',') row.push_back(parse_field("", path, line_no));
        if (!rows.empty() && row.size() != rows.front().size())
            throw std::runtime_error("CSV " + path.string() + " line " + std::to_string(line_no) +
                                     ": ragged row of " + std::to_string(row.size()) + " fields");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("CSV " + path.string() + " is empty");
    Eigen::MatrixXd m(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
    return m;
}

void write_csv_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c) out << ',';
            out << format_double(m(r, c));
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

namespace {
constexpr char kGridMagic[8] = {'F', 'S', 'G', 'R', 'I', 'D', '0', '1'};
}

void write_grid_file(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(kGridMagic, 8);
    const std::uint32_t rows = static_cast<std::uint32_t>(m.rows());
    const std::uint32_t cols = static_cast<std::uint32_t>(m.cols());
    out.write(reinterpret_cast<const char*>(&rows), 4);
    out.write(reinterpret_cast<const char*>(&cols), 4);
    std::vector<double> row(m.cols());
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size() * sizeof(double)));
    }
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

Eigen::MatrixXd read_grid_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kGridMagic, 8) != 0)
        throw std::runtime_error(path.string() + ": bad .grid magic");
    std::uint32_t rows = 0, cols = 0;
    in.read(reinterpret_cast<char*>(&rows), 4);
    in.read(reinterpret_cast<char*>(&cols), 4);
    if (!in || rows == 0 || cols == 0)
        throw std::runtime_error(path.string() + ": bad .grid header");
    Eigen::MatrixXd m(rows, cols);
    std::vector<double> row(cols);
    for (std::uint32_t r = 0; r < rows; ++r) {
        in.read(reinterpret_cast<char*>(row.data()),
                static_cast<std::streamsize>(cols * sizeof(double)));
        if (!in) throw std::runtime_error(path.string() + ": truncated .grid payload");
        for (std::uint32_t c = 0; c < cols; ++c) m(r, c) = row[c];
    }
    return m;
}

std::filesystem::path map_filename(std::size_t index, MapFormat format) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "map_%06zu.%s", index,
                  format == MapFormat::Binary ? "grid" : "csv");
    return std::filesystem::path(buf);
}

Ensemble load_ensemble(const std::filesystem::path& design_path,
                       const std::filesystem::path& maps_dir, const GridSpec& grid_meta,
                       std::optional<std::vector<Bounds1d>> bounds) {
    Eigen::MatrixXd design = read_csv_matrix(design_path);
    for (Eigen::Index i = 0; i < design.rows(); ++i)
        if (!design.row(i).allFinite())
            throw std::runtime_error("design " + design_path.string() + ": non-finite entry in row " +
                                     std::to_string(i));
    const std::size_t n = static_cast<std::size_t>(design.rows());
    std::vector<SpatialMap> maps;
    maps.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Eigen::MatrixXd values;
        const auto bin = maps_dir / map_filename(i, MapFormat::Binary);
        const auto csv = maps_dir / map_filename(i, MapFormat::Csv);
        if (std::filesystem::exists(bin)) {
            values = read_grid_file(bin);
        } else if (std::filesystem::exists(csv)) {
            values = read_csv_matrix(csv);
        } else {
            throw std::runtime_error("missing map file for design row " + std::to_string(i) +
                                     " in " + maps_dir.string());
        }
        if (values.rows() != grid_meta.rows || values.cols() != grid_meta.cols)
            throw std::runtime_error("map " + std::to_string(i) + " is " +
                                     std::to_string(values.rows()) + "x" + std::to_string(values.cols()) +
                                     ", expected " + std::to_string(grid_meta.rows) + "x" +
                                     std::to_string(grid_meta.cols));
        if (!values.allFinite())
            throw std::runtime_error("map " + std::to_string(i) + ": non-finite values");
        maps.emplace_back(std::move(values), grid_meta.domain);
    }
    std::vector<Bounds1d> b;
    if (bounds) {
        b = std::move(*bounds);
    } else {
        for (Eigen::Index j = 0; j < design.cols(); ++j)
            b.push_back({design.col(j).minCoeff(), design.col(j).maxCoeff()});
    }
    return Ensemble(std::move(design), std::move(maps), std::move(b));
}

void save_ensemble(const Ensemble& ens, const std::filesystem::path& design_path,
                   const std::filesystem::path& maps_dir, MapFormat format) {
    std::filesystem::create_directories(maps_dir);
    if (design_path.has_parent_path())
        std::filesystem::create_directories(design_path.parent_path());
    write_csv_matrix(design_path, ens.inputs());
    for (std::size_t i = 0; i < ens.maps().size(); ++i) {
        const auto path = maps_dir / map_filename(i, format);
        if (format == MapFormat::Binary)
            write_grid_file(path, ens.maps()[i].values());
        else
            write_csv_matrix(path, ens.maps()[i].values());
    }
}

std::array<double, 2> write_pgm(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            const double v = m(r, c);
            if (std::isfinite(v)) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
    if (!std::isfinite(lo)) {
        lo = 0.0;
        hi = 0.0;
    }
    const double span = hi > lo ? hi - lo : 1.0;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "P5\n" << m.cols() << " " << m.rows() << "\n255\n";
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            const double v = m(r, c);
            unsigned char g = 0;
            if (std::isfinite(v))
                g = static_cast<unsigned char>(std::lround(255.0 * (v - lo) / span));
            out.put(static_cast<char>(g));
        }
    if (!out) throw std::runtime_error("write failed for " + path.string());
    return {lo, hi};
}

}  // namespace grid
}  // namespace fsens
