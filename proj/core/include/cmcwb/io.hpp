#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace cmcwb {

// Shortest round-trip decimal formatting (17 significant digits) used by every
// report writer so reruns are byte-identical.
std::string format_g17(double value);

// FNV-1a 64-bit digest, hex-encoded; used to stamp reports with their config.
std::uint64_t fnv1a64(std::string_view data) noexcept;
std::string digest_hex(std::string_view data);

struct CsvColumn {
  std::string name;
  Eigen::VectorXd values;
};

// Writes columns of equal length with a header row, LF line endings.
void write_csv(const std::string& path, const std::vector<CsvColumn>& columns);

struct Mesh {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<int, 4>> quads;  // zero-based
};

void write_obj(const std::string& path, const Mesh& mesh);

// Builds a quad grid mesh from a vertex table indexed by (i, j),
// i = 0..ni, j = 0..nj; wrap_j stitches the last column to the first.
Mesh grid_mesh(const std::vector<std::vector<Eigen::Vector3d>>& table, bool wrap_j);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace cmcwb
