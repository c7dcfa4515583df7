#include "cmcwb/io.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cmcwb/errors.hpp"

namespace cmcwb {

std::string format_g17(double value) {
  std::array<char, 64> buf;
  const int len = std::snprintf(buf.data(), buf.size(), "%.17g", value);
  return std::string(buf.data(), static_cast<size_t>(len));
}

std::uint64_t fnv1a64(std::string_view data) noexcept {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string digest_hex(std::string_view data) {
  const std::uint64_t h = fnv1a64(data);
  std::array<char, 17> buf;
  std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf.data(), 16);
}

void write_csv(const std::string& path, const std::vector<CsvColumn>& columns) {
  require(!columns.empty(), ErrorCode::InvalidParameter, "no CSV columns");
  const Eigen::Index rows = columns.front().values.size();
  for (const auto& c : columns)
    require(c.values.size() == rows, ErrorCode::InvalidParameter, "CSV column length mismatch");
  std::ostringstream out;
  for (size_t j = 0; j < columns.size(); ++j) {
    if (j) out << ',';
    out << columns[j].name;
  }
  out << '\n';
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (size_t j = 0; j < columns.size(); ++j) {
      if (j) out << ',';
      out << format_g17(columns[j].values[i]);
    }
    out << '\n';
  }
  write_text_file(path, out.str());
}

void write_obj(const std::string& path, const Mesh& mesh) {
  std::ostringstream out;
  for (const auto& v : mesh.vertices)
    out << "v " << format_g17(v.x()) << ' ' << format_g17(v.y()) << ' ' << format_g17(v.z())
        << '\n';
  for (const auto& q : mesh.quads)
    out << "f " << q[0] + 1 << ' ' << q[1] + 1 << ' ' << q[2] + 1 << ' ' << q[3] + 1 << '\n';
  write_text_file(path, out.str());
}

Mesh grid_mesh(const std::vector<std::vector<Eigen::Vector3d>>& table, bool wrap_j) {
  Mesh mesh;
  require(!table.empty() && !table.front().empty(), ErrorCode::InvalidParameter, "empty mesh table");
  const int ni = static_cast<int>(table.size());
  const int nj = static_cast<int>(table.front().size());
  for (const auto& row : table)
    require(static_cast<int>(row.size()) == nj, ErrorCode::InvalidParameter, "ragged mesh table");
  mesh.vertices.reserve(static_cast<size_t>(ni) * nj);
  for (const auto& row : table)
    for (const auto& v : row) mesh.vertices.push_back(v);
  auto id = [nj](int i, int j) { return i * nj + j; };
  for (int i = 0; i + 1 < ni; ++i) {
    for (int j = 0; j + 1 < nj; ++j)
      mesh.quads.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
    if (wrap_j)
      mesh.quads.push_back({id(i, nj - 1), id(i + 1, nj - 1), id(i + 1, 0), id(i, 0)});
  }
  return mesh;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::InvalidParameter, "cannot open for writing: " + path);
  out << content;
  require(out.good(), ErrorCode::InvalidParameter, "write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::InvalidParameter, "cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace cmcwb
