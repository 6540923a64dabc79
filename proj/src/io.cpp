#include <sfd/io.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

namespace sfd {

Vector read_field_csv(const std::string& path, Index expected_panels) {
  std::ifstream in(path);
  if (!in) throw NumericalError("cannot open field file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw NumericalError(path + ": empty field file");
  if (line.find("panel_index") == std::string::npos)
    throw NumericalError(path + ": missing 'panel_index,vx,vy,vz' header");

  Vector field = Vector::Zero(3 * expected_panels);
  Vector seen = Vector::Zero(expected_panels);
  Index rows = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    std::istringstream ss(line);
    std::string tok;
    long idx = -1;
    double v[3];
    if (!std::getline(ss, tok, ',')) throw NumericalError(path + ": malformed row '" + line + "'");
    idx = std::stol(tok);
    for (int c = 0; c < 3; ++c) {
      if (!std::getline(ss, tok, ','))
        throw NumericalError(path + ": malformed row '" + line + "'");
      v[c] = std::stod(tok);
      if (!std::isfinite(v[c]))
        throw NumericalError(path + ": non-finite value in row '" + line + "'");
    }
    if (idx < 0 || idx >= expected_panels)
      throw NumericalError(path + ": panel index " + std::to_string(idx) +
                           " outside 0.." + std::to_string(expected_panels - 1));
    for (int c = 0; c < 3; ++c) field[3 * idx + c] = v[c];
    seen[idx] += 1;
    ++rows;
  }
  if (rows != expected_panels || seen.minCoeff() < 1 || seen.maxCoeff() > 1)
    throw NumericalError(path + ": field has " + std::to_string(rows) + " rows, expected " +
                         std::to_string(expected_panels));
  return field;
}

void write_field_csv(const std::string& path, const Vector& field) {
  std::ofstream out(path);
  if (!out) throw NumericalError("cannot write field file '" + path + "'");
  out.precision(17);
  out << "panel_index,vx,vy,vz\n";
  const Index n = field.size() / 3;
  for (Index i = 0; i < n; ++i)
    out << i << ',' << field[3 * i] << ',' << field[3 * i + 1] << ',' << field[3 * i + 2] << '\n';
}

void write_field_vtk(const std::string& path, const SurfaceMesh& mesh, const Vector& field,
                     const std::string& field_name) {
  const Index n = mesh.num_panels();
  if (field.size() != 3 * n) throw NumericalError("field size does not match the mesh");
  std::ofstream out(path);
  if (!out) throw NumericalError("cannot write VTK file '" + path + "'");
  out.precision(12);
  out << "# vtk DataFile Version 3.0\n"
      << "panel field " << field_name << "\n"
      << "ASCII\n"
      << "DATASET POLYDATA\n"
      << "POINTS " << n << " double\n";
  for (Index i = 0; i < n; ++i)
    out << mesh.centroids(i, 0) << ' ' << mesh.centroids(i, 1) << ' ' << mesh.centroids(i, 2)
        << '\n';
  out << "POINT_DATA " << n << "\n"
      << "VECTORS " << field_name << " double\n";
  for (Index i = 0; i < n; ++i)
    out << field[3 * i] << ' ' << field[3 * i + 1] << ' ' << field[3 * i + 2] << '\n';
}

void dump_operator(const std::string& path, const DiscreteOperator& op) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw NumericalError("cannot write operator dump '" + path + "'");
  const std::uint64_t rows = op.matrix.rows();
  const std::uint64_t cols = op.matrix.cols();
  const std::uint32_t name_len = static_cast<std::uint32_t>(op.name.size());
  out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
  out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
  out.write(reinterpret_cast<const char*>(&name_len), sizeof name_len);
  out.write(op.name.data(), name_len);
  for (Index i = 0; i < op.matrix.rows(); ++i)
    for (Index j = 0; j < op.matrix.cols(); ++j) {
      const double v = op.matrix(i, j);
      out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
}

DiscreteOperator read_operator_dump(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NumericalError("cannot open operator dump '" + path + "'");
  std::uint64_t rows = 0, cols = 0;
  std::uint32_t name_len = 0;
  in.read(reinterpret_cast<char*>(&rows), sizeof rows);
  in.read(reinterpret_cast<char*>(&cols), sizeof cols);
  in.read(reinterpret_cast<char*>(&name_len), sizeof name_len);
  DiscreteOperator op;
  op.name.resize(name_len);
  in.read(op.name.data(), name_len);
  op.matrix.resize(static_cast<Index>(rows), static_cast<Index>(cols));
  for (Index i = 0; i < op.matrix.rows(); ++i)
    for (Index j = 0; j < op.matrix.cols(); ++j) {
      double v;
      in.read(reinterpret_cast<char*>(&v), sizeof v);
      op.matrix(i, j) = v;
    }
  if (!in) throw NumericalError(path + ": truncated operator dump");
  return op;
}

void write_spectrum_csv(const std::string& path, const std::string& label, const Vector& values,
                        Index retained) {
  std::ofstream out(path);
  if (!out) throw NumericalError("cannot write spectrum file '" + path + "'");
  out.precision(17);
  out << "label,index,value,retained\n";
  for (Index i = 0; i < values.size(); ++i)
    out << label << ',' << i << ',' << values[i] << ',' << (i < retained ? 1 : 0) << '\n';
}

}  // namespace sfd
