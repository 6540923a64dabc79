#pragma once

#include <sfd/mesh.hpp>
#include <sfd/operators.hpp>
#include <sfd/star_metric.hpp>
#include <sfd/types.hpp>

#include <string>

namespace sfd {

// Panel vector fields as CSV with header panel_index,vx,vy,vz.
Vector read_field_csv(const std::string& path, Index expected_panels);
void write_field_csv(const std::string& path, const Vector& field);

// Legacy ASCII VTK polydata: centroids as points, the field as point data.
void write_field_vtk(const std::string& path, const SurfaceMesh& mesh, const Vector& field,
                     const std::string& field_name);

// Binary operator dump: rows, cols (uint64), name length (uint32), name
// bytes, then row-major doubles.
void dump_operator(const std::string& path, const DiscreteOperator& op);
DiscreteOperator read_operator_dump(const std::string& path);

// One line per singular value: index, value, retained flag.
void write_spectrum_csv(const std::string& path, const std::string& label, const Vector& values,
                        Index retained);

}  // namespace sfd
