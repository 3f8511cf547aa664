#pragma once

#include <string>

#include "viewplan/geometry.hpp"

namespace viewplan {

// Watertight primitives for synthetic experiments. Dimensions are raw; run
// normalize_mesh afterwards to pose them on the table plane.
Mesh make_box(double sx = 1.0, double sy = 1.0, double sz = 1.0);
Mesh make_icosphere(int subdivisions = 2, double radius = 1.0);
Mesh make_ellipsoid(double rx, double ry, double rz, int subdivisions = 2);
Mesh make_cylinder(double radius = 0.5, double height = 1.0, int segments = 24);
Mesh make_cone(double radius = 0.5, double height = 1.0, int segments = 24);
Mesh make_capsule(double radius = 0.5, double height = 1.0, int segments = 16);

// Lookup by name ("box", "icosphere", ...); throws ArgumentError otherwise.
Mesh make_shape(const std::string& name);
std::vector<std::string> shape_names();

}  // namespace viewplan
