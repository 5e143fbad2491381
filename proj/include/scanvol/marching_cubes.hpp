#pragma once

#include "scanvol/grid.hpp"
#include "scanvol/mesh.hpp"

namespace scanvol {

// Which side of the iso-level is the object interior. The solver convention
// in this project makes phi larger inside the object (normals point inward),
// so reconstruction uses Above; signed-distance fixtures use Below.
enum class InteriorSide { Below, Above };

// Standard 256-case marching cubes on phi - iso with linear edge
// interpolation. Vertices are welded by grid-edge identity (at most one
// vertex per grid edge) and interpolation always runs in the canonical
// lower-to-upper node direction, so coincident cell faces share bitwise
// identical vertices. Triangles are wound so their normals point away from
// the declared interior. Negating the field and flipping the side yields a
// bitwise identical mesh. Throws empty_mesh if no cell straddles the level.
TriangleMesh marching_cubes(const ScalarField& phi, double iso, InteriorSide side);

// Table introspection for exhaustive consistency checking: the triangle
// list (edge indices, -1 terminated) for one of the 256 corner sign
// configurations, in canonical (pre-flip) order.
const int* marching_cubes_case(int configuration);

}  // namespace scanvol
